//! Unitary mode transforms and triangular mesh decomposition.
//!
//! Passive linear-optical elements act on mode amplitudes as unitary
//! matrices. This module provides the balanced beam splitter used throughout
//! the device graphs, a validated [`UnitaryMatrix`] wrapper, a Reck-style
//! triangular decomposition of arbitrary unitaries into two-mode stages, and
//! seeded Haar-random unitaries for property tests.

use crate::error::{Result, SimError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Default tolerance for the unitarity check ‖U†U − I‖_max.
pub const UNITARITY_TOL: f64 = 1e-12;

/// A square complex matrix verified unitary at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    /// Row-major entries, length dim².
    entries: Vec<Complex64>,
}

/// Max-norm deviation of U†U from the identity, for row-major `entries`.
pub fn unitarity_deviation(dim: usize, entries: &[Complex64]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::ZERO;
            for k in 0..dim {
                acc += entries[k * dim + i].conj() * entries[k * dim + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

impl UnitaryMatrix {
    /// Wrap row-major `entries` as a dim×dim unitary, rejecting matrices
    /// whose unitarity deviation exceeds [`UNITARITY_TOL`].
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(SimError::InvalidParameter(format!(
                "expected {dim}×{dim} = {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let deviation = unitarity_deviation(dim, &entries);
        if deviation > UNITARITY_TOL {
            return Err(SimError::NotUnitary {
                deviation,
                tolerance: UNITARITY_TOL,
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at (row, col).
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Apply the transform to a vector of mode amplitudes: out = U · in.
    pub fn apply_transform(&self, amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
        if amplitudes.len() != self.dim {
            return Err(SimError::InvalidParameter(format!(
                "amplitude vector length {} does not match dimension {}",
                amplitudes.len(),
                self.dim
            )));
        }
        Ok((0..self.dim)
            .map(|r| {
                (0..self.dim)
                    .map(|c| self.get(r, c) * amplitudes[c])
                    .sum()
            })
            .collect())
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn from_dmatrix(m: &DMatrix<Complex64>) -> Result<Self> {
        let dim = m.nrows();
        let entries = (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)])
            .collect();
        Self::new(dim, entries)
    }
}

/// The balanced beam splitter used by every device in this crate:
///
/// ```text
///        | -1/√2   1/√2 |
///   U  = |  1/√2   1/√2 |
/// ```
///
/// Output 0 is the difference port, output 1 the sum port.
pub fn balanced_beam_splitter() -> UnitaryMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    UnitaryMatrix::new(
        2,
        vec![
            Complex64::new(-r, 0.0),
            Complex64::new(r, 0.0),
            Complex64::new(r, 0.0),
            Complex64::new(r, 0.0),
        ],
    )
    .expect("balanced beam splitter is unitary")
}

/// One two-mode stage of a triangular mesh, acting on modes (i, j), i < j:
///
/// ```text
///   rows/cols i,j of the embedded matrix:
///        | e^{iφ} cos θ    -sin θ |
///        | e^{iφ} sin θ     cos θ |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStage {
    pub mode_i: usize,
    pub mode_j: usize,
    pub mixing_angle: f64,
    pub phase: f64,
}

impl MeshStage {
    /// Embed the stage into a dim×dim matrix.
    pub fn embed(&self, dim: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::identity(dim, dim);
        let (s, c) = self.mixing_angle.sin_cos();
        let ph = Complex64::from_polar(1.0, self.phase);
        m[(self.mode_i, self.mode_i)] = ph * c;
        m[(self.mode_i, self.mode_j)] = Complex64::new(-s, 0.0);
        m[(self.mode_j, self.mode_i)] = ph * s;
        m[(self.mode_j, self.mode_j)] = Complex64::new(c, 0.0);
        m
    }
}

/// A factored unitary: U = diag(e^{iα}) · S₁ · S₂ · … · Sₘ, stages applied
/// left to right in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshPlan {
    pub dim: usize,
    pub stages: Vec<MeshStage>,
    /// Output phases α, one per mode.
    pub output_phases: Vec<f64>,
}

/// Triangular (Reck-style) decomposition of a unitary into two-mode stages.
///
/// Lower-triangular entries are annihilated column by column from the bottom
/// row up by right-multiplying stage adjoints; what remains is a diagonal of
/// pure phases. Stages that would be the identity are skipped, so the
/// identity matrix yields an empty plan.
pub fn reck_decompose(u: &UnitaryMatrix) -> MeshPlan {
    let dim = u.dim();
    let mut w = u.to_dmatrix();
    let mut stages_rev: Vec<MeshStage> = Vec::new();
    for r in (1..dim).rev() {
        for c in 0..r {
            let a = w[(r, c)];
            let b = w[(r, r)];
            if a.norm() == 0.0 {
                continue;
            }
            let theta = a.norm().atan2(b.norm());
            let phase = a.arg() - if b.norm() == 0.0 { 0.0 } else { b.arg() };
            let stage = MeshStage {
                mode_i: c,
                mode_j: r,
                mixing_angle: theta,
                phase,
            };
            // w ← w · S†, which zeroes w[(r, c)] by construction.
            let adjoint = stage.embed(dim).adjoint();
            w *= adjoint;
            stages_rev.push(stage);
        }
    }
    // Stages were created right-to-left of the final product; reverse so
    // reconstruction is a plain left-to-right product after the diagonal.
    stages_rev.reverse();
    let output_phases = (0..dim).map(|k| w[(k, k)].arg()).collect();
    MeshPlan {
        dim,
        stages: stages_rev,
        output_phases,
    }
}

/// Rebuild the unitary from a [`MeshPlan`]: U = diag(e^{iα}) · S₁ · … · Sₘ.
pub fn reck_reconstruct(plan: &MeshPlan) -> Result<UnitaryMatrix> {
    let dim = plan.dim;
    if plan.output_phases.len() != dim {
        return Err(SimError::InvalidParameter(format!(
            "plan has {} output phases for dimension {dim}",
            plan.output_phases.len()
        )));
    }
    let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        plan.output_phases.iter().map(|&a| Complex64::from_polar(1.0, a)),
    ));
    for stage in &plan.stages {
        if stage.mode_i >= stage.mode_j || stage.mode_j >= dim {
            return Err(SimError::InvalidParameter(format!(
                "stage modes ({}, {}) invalid for dimension {dim}",
                stage.mode_i, stage.mode_j
            )));
        }
        m *= stage.embed(dim);
    }
    UnitaryMatrix::from_dmatrix(&m)
}

/// Uniform f64 in [0, 1) from the top 53 bits of a u64.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal pair via Box-Muller.
fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = 1.0 - uniform(rng); // (0, 1]: keeps the log finite
    let u2 = uniform(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Seeded Haar-random unitary: QR of a complex Ginibre matrix, with the R
/// diagonal's phases folded into Q to make the distribution uniform and the
/// result a deterministic function of `seed`.
pub fn random_unitary(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(SimError::InvalidParameter(
            "random unitary dimension must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let (x, y) = normal_pair(&mut rng);
        Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    UnitaryMatrix::from_dmatrix(&q)
}
