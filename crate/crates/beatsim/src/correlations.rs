//! Two-photon coincidence probabilities.
//!
//! Two detection events are *coincident* when one photon reaches each
//! detector. With two input photons there are exactly two ways to assign
//! photons to detection events; the assignments are indistinguishable, so
//! their amplitudes add before squaring. This module provides that general
//! history-sum engine, the device-specific closed form for the recursive
//! feedback interferometer, the Hong–Ou–Mandel baseline, and a
//! Schmidt-number witness for the entanglement of the output joint
//! amplitude.

use crate::device::{
    enumerate_histories, history_field, DeviceSpec, HistoryAmplitude, NodeId,
};
use crate::error::{Result, SimError};
use crate::wavepacket::{gaussian_envelope, mode_function, overlap, Amplitude, WavepacketParams};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// A photon registered at `detector` at laboratory time `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub detector: NodeId,
    pub time: f64,
}

/// Closed-form coincidence probability of the feedback interferometer at
/// its derived gate times, written exactly as the four two-term brackets
/// over the photon mode functions ζ₁, ζ₂:
///
/// ```text
/// B1 = ζ₁(t₀+τ) − ζ₁(t₀+τ+δτ)        B3 = ζ₂(t₀) − ζ₂(t₀+δτ)
/// B2 = −ζ₂(t₀+τ) + ζ₂(t₀+τ+2δτ)      B4 = −ζ₁(t₀+τ) + ζ₁(t₀+τ+2δτ)
/// P  = |B1·B2 + B3·B4|² / 2¹¹
/// ```
///
/// The brackets are evaluated as written so that δτ = 0 cancels exactly in
/// floating arithmetic: the coincidence rate is then zero even when τ ≠ 0.
pub fn coincidence_closed_form(
    t0: f64,
    tau: f64,
    dtau: f64,
    p1: &WavepacketParams,
    p2: &WavepacketParams,
) -> f64 {
    coincidence_closed_form_shifted(t0, tau, dtau, 0.0, p1, p2)
}

/// [`coincidence_closed_form`] with the second (two-pass) detection gate
/// displaced by `gate_shift` from its derived time. The shift enters the
/// two-pass brackets B2 and B4 only; scanning it sweeps the detection-time
/// separation and exposes the quantum beat when the carriers are detuned.
pub fn coincidence_closed_form_shifted(
    t0: f64,
    tau: f64,
    dtau: f64,
    gate_shift: f64,
    p1: &WavepacketParams,
    p2: &WavepacketParams,
) -> f64 {
    let z1 = |t: f64| mode_function(p1, t);
    let z2 = |t: f64| mode_function(p2, t);
    let s = gate_shift;
    let b1 = z1(t0 + tau) - z1(t0 + tau + dtau);
    let b2 = -z2(t0 + tau + s) + z2(t0 + tau + 2.0 * dtau + s);
    let b3 = z2(t0) - z2(t0 + dtau);
    let b4 = -z1(t0 + tau + s) + z1(t0 + tau + 2.0 * dtau + s);
    (b1 * b2 + b3 * b4).norm_sqr() / 2048.0
}

/// Upper bound on [`coincidence_closed_form`] over all arguments: each
/// bracket is at most twice the envelope peak, so |B·B + B·B|² ≤ 64·(ε₁ε₂)².
/// Used to set absolute tolerances ("peak scale") in null tests.
pub fn closed_form_peak_scale(p1: &WavepacketParams, p2: &WavepacketParams) -> f64 {
    let e1 = gaussian_envelope(p1, p1.center_time);
    let e2 = gaussian_envelope(p2, p2.center_time);
    64.0 * (e1 * e2).powi(2) / 2048.0
}

fn field_from_histories(hs: &[HistoryAmplitude], p: &WavepacketParams, t: f64) -> Amplitude {
    hs.iter().map(|h| history_field(h, p, t)).sum()
}

/// The two photon-to-event assignment amplitudes `[T₁, T₂]`:
/// T₁ routes photon 1 to the first event and photon 2 to the second,
/// T₂ the reverse. The coincidence amplitude is their sum.
pub fn assignment_amplitudes(
    spec: &DeviceSpec,
    sources: &[(NodeId, WavepacketParams); 2],
    events: &[DetectionEvent; 2],
    max_passes: u32,
) -> Result<[Amplitude; 2]> {
    // F[a][d]: field of photon a's histories at event d's detector and time
    let mut f = [[Complex64::ZERO; 2]; 2];
    for (a, (src, packet)) in sources.iter().enumerate() {
        for (d, ev) in events.iter().enumerate() {
            let hs = enumerate_histories(spec, *src, ev.detector, max_passes)?;
            f[a][d] = field_from_histories(&hs, packet, ev.time);
        }
    }
    Ok([f[0][0] * f[1][1], f[1][0] * f[0][1]])
}

/// Two-photon coincidence amplitude: the permutation sum T₁ + T₂.
pub fn coincidence_amplitude(
    spec: &DeviceSpec,
    sources: &[(NodeId, WavepacketParams); 2],
    events: &[DetectionEvent; 2],
    max_passes: u32,
) -> Result<Amplitude> {
    let [t1, t2] = assignment_amplitudes(spec, sources, events, max_passes)?;
    Ok(t1 + t2)
}

/// Coincidence probability density |T₁ + T₂|² for one event pair.
///
/// Swapping the two events permutes T₁ and T₂ and leaves the sum — and the
/// probability — bitwise unchanged.
pub fn coincidence_probability(
    spec: &DeviceSpec,
    sources: &[(NodeId, WavepacketParams); 2],
    events: &[DetectionEvent; 2],
    max_passes: u32,
) -> Result<f64> {
    Ok(coincidence_amplitude(spec, sources, events, max_passes)?.norm_sqr())
}

/// Coincidence probability integrated over both detection times:
/// ∫∫ |A(t₁, t₂)|² dt₁ dt₂.
///
/// The double integral factorizes into single-photon Gram integrals
/// G\[d\]\[a\]\[b\] = ∫ F_{a,d}(t)·conj(F_{b,d}(t)) dt, each of which reduces to
/// pairwise envelope overlaps — no two-dimensional quadrature is performed.
pub fn coincidence_integrated(
    spec: &DeviceSpec,
    sources: &[(NodeId, WavepacketParams); 2],
    detectors: (NodeId, NodeId),
    max_passes: u32,
) -> Result<f64> {
    let dets = [detectors.0, detectors.1];
    // histories[a][d]
    let mut histories: Vec<Vec<Vec<HistoryAmplitude>>> = Vec::with_capacity(2);
    for (src, _) in sources {
        let per_det = dets
            .iter()
            .map(|&d| enumerate_histories(spec, *src, d, max_passes))
            .collect::<Result<Vec<_>>>()?;
        histories.push(per_det);
    }
    let gram = |d: usize, a: usize, b: usize| -> Result<Complex64> {
        let mut acc = Complex64::ZERO;
        for h in &histories[a][d] {
            for h2 in &histories[b][d] {
                // ∫ ζ_a(t−x) conj(ζ_b(t−y)) dt = conj(overlap(p_a, p_b, y−x))
                let ov = overlap(
                    &sources[a].1,
                    &sources[b].1,
                    h2.total_delay - h.total_delay,
                )?;
                acc += h.weight * h2.weight.conj() * ov.conj();
            }
        }
        Ok(acc)
    };
    let p = gram(0, 0, 0)?.re * gram(1, 1, 1)?.re
        + gram(0, 1, 1)?.re * gram(1, 0, 0)?.re
        + 2.0 * (gram(0, 0, 1)? * gram(1, 1, 0)?).re;
    Ok(p.max(0.0))
}

/// Hong–Ou–Mandel coincidence rate of two photons meeting on a balanced
/// splitter with relative delay τ: ½·(1 − |overlap(p₁, p₂, τ)|²) ∈ [0, ½].
pub fn hom_coincidence(p1: &WavepacketParams, p2: &WavepacketParams, tau: f64) -> Result<f64> {
    let o = overlap(p1, p2, tau)?;
    Ok((0.5 * (1.0 - o.norm_sqr())).max(0.0))
}

/// Inclusive uniform grid of `n` times centered on `center`.
pub fn time_grid(center: f64, half_width: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(SimError::InvalidParameter(
            "time grid needs at least one point".into(),
        ));
    }
    if !center.is_finite() || !half_width.is_finite() || half_width < 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "time grid needs finite center and non-negative half-width, got {center}, {half_width}"
        )));
    }
    if n == 1 {
        return Ok(vec![center]);
    }
    let step = 2.0 * half_width / (n - 1) as f64;
    Ok((0..n).map(|k| center - half_width + step * k as f64).collect())
}

/// Discretized joint detection amplitude: entry (i, j) is the coincidence
/// amplitude for events (grid_1\[i\] at the first detector, grid_2\[j\] at the
/// second). History sets are enumerated once and reused across the grid.
pub fn joint_amplitude_matrix(
    spec: &DeviceSpec,
    sources: &[(NodeId, WavepacketParams); 2],
    detectors: (NodeId, NodeId),
    grid_1: &[f64],
    grid_2: &[f64],
    max_passes: u32,
) -> Result<DMatrix<Complex64>> {
    if grid_1.len() < 2 || grid_2.len() < 2 {
        return Err(SimError::InvalidParameter(
            "joint amplitude grids need at least two points per axis".into(),
        ));
    }
    let dets = [detectors.0, detectors.1];
    // field_on_grid[a][d][k]: photon a's field at detector d, grid point k
    let mut field_on_grid: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(2);
    for (src, packet) in sources {
        let mut per_det = Vec::with_capacity(2);
        for (d, &det) in dets.iter().enumerate() {
            let hs = enumerate_histories(spec, *src, det, max_passes)?;
            let grid = if d == 0 { grid_1 } else { grid_2 };
            per_det.push(
                grid.iter()
                    .map(|&t| field_from_histories(&hs, packet, t))
                    .collect::<Vec<_>>(),
            );
        }
        field_on_grid.push(per_det);
    }
    Ok(DMatrix::from_fn(grid_1.len(), grid_2.len(), |i, j| {
        field_on_grid[0][0][i] * field_on_grid[1][1][j]
            + field_on_grid[1][0][i] * field_on_grid[0][1][j]
    }))
}

/// Schmidt number K = (Σλ)² / Σλ² over the squared singular values λ of the
/// matrix. K = 1 exactly for a rank-1 (product-state) amplitude; K > 1
/// witnesses entanglement of the discretized joint amplitude.
pub fn schmidt_number(m: &DMatrix<Complex64>) -> Result<f64> {
    let sv = m.clone().svd(false, false).singular_values;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for s in sv.iter() {
        let lambda = s * s;
        sum += lambda;
        sum_sq += lambda * lambda;
    }
    if !sum.is_finite() || sum <= 0.0 {
        return Err(SimError::DegenerateInput(
            "Schmidt number of an all-zero or non-finite matrix".into(),
        ));
    }
    Ok(sum * sum / sum_sq)
}
