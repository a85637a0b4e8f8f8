//! Adaptive Gauss-Legendre quadrature for complex-valued integrands.
//!
//! The integrator compares a 20-point and a 40-point Gauss-Legendre rule on
//! each panel and bisects panels whose disagreement exceeds their share of
//! the requested absolute tolerance. Smooth envelope-type integrands settle
//! in a handful of panels; a panel budget guards against non-integrable or
//! pathological inputs, which surface as
//! [`SimError::QuadratureNonConvergence`].

use crate::error::{Result, SimError};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Maximum number of panel bisections before giving up.
const MAX_SPLITS: usize = 4096;

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
///
/// Nodes are the roots of the Legendre polynomial P_n, found by Newton
/// iteration from the Chebyshev-like initial guess; weights are
/// 2 / ((1 - x^2) P_n'(x)^2).
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        // Newton iteration on P_n(x); the three-term recurrence also yields
        // the derivative via P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1).
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let k = k as f64;
            let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn rule_20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(20))
}

fn rule_40() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(40))
}

fn apply_rule<F>(f: &F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.0.iter().zip(rule.1.iter()) {
        acc += f(mid + half * x) * *w;
    }
    acc * half
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// `a > b` integrates with the usual sign flip. Errors with
/// [`SimError::QuadratureNonConvergence`] when the panel budget is exhausted
/// before the summed panel-error estimates drop below `abs_tol`, and with
/// [`SimError::InvalidParameter`] for non-finite bounds or a non-positive
/// tolerance.
pub fn integrate<F>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if abs_tol.is_nan() || abs_tol <= 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "integration tolerance must be positive, got {abs_tol}"
        )));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if a > b {
        return integrate(f, b, a, abs_tol).map(|v| -v);
    }

    let width = b - a;
    // Panels carry a tolerance proportional to their width so the summed
    // error estimate stays below abs_tol regardless of how splitting goes.
    let mut stack = vec![(a, b)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut achieved = 0.0_f64;
    let mut splits = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        let coarse = apply_rule(f, lo, hi, rule_20());
        let fine = apply_rule(f, lo, hi, rule_40());
        let err = (fine - coarse).norm();
        let share = abs_tol * ((hi - lo) / width);
        if err <= share || splits >= MAX_SPLITS {
            total += fine;
            achieved += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
            splits += 1;
        }
    }
    if achieved > abs_tol {
        return Err(SimError::QuadratureNonConvergence {
            requested: abs_tol,
            achieved,
        });
    }
    Ok(total)
}
