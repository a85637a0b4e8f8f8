//! Gaussian single-photon wavepackets.
//!
//! A continuous-mode photon is described by a normalized temporal mode
//! function ζ(t) = e^{-i(ωt + φ₀)} ε(t), where the envelope
//! ε(t) = (πσ²)^(-1/4) exp(-(t - t_c)² / (2σ²)) carries unit L² norm. All
//! interference quantities in this crate reduce to evaluations of ζ and to
//! overlap integrals ∫ ζ₁*(t) ζ₂(t - delay) dt, computed here with adaptive
//! Gauss-Legendre quadrature.

use crate::error::{Result, SimError};
use crate::quadrature;
use num_complex::Complex64;

/// A complex probability amplitude.
pub type Amplitude = Complex64;

/// Absolute tolerance used for all overlap quadratures.
pub const OVERLAP_TOL: f64 = 1e-13;

/// Parameters of a Gaussian wavepacket mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketParams {
    /// Envelope center t_c.
    pub center_time: f64,
    /// Envelope width σ (standard-deviation-like scale, > 0).
    pub width: f64,
    /// Carrier angular frequency ω.
    pub carrier_freq: f64,
    /// Constant carrier phase φ₀.
    pub phase_offset: f64,
}

impl WavepacketParams {
    /// Validated constructor: `width` must be positive and every field finite.
    pub fn new(center_time: f64, width: f64, carrier_freq: f64, phase_offset: f64) -> Result<Self> {
        let p = Self {
            center_time,
            width,
            carrier_freq,
            phase_offset,
        };
        for (name, v) in [
            ("center_time", center_time),
            ("width", width),
            ("carrier_freq", carrier_freq),
            ("phase_offset", phase_offset),
        ] {
            if !v.is_finite() {
                return Err(SimError::InvalidParameter(format!(
                    "wavepacket {name} must be finite, got {v}"
                )));
            }
        }
        if width <= 0.0 {
            return Err(SimError::InvalidParameter(format!(
                "wavepacket width must be positive, got {width}"
            )));
        }
        Ok(p)
    }
}

/// Normalized Gaussian envelope ε(t) = (πσ²)^(-1/4) exp(-(t - t_c)²/(2σ²)).
pub fn gaussian_envelope(p: &WavepacketParams, t: f64) -> f64 {
    let u = (t - p.center_time) / p.width;
    (std::f64::consts::PI * p.width * p.width).powf(-0.25) * (-0.5 * u * u).exp()
}

/// Full mode function ζ(t) = e^{-i(ωt + φ₀)} ε(t).
pub fn mode_function(p: &WavepacketParams, t: f64) -> Amplitude {
    Complex64::from_polar(
        gaussian_envelope(p, t),
        -(p.carrier_freq * t + p.phase_offset),
    )
}

/// Integration window covering everything either packet can reach: the union
/// of both envelopes' ±8σ supports (the second one shifted by `delay`).
fn support_union(p1: &WavepacketParams, p2: &WavepacketParams, delay: f64) -> (f64, f64) {
    let lo1 = p1.center_time - 8.0 * p1.width;
    let hi1 = p1.center_time + 8.0 * p1.width;
    let lo2 = p2.center_time + delay - 8.0 * p2.width;
    let hi2 = p2.center_time + delay + 8.0 * p2.width;
    (lo1.min(lo2), hi1.max(hi2))
}

/// Mode overlap ∫ ζ₁*(t) ζ₂(t - delay) dt.
///
/// The magnitude never exceeds 1 (up to quadrature rounding); equal packets
/// at zero delay give exactly 1.
pub fn overlap(p1: &WavepacketParams, p2: &WavepacketParams, delay: f64) -> Result<Amplitude> {
    if !delay.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "overlap delay must be finite, got {delay}"
        )));
    }
    let (lo, hi) = support_union(p1, p2, delay);
    quadrature::integrate(
        &|t| mode_function(p1, t).conj() * mode_function(p2, t - delay),
        lo,
        hi,
        OVERLAP_TOL,
    )
}

/// L² norm of the mode function, computed by quadrature.
///
/// Returns 1 to within the quadrature tolerance for any valid parameters;
/// exposed as a self-check rather than a constant for exactly that reason.
pub fn l2_norm(p: &WavepacketParams) -> Result<f64> {
    let (lo, hi) = (p.center_time - 8.0 * p.width, p.center_time + 8.0 * p.width);
    let sq = quadrature::integrate(
        &|t| {
            let z = mode_function(p, t);
            Complex64::new(z.norm_sqr(), 0.0)
        },
        lo,
        hi,
        OVERLAP_TOL,
    )?;
    Ok(sq.re.sqrt())
}
