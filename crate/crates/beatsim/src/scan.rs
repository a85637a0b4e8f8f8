//! Parameter scans over coincidence probabilities and beat-frequency
//! analysis of detection-time-separation scans.

use crate::correlations::{
    assignment_amplitudes, closed_form_peak_scale, coincidence_closed_form_shifted,
    coincidence_integrated, coincidence_probability, hom_coincidence, DetectionEvent,
};
use crate::device::{
    build_beam_splitter_device, build_feedback_device, feedback_detection_times, FeedbackParams,
};
use crate::error::{Result, SimError};
use crate::wavepacket::{Amplitude, WavepacketParams};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::fmt;
use std::str::FromStr;

/// Which computation backs a scan point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// The device-specific bracket formula (feedback preset) or the
    /// analytic Hong–Ou–Mandel rate (beam-splitter preset).
    ClosedForm,
    /// The general history-sum engine on the device graph.
    HistorySum,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::ClosedForm => "closed_form",
            Engine::HistorySum => "history_sum",
        })
    }
}

impl FromStr for Engine {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Engine::ClosedForm),
            "history_sum" => Ok(Engine::HistorySum),
            other => Err(SimError::InvalidParameter(format!(
                "unknown engine '{other}'; valid engines: closed_form, history_sum"
            ))),
        }
    }
}

/// A scannable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// Input-arm relative delay τ.
    Tau,
    /// Stage shifter delay δτ.
    DTau,
    /// Envelope reference time t₀.
    T0,
    /// Carrier detuning Δ added to source 1.
    Detuning,
    /// Displacement of the second detection gate from its derived time.
    DtSep,
}

pub const AXIS_NAMES: &str = "tau, dtau, t0, detuning, dt_sep";

impl fmt::Display for ScanAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanAxis::Tau => "tau",
            ScanAxis::DTau => "dtau",
            ScanAxis::T0 => "t0",
            ScanAxis::Detuning => "detuning",
            ScanAxis::DtSep => "dt_sep",
        })
    }
}

impl FromStr for ScanAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(ScanAxis::Tau),
            "dtau" => Ok(ScanAxis::DTau),
            "t0" => Ok(ScanAxis::T0),
            "detuning" => Ok(ScanAxis::Detuning),
            "dt_sep" => Ok(ScanAxis::DtSep),
            other => Err(SimError::InvalidParameter(format!(
                "unknown scan axis '{other}'; valid axes: {AXIS_NAMES}"
            ))),
        }
    }
}

/// One scan dimension: an inclusive uniform grid of `steps` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub axis: ScanAxis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(axis: ScanAxis, start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(SimError::InvalidParameter(format!(
                "axis {axis}: steps must be at least 1"
            )));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "axis {axis}: bounds must be finite, got {start}..{stop}"
            )));
        }
        Ok(Self { axis, start, stop, steps })
    }

    /// Grid value at index `i` (endpoints inclusive; `steps` = 1 pins the
    /// start value).
    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// Device preset a scan runs on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// The recursive feedback interferometer ("fig1").
    Feedback(FeedbackParams),
    /// A bare balanced splitter ("beamsplitter"); supports the τ and
    /// detuning axes with the Hong–Ou–Mandel rate as its closed form.
    BeamSplitter,
    /// Two uncoupled delay lines ("passthrough"); has no scannable
    /// coincidence structure and rejects every axis.
    PassThrough { delay_1: f64, delay_2: f64 },
}

/// Everything a scan needs besides the axes: the device, both source
/// packets, the envelope reference time, and the history truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSetup {
    pub device: Preset,
    pub source_1: WavepacketParams,
    pub source_2: WavepacketParams,
    pub base_t0: f64,
    pub max_passes: u32,
}

/// A completed scan: the axes that were swept (row-major, last axis
/// fastest) and one probability per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axes: Vec<AxisSpec>,
    pub values: Vec<f64>,
    pub engine: Engine,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Split a row-major flat index into per-axis indices (last axis fastest).
pub fn decode_flat(axes: &[AxisSpec], flat: usize) -> Result<Vec<usize>> {
    let total: usize = axes.iter().map(|a| a.steps).product();
    if flat >= total {
        return Err(SimError::InvalidParameter(format!(
            "flat index {flat} out of range for {total} grid points"
        )));
    }
    let mut idx = vec![0; axes.len()];
    let mut rem = flat;
    for (k, a) in axes.iter().enumerate().rev() {
        idx[k] = rem % a.steps;
        rem /= a.steps;
    }
    Ok(idx)
}

fn detuned(p: &WavepacketParams, delta: f64) -> Result<WavepacketParams> {
    WavepacketParams::new(p.center_time, p.width, p.carrier_freq + delta, p.phase_offset)
}

/// Evaluate one grid point of a scan, identified by its row-major flat
/// index. Pure: same inputs always give the same value, so grid points can
/// be computed in any order or in parallel.
pub fn scan_point(
    setup: &ScanSetup,
    axes: &[AxisSpec],
    engine: Engine,
    flat_index: usize,
) -> Result<f64> {
    let idx = decode_flat(axes, flat_index)?;

    let mut t0 = setup.base_t0;
    let mut delta = 0.0;
    let mut gate_shift = 0.0;
    let (mut tau, mut dtau) = match setup.device {
        Preset::Feedback(fp) => (fp.input_delay, fp.shifter_delay),
        _ => (0.0, 0.0),
    };
    for (a, &i) in axes.iter().zip(&idx) {
        let v = a.value(i);
        match a.axis {
            ScanAxis::Tau => tau = v,
            ScanAxis::DTau => dtau = v,
            ScanAxis::T0 => t0 = v,
            ScanAxis::Detuning => delta = v,
            ScanAxis::DtSep => gate_shift = v,
        }
    }
    let p1 = detuned(&setup.source_1, delta)?;
    let p2 = setup.source_2;

    match setup.device {
        Preset::Feedback(base) => {
            let fp = FeedbackParams::new(tau, dtau, base.loop_delay)?
                .with_reflectivity(base.mirror_reflectivity)?;
            match engine {
                Engine::ClosedForm => {
                    Ok(coincidence_closed_form_shifted(t0, tau, dtau, gate_shift, &p1, &p2))
                }
                Engine::HistorySum => {
                    let spec = build_feedback_device(&fp)?;
                    let (t1, t2) = feedback_detection_times(&fp, t0);
                    coincidence_probability(
                        &spec,
                        &[(spec.inputs[0], p1), (spec.inputs[1], p2)],
                        &[
                            DetectionEvent { detector: spec.detectors[0], time: t1 },
                            DetectionEvent { detector: spec.detectors[1], time: t2 + gate_shift },
                        ],
                        setup.max_passes,
                    )
                }
            }
        }
        Preset::BeamSplitter => {
            for a in axes {
                if !matches!(a.axis, ScanAxis::Tau | ScanAxis::Detuning) {
                    return Err(SimError::InvalidParameter(format!(
                        "beam-splitter preset cannot scan axis {}; supported: tau, detuning",
                        a.axis
                    )));
                }
            }
            match engine {
                Engine::ClosedForm => hom_coincidence(&p1, &p2, tau),
                Engine::HistorySum => {
                    // shifting the packet center by τ changes the overlap
                    // only by a global carrier phase, so the integrated
                    // rate matches the analytic delay-τ form
                    let p2s = WavepacketParams::new(
                        p2.center_time + tau,
                        p2.width,
                        p2.carrier_freq,
                        p2.phase_offset,
                    )?;
                    let spec = build_beam_splitter_device();
                    coincidence_integrated(
                        &spec,
                        &[(spec.inputs[0], p1), (spec.inputs[1], p2s)],
                        (spec.detectors[0], spec.detectors[1]),
                        setup.max_passes,
                    )
                }
            }
        }
        Preset::PassThrough { .. } => Err(SimError::InvalidParameter(
            "pass-through preset has no scannable coincidence structure".into(),
        )),
    }
}

/// Sweep one or two axes and collect the probability grid (row-major, last
/// axis fastest).
pub fn beat_scan(setup: &ScanSetup, axes: &[AxisSpec], engine: Engine) -> Result<ScanResult> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(SimError::InvalidParameter(format!(
            "scans take one or two axes, got {}",
            axes.len()
        )));
    }
    let total: usize = axes.iter().map(|a| a.steps).product();
    let mut values = Vec::with_capacity(total);
    for flat in 0..total {
        let v = scan_point(setup, axes, engine, flat)?;
        if v < -1e-15 {
            return Err(SimError::InvalidParameter(format!(
                "scan point {flat} produced probability {v} below -1e-15"
            )));
        }
        values.push(v.max(0.0));
    }
    Ok(ScanResult { axes: axes.to_vec(), values, engine })
}

/// The oscillating part of the coincidence signal along a detection-time
/// separation sweep: the interference cross term 2·T₁(s)·conj(T₂(s)) of the
/// two assignment amplitudes, sampled on an endpoint-exclusive grid of `n`
/// points spanning `span` around the derived gate separation.
///
/// Its real part is exactly the interference contribution to the
/// coincidence probability, P − |T₁|² − |T₂|²; keeping the complex product
/// makes the spectrum one-sided so the detuning beat stands out as the
/// dominant component. Returns the samples and the grid step.
pub fn beat_cross_sequence(
    setup: &ScanSetup,
    span: f64,
    n: usize,
) -> Result<(Vec<Amplitude>, f64)> {
    let Preset::Feedback(base) = setup.device else {
        return Err(SimError::InvalidParameter(
            "beat analysis needs the feedback preset".into(),
        ));
    };
    if n < 2 || !span.is_finite() || span <= 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "beat analysis needs n ≥ 2 samples over a positive span, got n = {n}, span = {span}"
        )));
    }
    let spec = build_feedback_device(&base)?;
    let (t1, t2) = feedback_detection_times(&base, setup.base_t0);
    let step = span / n as f64;
    let sources = [(spec.inputs[0], setup.source_1), (spec.inputs[1], setup.source_2)];
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let s = -span / 2.0 + step * k as f64;
        let [a1, a2] = assignment_amplitudes(
            &spec,
            &sources,
            &[
                DetectionEvent { detector: spec.detectors[0], time: t1 },
                DetectionEvent { detector: spec.detectors[1], time: t2 + s },
            ],
            setup.max_passes,
        )?;
        samples.push(2.0 * a1 * a2.conj());
    }
    Ok((samples, step))
}

/// Location of the strongest non-DC spectral component of a uniformly
/// sampled sequence. Returns `(frequency, bin_width)`; the frequency is
/// signed, with bins above n/2 mapped to their negative aliases.
pub fn dominant_frequency(samples: &[Complex64], step: f64) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(SimError::InvalidParameter(
            "frequency analysis needs at least two samples".into(),
        ));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "frequency analysis needs a positive sample step, got {step}"
        )));
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best_k = 1;
    let mut best = buf[1].norm_sqr();
    for (k, v) in buf.iter().enumerate().skip(2) {
        if v.norm_sqr() > best {
            best = v.norm_sqr();
            best_k = k;
        }
    }
    let span = n as f64 * step;
    let freq = if best_k <= n / 2 {
        best_k as f64 / span
    } else {
        (best_k as f64 - n as f64) / span
    };
    Ok((freq, 1.0 / span))
}

/// Largest closed-form value the sources could produce; used to scale
/// absolute tolerances on near-zero scans.
pub fn peak_scale(setup: &ScanSetup) -> f64 {
    closed_form_peak_scale(&setup.source_1, &setup.source_2)
}
