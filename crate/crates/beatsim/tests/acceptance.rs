//! Acceptance gate: one test per release criterion, each at its stated
//! tolerance, printing one `[acceptance] criterion N: PASS` line when it
//! holds. Criterion 9 (CLI byte-reproducibility) lives with the CLI crate's
//! integration tests.

use beatsim::correlations::{
    closed_form_peak_scale, coincidence_closed_form, coincidence_probability, hom_coincidence,
    joint_amplitude_matrix, schmidt_number, time_grid, DetectionEvent,
};
use beatsim::device::{
    build_feedback_device, build_pass_through_device, exit_probability, feedback_detection_times,
    FeedbackParams,
};
use beatsim::network::{random_unitary, reck_decompose, reck_reconstruct};
use beatsim::scan::{beat_cross_sequence, dominant_frequency, Preset, ScanSetup};
use beatsim::wavepacket::{mode_function, Amplitude, WavepacketParams};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use std::f64::consts::TAU;

fn packet(c: f64, s: f64, w: f64, f: f64) -> WavepacketParams {
    WavepacketParams::new(c, s, w, f).unwrap()
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

/// Feedback-device coincidence probability from the history-sum engine at
/// the derived detection gates.
fn engine_probability(
    fp: &FeedbackParams,
    t0: f64,
    p1: &WavepacketParams,
    p2: &WavepacketParams,
) -> f64 {
    let spec = build_feedback_device(fp).unwrap();
    let (t1, t2) = feedback_detection_times(fp, t0);
    coincidence_probability(
        &spec,
        &[(spec.inputs[0], *p1), (spec.inputs[1], *p2)],
        &[
            DetectionEvent { detector: spec.detectors[0], time: t1 },
            DetectionEvent { detector: spec.detectors[1], time: t2 },
        ],
        2,
    )
    .unwrap()
}

#[test]
fn criterion_1_null_law_with_zero_shifter_delay() {
    let p1 = packet(0.0, 1.0, 2.0, 0.1);
    let p2 = packet(0.3, 1.25, 1.5, -0.4);
    let scale = closed_form_peak_scale(&p1, &p2);
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEA7);
    for _ in 0..1000 {
        let t0 = uniform(&mut rng, -1.0, 1.0);
        let tau = uniform(&mut rng, 0.0, 2.0);
        let closed = coincidence_closed_form(t0, tau, 0.0, &p1, &p2);
        assert!(
            closed.abs() <= 1e-16 * scale,
            "closed form {closed} at t0={t0}, tau={tau}"
        );
        let fp = FeedbackParams::new(tau, 0.0, 0.8).unwrap();
        let engine = engine_probability(&fp, t0, &p1, &p2);
        assert!(
            engine.abs() < 1e-13 * scale,
            "engine {engine} at t0={t0}, tau={tau}"
        );
    }
    println!("[acceptance] criterion 1: PASS");
}

/// Independent oracle for criterion 2: the closed form's four two-term
/// brackets multiplied out into their eight ζ-products, summed term by
/// term with no shared intermediate structure.
fn expansion_oracle(
    t0: f64,
    tau: f64,
    dtau: f64,
    p1: &WavepacketParams,
    p2: &WavepacketParams,
) -> f64 {
    let z1 = |t: f64| mode_function(p1, t);
    let z2 = |t: f64| mode_function(p2, t);
    let a = t0 + tau;
    let b = t0 + tau + dtau;
    let c = t0 + tau + 2.0 * dtau;
    let sum: Amplitude = -z1(a) * z2(a) + z1(a) * z2(c) + z1(b) * z2(a) - z1(b) * z2(c)
        - z2(t0) * z1(a)
        + z2(t0) * z1(c)
        + z2(t0 + dtau) * z1(a)
        - z2(t0 + dtau) * z1(c);
    sum.norm_sqr() / 2048.0
}

fn criterion_grid() -> Vec<(f64, f64, f64)> {
    let mut grid = Vec::new();
    for i in 0..10 {
        let tau = 2.0 * i as f64 / 9.0;
        for j in 0..10 {
            let dtau = 0.05 + 0.95 * j as f64 / 9.0;
            for delta in [0.5, 1.0, 2.0] {
                grid.push((tau, dtau, delta));
            }
        }
    }
    grid
}

#[test]
fn criterion_2_closed_form_matches_expansion_oracle() {
    let t0 = 0.1;
    for (tau, dtau, delta) in criterion_grid() {
        let p1 = packet(0.0, 1.0, 3.0 + delta, 0.2);
        let p2 = packet(0.1, 1.2, 3.0, -0.3);
        let closed = coincidence_closed_form(t0, tau, dtau, &p1, &p2);
        let oracle = expansion_oracle(t0, tau, dtau, &p1, &p2);
        let rel = (closed - oracle).abs() / closed.abs().max(oracle.abs()).max(f64::MIN_POSITIVE);
        assert!(
            rel <= 1e-12,
            "relative gap {rel} at tau={tau}, dtau={dtau}, delta={delta}: {closed} vs {oracle}"
        );
    }
    println!("[acceptance] criterion 2: PASS");
}

#[test]
fn criterion_3_engine_ratio_has_vanishing_variation() {
    let t0 = 0.1;
    let mut ratios = Vec::new();
    for (tau, dtau, delta) in criterion_grid() {
        let p1 = packet(0.0, 1.0, 3.0 + delta, 0.2);
        let p2 = packet(0.1, 1.2, 3.0, -0.3);
        let closed = coincidence_closed_form(t0, tau, dtau, &p1, &p2);
        let fp = FeedbackParams::new(tau, dtau, 0.6).unwrap();
        let engine = engine_probability(&fp, t0, &p1, &p2);
        if closed > 1e-20 && engine > 1e-20 {
            ratios.push(engine / closed);
        }
    }
    assert!(
        ratios.len() > 100,
        "grid too degenerate: only {} usable points",
        ratios.len()
    );
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / ratios.len() as f64;
    let cv = var.sqrt() / mean;
    assert!(cv < 1e-9, "coefficient of variation {cv}, mean ratio {mean}");
    println!("[acceptance] criterion 3: PASS");
}

#[test]
fn criterion_4_hom_baseline() {
    let sigma = 1.3;
    let p = packet(0.0, sigma, 3.0, 0.0);
    let spec = beatsim::device::build_beam_splitter_device();
    for ratio in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let tau = ratio * sigma;
        let analytic = 0.5 * (1.0 - (-tau * tau / (2.0 * sigma * sigma)).exp());
        let hom = hom_coincidence(&p, &p, tau).unwrap();
        assert!(
            (hom - analytic).abs() <= 1e-9,
            "hom {hom} vs {analytic} at tau/sigma = {ratio}"
        );
        let shifted = packet(tau, sigma, 3.0, 0.0);
        let engine = beatsim::correlations::coincidence_integrated(
            &spec,
            &[(spec.inputs[0], p), (spec.inputs[1], shifted)],
            (spec.detectors[0], spec.detectors[1]),
            0,
        )
        .unwrap();
        assert!(
            (engine - analytic).abs() <= 1e-9,
            "engine {engine} vs {analytic} at tau/sigma = {ratio}"
        );
    }
    println!("[acceptance] criterion 4: PASS");
}

#[test]
fn criterion_5_quantum_beats_at_the_detuning() {
    for delta in [1.0, 2.0, 5.0] {
        let setup = ScanSetup {
            device: Preset::Feedback(FeedbackParams::new(0.0, 0.25, 0.0).unwrap()),
            source_1: packet(0.0, 1.0, 3.0 + delta, 0.0),
            source_2: packet(0.0, 1.0, 3.0, 0.0),
            base_t0: 0.0,
            max_passes: 2,
        };
        let span = 3.0 * TAU / delta;
        let (samples, step) = beat_cross_sequence(&setup, span, 256).unwrap();
        let (freq, bin) = dominant_frequency(&samples, step).unwrap();
        let expect = delta / TAU;
        assert!(
            (freq - expect).abs() <= bin,
            "detuning {delta}: peak at {freq}, expected {expect} ± {bin}"
        );
    }
    println!("[acceptance] criterion 5: PASS");
}

#[test]
fn criterion_6_mesh_round_trip() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let dim = 2 + (seed as usize % 7);
        let u = random_unitary(dim, seed).unwrap();
        let plan = reck_decompose(&u);
        let v = reck_reconstruct(&plan).unwrap();
        for r in 0..dim {
            for c in 0..dim {
                worst = worst.max((u.get(r, c) - v.get(r, c)).norm());
            }
        }
    }
    assert!(worst < 1e-10, "worst round-trip entry error {worst}");
    println!("[acceptance] criterion 6: PASS");
}

#[test]
fn criterion_7_entanglement_witness() {
    // detuned carriers, shifter delay σ/2: the looped device entangles
    let p1 = packet(0.0, 1.0, 4.0, 0.0);
    let p2 = packet(0.0, 1.0, 3.0, 0.0);
    let fp = FeedbackParams::new(0.0, 0.5, 0.0).unwrap();
    let spec = build_feedback_device(&fp).unwrap();
    let (t1c, t2c) = feedback_detection_times(&fp, 0.0);
    let k_at = |n: usize| {
        let g1 = time_grid(t1c, 5.0, n).unwrap();
        let g2 = time_grid(t2c, 5.0, n).unwrap();
        let m = joint_amplitude_matrix(
            &spec,
            &[(spec.inputs[0], p1), (spec.inputs[1], p2)],
            (spec.detectors[0], spec.detectors[1]),
            &g1,
            &g2,
            2,
        )
        .unwrap();
        schmidt_number(&m).unwrap()
    };
    let k64 = k_at(64);
    assert!(k64 > 1.0 + 1e-6, "Schmidt number {k64} not above 1 + 1e-6");
    let k128 = k_at(128);
    assert!(
        (k128 - k64).abs() < 1e-3,
        "discretization drift: K(64) = {k64}, K(128) = {k128}"
    );

    // a non-mixing device stays a product state
    let pass = build_pass_through_device(0.2, 0.5).unwrap();
    let g1 = time_grid(0.2, 5.0, 64).unwrap();
    let g2 = time_grid(0.8, 5.0, 64).unwrap();
    let m = joint_amplitude_matrix(
        &pass,
        &[(pass.inputs[0], p1), (pass.inputs[1], packet(0.3, 1.25, 3.0, -0.4))],
        (pass.detectors[0], pass.detectors[1]),
        &g1,
        &g2,
        0,
    )
    .unwrap();
    let k_pass = schmidt_number(&m).unwrap();
    assert!(
        (k_pass - 1.0).abs() <= 1e-6,
        "pass-through Schmidt number {k_pass} differs from 1"
    );
    println!("[acceptance] criterion 7: PASS");
}

#[test]
fn criterion_8_truncated_completeness() {
    // a long loop delay keeps successive pass contributions time-disjoint,
    // so adding passes can only add norm
    let fp = FeedbackParams::new(0.5, 0.5, 50.0).unwrap();
    let spec = build_feedback_device(&fp).unwrap();
    let p = packet(0.0, 1.0, 3.0, 0.0);
    let mut prev = 0.0;
    for max_passes in 0..=6u32 {
        let total = exit_probability(&spec, spec.inputs[0], &p, max_passes).unwrap();
        assert!(
            total >= prev - 1e-12,
            "exit probability fell from {prev} to {total} at max_passes = {max_passes}"
        );
        assert!(
            total <= 1.0 + 1e-9,
            "exit probability {total} exceeds 1 at max_passes = {max_passes}"
        );
        prev = total;
    }
    assert!(prev > 0.5, "exit probability {prev} suspiciously low after 6 passes");
    println!("[acceptance] criterion 8: PASS");
}
