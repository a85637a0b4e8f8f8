//! Property tests for the crate's structural invariants: randomized inputs,
//! deterministic laws.

use beatsim::correlations::{
    coincidence_closed_form, coincidence_probability, schmidt_number, DetectionEvent,
};
use beatsim::device::{
    build_feedback_device, enumerate_histories, feedback_detection_times, FeedbackParams,
    NodeKind,
};
use beatsim::network::{random_unitary, reck_decompose, reck_reconstruct};
use beatsim::scan::{beat_scan, AxisSpec, Engine, Preset, ScanAxis, ScanSetup};
use beatsim::wavepacket::{overlap, WavepacketParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn packet_strategy() -> impl Strategy<Value = WavepacketParams> {
    (
        -2.0..2.0f64,
        0.3..2.0f64,
        -5.0..5.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(c, s, w, f)| WavepacketParams::new(c, s, w, f).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlap_magnitude_is_bounded_by_one(
        p1 in packet_strategy(),
        p2 in packet_strategy(),
        delay in -4.0..4.0f64,
    ) {
        let o = overlap(&p1, &p2, delay).unwrap();
        prop_assert!(o.norm() <= 1.0 + 1e-12, "|overlap| = {}", o.norm());
    }

    #[test]
    fn null_law_holds_for_any_input_delay(
        p1 in packet_strategy(),
        p2 in packet_strategy(),
        t0 in -2.0..2.0f64,
        tau in 0.0..3.0f64,
    ) {
        prop_assert_eq!(coincidence_closed_form(t0, tau, 0.0, &p1, &p2), 0.0);
    }

    #[test]
    fn common_phase_offset_cancels(
        p1 in packet_strategy(),
        p2 in packet_strategy(),
        phi in -6.0..6.0f64,
        t0 in -1.0..1.0f64,
        tau in 0.0..2.0f64,
        dtau in 0.01..1.5f64,
    ) {
        let q1 = WavepacketParams::new(p1.center_time, p1.width, p1.carrier_freq, p1.phase_offset + phi).unwrap();
        let q2 = WavepacketParams::new(p2.center_time, p2.width, p2.carrier_freq, p2.phase_offset + phi).unwrap();
        let a = coincidence_closed_form(t0, tau, dtau, &p1, &p2);
        let b = coincidence_closed_form(t0, tau, dtau, &q1, &q2);
        let scale = a.abs().max(b.abs());
        prop_assert!((a - b).abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE), "{a} vs {b}");
    }

    #[test]
    fn event_exchange_is_bitwise_symmetric(
        p1 in packet_strategy(),
        p2 in packet_strategy(),
        tau in 0.0..1.5f64,
        dtau in 0.0..1.0f64,
        lam in 0.0..2.0f64,
        t0 in -1.0..1.0f64,
    ) {
        let fp = FeedbackParams::new(tau, dtau, lam).unwrap();
        let spec = build_feedback_device(&fp).unwrap();
        let (t1, t2) = feedback_detection_times(&fp, t0);
        let sources = [(spec.inputs[0], p1), (spec.inputs[1], p2)];
        let e1 = DetectionEvent { detector: spec.detectors[0], time: t1 };
        let e2 = DetectionEvent { detector: spec.detectors[1], time: t2 };
        let a = coincidence_probability(&spec, &sources, &[e1, e2], 2).unwrap();
        let b = coincidence_probability(&spec, &sources, &[e2, e1], 2).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn history_weights_obey_the_splitter_mirror_law(
        tau in 0.0..1.5f64,
        dtau in 0.0..1.0f64,
        lam in 0.0..2.0f64,
        r in 0.1..1.0f64,
        max_passes in 0u32..5,
    ) {
        let fp = FeedbackParams::new(tau, dtau, lam)
            .unwrap()
            .with_reflectivity(Complex64::new(-r, 0.0))
            .unwrap();
        let spec = build_feedback_device(&fp).unwrap();
        for &det in &spec.detectors {
            for h in enumerate_histories(&spec, spec.inputs[0], det, max_passes).unwrap() {
                let splitters = h
                    .nodes
                    .iter()
                    .filter(|&&n| matches!(spec.nodes[n].kind, NodeKind::BeamSplitter(_)))
                    .count();
                let mirrors = h.pass_count;
                let expect = 0.5f64.powi(splitters as i32).sqrt() * r.powi(mirrors as i32);
                prop_assert!(
                    (h.weight.norm() - expect).abs() <= 1e-12,
                    "|w| = {}, expected {expect}",
                    h.weight.norm()
                );
            }
        }
    }

    #[test]
    fn scans_are_non_negative(
        tau in 0.0..1.0f64,
        dtau_hi in 0.1..2.0f64,
        delta in -2.0..2.0f64,
        engine_pick in 0u8..2,
    ) {
        let engine = if engine_pick == 0 { Engine::ClosedForm } else { Engine::HistorySum };
        let setup = ScanSetup {
            device: Preset::Feedback(FeedbackParams::new(tau, 0.0, 0.4).unwrap()),
            source_1: WavepacketParams::new(0.0, 1.0, 3.0 + delta, 0.0).unwrap(),
            source_2: WavepacketParams::new(0.0, 1.0, 3.0, 0.0).unwrap(),
            base_t0: 0.0,
            max_passes: 2,
        };
        let axes = [AxisSpec::new(ScanAxis::DTau, 0.0, dtau_hi, 9).unwrap()];
        let result = beat_scan(&setup, &axes, engine).unwrap();
        prop_assert!(result.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mesh_round_trip_is_tight_for_any_seed(seed in 0u64..10_000, dim in 2usize..9) {
        let u = random_unitary(dim, seed).unwrap();
        let v = reck_reconstruct(&reck_decompose(&u)).unwrap();
        for r in 0..dim {
            for c in 0..dim {
                prop_assert!((u.get(r, c) - v.get(r, c)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn schmidt_number_is_at_least_one(
        rows in 2usize..6,
        cols in 2usize..6,
        seed in 0u64..1000,
    ) {
        // pseudo-random complex matrix from two unitaries' entries
        let a = random_unitary(rows, seed).unwrap();
        let b = random_unitary(cols, seed.wrapping_add(1)).unwrap();
        let m = DMatrix::from_fn(rows, cols, |i, j| {
            a.get(i, i % rows) + b.get(j, (i + j) % cols)
        });
        // an exactly zero matrix is legitimately degenerate, so Err is allowed
        if let Ok(k) = schmidt_number(&m) {
            prop_assert!(k >= 1.0 - 1e-12, "K = {k}");
            prop_assert!(k <= rows.min(cols) as f64 + 1e-9, "K = {k}");
        }
    }
}
