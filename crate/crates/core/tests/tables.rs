use std::collections::BTreeMap;

use actnas_core::device::{LatencyEstimator, MemoryEstimator};
use actnas_core::table::NwotEstimator;
use actnas_core::{
    build_table, simulate_latency, simulate_memory, ActivationKind, CostTable, DeviceProfile, MeasurementConfig,
    Metric, ModelSpec, NwotScorer, SequentialBuilder,
};

use ActivationKind::*;

fn deep_chain(slots: usize) -> ModelSpec {
    let mut b = SequentialBuilder::new("deep", &[3, 8, 8]).conv("stem", 8, 3, 2, 1, Silu).unwrap();
    for i in 1..slots {
        b = b.dense(format!("fc{i}"), 24, Silu);
    }
    b.build().unwrap()
}

/// Profile with hand-picked integer coefficients and no noise.
fn plain_profile() -> DeviceProfile<f64> {
    let coeffs = |v: [f64; 5]| -> BTreeMap<ActivationKind, f64> { ActivationKind::ALL.into_iter().zip(v).collect() };
    DeviceProfile {
        name: "plain".into(),
        base_layer_cost: 10.0,
        per_activation_cost: coeffs([1.0, 7.0, 4.0, 2.0, 3.0]),
        memory_per_element: coeffs([1.0, 4.0, 2.0, 1.0, 2.0]),
        noise_amplitude: 0.0,
        seed: 0,
    }
}

#[test]
fn sixty_nine_slots_give_345_row_tables() {
    let model = deep_chain(69);
    assert_eq!(model.len(), 69);
    let profile = DeviceProfile::<f64>::builtin("npu").unwrap();
    let cfg = MeasurementConfig::default();
    let lat = build_table(&model, &ActivationKind::ALL, &LatencyEstimator { profile: profile.clone(), config: cfg.clone() })
        .unwrap();
    let mem = build_table(&model, &ActivationKind::ALL, &MemoryEstimator { profile, config: cfg }).unwrap();
    let scorer = NwotScorer::<f64>::new(&model, 16, 1, 2).unwrap();
    let acc = build_table(&model, &ActivationKind::ALL, &NwotEstimator::new(scorer, "npu")).unwrap();
    for table in [&lat, &mem, &acc] {
        assert_eq!(table.entries().len(), 345);
        assert_eq!(table.layer_count(), 69);
        for l in 0..69 {
            assert_eq!(table.get(l, Silu).unwrap().delta_value, 0.0);
        }
    }
}

#[test]
fn latency_deltas_are_coefficient_times_elements() {
    // 2-layer dense network: 6 and 3 output elements
    let model = SequentialBuilder::new("two", &[4]).dense("a", 6, Silu).dense("b", 3, Relu).build().unwrap();
    let profile = plain_profile();
    let table = build_table(
        &model,
        &ActivationKind::ALL,
        &LatencyEstimator { profile, config: MeasurementConfig::with_runs(1).unwrap() },
    )
    .unwrap();
    // reference: 6*(10+7) + 3*(10+1) = 135 ns
    assert_eq!(table.reference_total(), 135.0e-6);
    let coeff = [1.0, 7.0, 4.0, 2.0, 3.0];
    for (layer, (elements, current)) in [(6.0, 7.0), (3.0, 1.0)].into_iter().enumerate() {
        for (c, kind) in ActivationKind::ALL.into_iter().enumerate() {
            let want = elements * (coeff[c] - current) * 1e-6;
            let got = table.get(layer, kind).unwrap().delta_value;
            assert!((got - want).abs() < 1e-15, "layer {layer} {kind}: {got} vs {want}");
        }
    }
}

#[test]
fn memory_matches_hand_arithmetic() {
    let model = SequentialBuilder::new("three", &[1, 4, 4])
        .conv("c0", 2, 3, 1, 1, Relu) // 2*4*4 = 32 elements
        .unwrap()
        .conv("c1", 4, 3, 2, 1, Silu) // 4*2*2 = 16
        .unwrap()
        .dense("fc", 8, Hardswish) // 8
        .build()
        .unwrap();
    let kb = simulate_memory(&model, &plain_profile()).unwrap();
    assert_eq!(kb, (32.0 * 1.0 + 16.0 * 4.0 + 8.0 * 2.0) / 1024.0);

    let table = build_table(
        &model,
        &ActivationKind::ALL,
        &MemoryEstimator { profile: plain_profile(), config: MeasurementConfig::default() },
    )
    .unwrap();
    // c1 silu -> relu saves 16 * 3 bytes
    assert_eq!(table.get(1, Relu).unwrap().delta_value, -48.0 / 1024.0);
}

#[test]
fn averaging_runs_shrinks_the_spread() {
    let model = deep_chain(4);
    let spread = |runs: usize| {
        let cfg = MeasurementConfig::with_runs(runs).unwrap();
        let samples: Vec<f64> = (0..100)
            .map(|seed| {
                let mut p = DeviceProfile::<f64>::builtin("cortex-a53").unwrap();
                p.noise_amplitude = 0.2;
                p.seed = seed;
                simulate_latency(&model, &p, &cfg).unwrap()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    };
    let ratio = spread(1) / spread(400);
    assert!(ratio > 5.0, "std ratio {ratio}");
}

#[test]
fn latency_is_monotone_in_activation_coefficients() {
    let model = deep_chain(5).apply_assignment(&[Relu, Silu, Hardswish, Relu6, LeakyRelu]).unwrap();
    let cfg = MeasurementConfig::default();
    let base = plain_profile();
    let before = simulate_latency(&model, &base, &cfg).unwrap();
    for kind in ActivationKind::ALL {
        let mut bumped = base.clone();
        *bumped.per_activation_cost.get_mut(&kind).unwrap() += 0.5;
        assert!(simulate_latency(&model, &bumped, &cfg).unwrap() > before, "{kind}");
    }
}

#[test]
fn csv_round_trip_keeps_seeds_and_values() {
    let model = deep_chain(3);
    let scorer = NwotScorer::<f64>::new(&model, 8, 41, 42).unwrap();
    let table = build_table(&model, &ActivationKind::ALL, &NwotEstimator::new(scorer, "jetson-gpu")).unwrap();
    let text = table.to_csv_string().unwrap();
    assert!(text.starts_with("# metric=accuracy device=jetson-gpu "));
    assert!(text.contains("weight_seed=41 batch_seed=42"));
    let back = CostTable::<f64>::from_csv_str(&text).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.metric(), Metric::Accuracy);
    assert_eq!(back.to_csv_string().unwrap(), text);
}

#[test]
fn parallel_builds_are_deterministic() {
    let model = deep_chain(12);
    let build = || {
        let scorer = NwotScorer::<f64>::new(&model, 16, 3, 4).unwrap();
        build_table(&model, &ActivationKind::ALL, &NwotEstimator::new(scorer, "npu"))
            .unwrap()
            .to_csv_string()
            .unwrap()
    };
    let first = build();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(build);
    assert_eq!(first, build());
    assert_eq!(first, serial);
}
