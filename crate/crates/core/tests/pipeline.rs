use yuoh_core::pulse::CalibrationTable;
use yuoh_core::rays::canonical_rays;
use yuoh_core::{CorrelationMethod, Experiment, FluorescenceModel, NoiseConfig};

fn experiment(noise: NoiseConfig, cache: bool) -> Experiment {
    Experiment::with_options(CalibrationTable::default(), FluorescenceModel::default(), noise, cache, true)
        .unwrap()
}

fn noisy(shots: u64, seed: u64) -> NoiseConfig {
    NoiseConfig {
        shots,
        seed,
        ..NoiseConfig::default()
    }
}

fn spread(shots: u64) -> f64 {
    let h1 = canonical_rays().into_iter().find(|r| r.label() == "h1").unwrap();
    let values: Vec<f64> = (0..40)
        .map(|seed| {
            let exp = experiment(noisy(shots, seed), false);
            let rho = exp.prepare(&h1.state()).unwrap();
            exp.measure_projector(&rho, &h1, 0).unwrap().p
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

#[test]
fn shot_noise_scales_as_inverse_root_shots() {
    let s = [spread(1_000), spread(10_000), spread(100_000)];
    for w in s.windows(2) {
        let ratio = w[0] / w[1];
        let ideal = 10f64.sqrt();
        assert!(ratio > ideal / 2.0 && ratio < ideal * 2.0, "spreads {s:?}");
    }
}

#[test]
fn same_seed_same_report() {
    let states = canonical_rays();
    let a = experiment(noisy(5_000, 3), true).run(&states, CorrelationMethod::Joint).unwrap();
    let b = experiment(noisy(5_000, 3), true).run(&states, CorrelationMethod::Joint).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = experiment(noisy(5_000, 4), true).run(&states, CorrelationMethod::Joint).unwrap();
    assert_ne!(a.lhs_values(), c.lhs_values());
}

#[test]
fn uncached_conditionals_agree_noiselessly() {
    let states = canonical_rays();
    let a = experiment(NoiseConfig::noiseless(), true).run(&states, CorrelationMethod::Joint).unwrap();
    let b = experiment(NoiseConfig::noiseless(), false).run(&states, CorrelationMethod::Joint).unwrap();
    for (x, y) in a.lhs_values().iter().zip(b.lhs_values()) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(a.settings.conditionals_cached && !b.settings.conditionals_cached);
}

#[test]
fn report_shapes() {
    let r = experiment(noisy(2_000, 1), true).run(&canonical_rays(), CorrelationMethod::Both).unwrap();
    assert_eq!(r.states.len(), 13);
    assert_eq!(r.projection_matrix.len(), 13);
    assert!(r.projection_matrix.iter().all(|row| row.len() == 13));
    assert!(r.complementary_projections.iter().all(|row| row.len() == 12));
    assert_eq!(r.edges.len(), 24);
    for s in &r.states {
        assert_eq!(s.projections.len(), 25);
        assert_eq!(s.correlations.len(), 24);
        assert!(s.lhs_joint.is_some() && s.lhs_algebraic.is_some());
    }
    assert!(r.reference.bright > r.reference.dark);
}

#[test]
fn violation_survives_depolarizing() {
    let noise = NoiseConfig {
        depolarizing_p: 0.5,
        ..noisy(1_000_000, 5)
    };
    let r = experiment(noise, true).run(&canonical_rays(), CorrelationMethod::Algebraic).unwrap();
    assert!((r.summary.lhs_mean - 25.0 / 3.0).abs() < 0.1, "{:?}", r.summary);
    assert!(r.summary.lhs_min > 8.0);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["settings"]["noise"]["depolarizing_p"], 0.5);
}
