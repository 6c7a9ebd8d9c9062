mod common;

use std::f64::consts::PI;

use common::*;
use hyperghz::analysis::expectation_from_histogram;
use hyperghz::optics::AnalyzerBasis;
use hyperghz::pipeline::*;
use hyperghz::source::NoiseParams;
use hyperghz::state::{hyper_register, QubitAddress};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn distributions_are_normalized(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let register = hyper_register(2);
        let e = random_noisy_ensemble(&mut rng, &register, 3);
        let d = outcome_distribution(&e, &random_setting(&mut rng, &register)).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-9);
        prop_assert!(d.probabilities().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn z_readout_ignores_phases_on_other_qubits(theta in 0.0f64..PI, seed in any::<u64>()) {
        // changing the basis of one qubit must not move the marginal of the
        // others when they stay in the computational basis
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let register = hyper_register(2);
        let e = random_noisy_ensemble(&mut rng, &register, 2);
        let z = MeasurementSetting::computational(&register);
        let a = outcome_distribution(&e, &z).unwrap();
        let b = outcome_distribution(&e, &z.clone().with(QubitAddress::oam(2), AnalyzerBasis::Superposition { theta })).unwrap();
        let bit = 1u64 << 5;
        for k in 0..(1u64 << 6) {
            if k & bit == 0 {
                let ma = a.probability(k) + a.probability(k | bit);
                let mb = b.probability(k) + b.probability(k | bit);
                prop_assert!((ma - mb).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn dephasing_commutes_with_z_readout_at_18_qubits() {
    let a = build_hyper_ghz18(&NoiseParams {
        spatial_visibility: 1.0,
        oam_visibility: 1.0,
        ..NoiseParams::default()
    })
    .unwrap();
    let b = build_hyper_ghz18(&NoiseParams {
        spatial_visibility: 0.8,
        oam_visibility: 0.6,
        ..NoiseParams::default()
    })
    .unwrap();
    let z = MeasurementSetting::computational(a.register());
    assert_eq!(
        outcome_distribution(&a, &z).unwrap().probabilities(),
        outcome_distribution(&b, &z).unwrap().probabilities()
    );
}

#[test]
fn ideal_18_qubit_fringe() {
    let e = build_hyper_ghz18(&NoiseParams::noiseless()).unwrap();
    let series = fringe_scan(&e, 18, &default_theta_grid(), ScanMode::Exact).unwrap();
    for p in series.points() {
        assert!((p.expectation + (18.0 * p.theta).cos()).abs() < 1e-9);
    }
}

fn calibrated_like() -> NoiseParams {
    NoiseParams {
        double_pair_fraction: 0.2992,
        bitflip_prob: 0.000592,
        ..NoiseParams::default()
    }
}

#[test]
fn sampled_expectations_converge_to_exact() {
    let e = build_hyper_ghz18(&calibrated_like()).unwrap();
    let setting = MeasurementSetting::superposition(e.register(), PI / 36.0).unwrap();
    let d = outcome_distribution(&e, &setting).unwrap();
    let exact = d.expectation();
    let within = (0..100)
        .filter(|seed| {
            let h = sample_histogram(&d, 1e4, 1.0, *seed).unwrap();
            let (m, s) = expectation_from_histogram(&h).unwrap();
            (m - exact).abs() <= 5.0 * s
        })
        .count();
    assert!(within >= 99, "{within} of 100 seeds within 5σ");
}

#[test]
fn reported_stderr_matches_spread_over_seeds() {
    let e = build_hyper_ghz18(&calibrated_like()).unwrap();
    for theta in [0.0, PI / 72.0, 5.0 * PI / 18.0] {
        let setting = MeasurementSetting::superposition(e.register(), theta).unwrap();
        let d = outcome_distribution(&e, &setting).unwrap();
        let samples: Vec<(f64, f64)> = (0..200)
            .map(|seed| expectation_from_histogram(&sample_histogram(&d, 0.2, 7200.0, seed).unwrap()).unwrap())
            .collect();
        let mean = samples.iter().map(|s| s.0).sum::<f64>() / 200.0;
        let spread = (samples.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
        let reported = samples.iter().map(|s| s.1).sum::<f64>() / 200.0;
        assert!(
            (spread / reported - 1.0).abs() < 0.15,
            "θ={theta}: spread {spread}, reported {reported}"
        );
    }
}

#[test]
fn sampling_is_reproducible_and_schedule_independent() {
    let e = build_experiment(12, &NoiseParams::default()).unwrap();
    let mode = ScanMode::Sampled {
        rate_hz: 0.2,
        duration_s: 7200.0,
        seed: 9,
    };
    let grid = default_theta_grid();
    let a = fringe_scan(&e, 12, &grid, mode).unwrap();
    let b = fringe_scan(&e, 12, &grid, mode).unwrap();
    assert_eq!(a, b);
    // a single-point scan reproduces the first point of the full scan
    let first = fringe_scan(&e, 12, &grid[..1], mode).unwrap();
    assert_eq!(first.points()[0], a.points()[0]);
}
