mod common;

use common::*;
use hyperghz::optics::{
    hwp_matrix, oam_cnot_interferometric, oam_swap_ideal, pol_analyzer_angles, qplate_convert, qwp_matrix,
    AnalyzerBasis,
};
use hyperghz::pipeline::{outcome_distribution, MeasurementSetting};
use hyperghz::source::{ghz_photons, NoiseParams};
use hyperghz::state::{hyper_register, Gate, QubitAddress, SparseState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_against_dense(seed: u64, register: Vec<QubitAddress>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = random_noisy_ensemble(&mut rng, &register, 2);
    let setting = random_setting(&mut rng, &register);
    let fast = outcome_distribution(&e, &setting).unwrap();
    let dense = dense_distribution(&e, &setting);
    let tv = total_variation(fast.probabilities(), &dense);
    assert!(tv < 1e-10, "seed {seed}: total variation {tv}");
}

#[test]
fn three_photon_hyper_register_matches_dense_reference() {
    for seed in 0..4 {
        check_against_dense(seed, hyper_register(3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mixed_registers_match_dense_reference(seed in any::<u64>(), layout in 0usize..4) {
        let register = match layout {
            0 => vec![QubitAddress::pol(1)],
            1 => hyper_register(1),
            2 => vec![QubitAddress::pol(1), QubitAddress::path(1), QubitAddress::pol(2), QubitAddress::oam(2)],
            _ => {
                let mut r = hyper_register(2);
                r.reverse();
                r.push(QubitAddress::pol(3));
                r
            }
        };
        check_against_dense(seed, register);
    }
}

#[test]
fn noiseless_ghz6_is_the_target_ray() {
    let (e, p) = ghz_photons(6, &NoiseParams::noiseless()).unwrap();
    assert!((p - 0.25).abs() < 1e-12);
    let ideal = hyperghz::state::ghz_state((1..=6).map(QubitAddress::pol).collect(), -1.0).unwrap();
    assert!(e.members()[0].state.approx_eq_ray(&ideal, 1e-12));
}

#[test]
fn interferometric_cnot_equals_ideal_cnot() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cnot = Gate::controlled(&hyperghz::optics::pauli_x());
    for _ in 0..100 {
        let s = oam_input(&mut rng);
        let built = oam_cnot_interferometric(&s, 1).unwrap();
        let ideal = s
            .apply_unitary(&[QubitAddress::oam(1), QubitAddress::pol(1)], &cnot)
            .unwrap();
        let d = built.phase_aligned_distance(&ideal).unwrap();
        assert!(d < 1e-9, "deviation {d}");
    }
}

#[test]
fn physical_oam_readout_equals_ideal_swap() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let s = oam_input(&mut rng);
        let chain = qplate_convert(&oam_cnot_interferometric(&s, 1).unwrap(), 1).unwrap();
        let swapped = oam_swap_ideal(&s, 1)
            .unwrap()
            .remove_qubit(QubitAddress::oam(1))
            .unwrap();
        assert!(chain.approx_eq_ray(&swapped, 1e-9));
    }
}

proptest! {
    #[test]
    fn analyzer_angles_follow_the_phase_law(
        theta in 0.0f64..std::f64::consts::PI,
        re0 in -1.0f64..1.0, im0 in -1.0f64..1.0, re1 in -1.0f64..1.0, im1 in -1.0f64..1.0,
    ) {
        let norm = (re0 * re0 + im0 * im0 + re1 * re1 + im1 * im1).sqrt();
        prop_assume!(norm > 1e-3);
        let (x, y) = (c(re0, im0) / norm, c(re1, im1) / norm);
        let (q, h) = pol_analyzer_angles(AnalyzerBasis::Superposition { theta });
        let g = hwp_matrix(h).matmul(&qwp_matrix(q));
        let out = g.apply_vec(&[x, y]);
        let phase = hyperghz::state::C64::from_polar(1.0, -theta);
        let p_plus = ((x + phase * y) / 2f64.sqrt()).norm_sqr();
        let p_minus = ((x - phase * y) / 2f64.sqrt()).norm_sqr();
        prop_assert!((out[0].norm_sqr() - p_plus).abs() < 1e-10);
        prop_assert!((out[1].norm_sqr() - p_minus).abs() < 1e-10);
    }
}

#[test]
fn dense_reference_sanity() {
    // the reference itself on a known case: |+⟩ measured at θ = 0
    let reg = vec![QubitAddress::pol(1)];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = SparseState::from_amplitudes(reg.clone(), [(0, c(h, 0.0)), (1, c(h, 0.0))]).unwrap();
    let e = hyperghz::ensemble::Ensemble::pure(s);
    let p = dense_distribution(&e, &MeasurementSetting::superposition(&reg, 0.0).unwrap());
    assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
}
