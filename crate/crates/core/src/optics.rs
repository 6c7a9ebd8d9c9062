//! Optical elements as unitaries and post-selected projections.
//!
//! Jones-matrix sign conventions (fast-axis angle measured from the
//! vertical, logic 0 = H):
//!
//! * HWP(θ) = `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`
//! * QWP(θ) = `[[cos²θ + i sin²θ, (1−i) sinθ cosθ], [(1−i) sinθ cosθ, sin²θ + i cos²θ]]`
//! * Dove(θ) = `diag(e^{−i2θ}, e^{+i2θ})` on the OAM qubit
//!
//! With these, HWP(22.5°)|H⟩ = |+⟩, HWP(45°)|H⟩ = |V⟩, and QWP(−45°)
//! takes (|H⟩ ∓ i|V⟩)/√2 to |H⟩ and |V⟩ respectively (up to phase).
//!
//! Superposition-basis outcome 0 projects onto (|0⟩ + e^{iθ}|1⟩)/√2, the +1
//! eigenvector of `cosθ σx + sinθ σy`; outcome 1 onto the −1 eigenvector.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Gate, NewQubit, QubitAddress, SparseState, C64};

/// Rotation of an element in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementAngle(pub f64);

impl ElementAngle {
    pub fn degrees(self) -> f64 {
        self.0
    }

    fn radians(self) -> f64 {
        self.0.rem_euclid(360.0).to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyzerBasis {
    Computational,
    /// Phase θ in radians, `0 ≤ θ ≤ π`.
    Superposition {
        theta: f64,
    },
}

impl AnalyzerBasis {
    pub fn superposition(theta: f64) -> Result<Self> {
        if !(0.0..=PI + 1e-12).contains(&theta) {
            return Err(Error::Domain(format!("basis phase {theta} outside [0, π]")));
        }
        Ok(AnalyzerBasis::Superposition { theta })
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn hwp_matrix(angle: ElementAngle) -> Gate {
    let (s, co) = (2.0 * angle.radians()).sin_cos();
    Gate::one([[c(co, 0.0), c(s, 0.0)], [c(s, 0.0), c(-co, 0.0)]])
}

pub fn qwp_matrix(angle: ElementAngle) -> Gate {
    let (s, co) = angle.radians().sin_cos();
    let off = c(1.0, -1.0) * (s * co);
    Gate::one([[c(co * co, s * s), off], [off, c(s * s, co * co)]])
}

pub fn dove_matrix(angle: ElementAngle) -> Gate {
    let t = 2.0 * angle.radians();
    Gate::one([
        [C64::from_polar(1.0, -t), c(0.0, 0.0)],
        [c(0.0, 0.0), C64::from_polar(1.0, t)],
    ])
}

pub fn hadamard() -> Gate {
    let h = FRAC_1_SQRT_2;
    Gate::one([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
}

pub fn pauli_x() -> Gate {
    Gate::one([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
}

/// CNOT with targets ordered `[control, target]`.
pub fn cnot() -> Gate {
    Gate::controlled(&pauli_x())
}

/// PBS acting as a CNOT from polarization onto a fresh path qubit.
pub fn pbs_split(state: &SparseState, photon: u8) -> Result<SparseState> {
    state.add_qubit(QubitAddress::path(photon), NewQubit::CopyOf(QubitAddress::pol(photon)))
}

/// Spiral phase plates in both arms: U → R, D → L.
pub fn spp_encode(state: &SparseState, photon: u8) -> Result<SparseState> {
    let path = QubitAddress::path(photon);
    if !state.is_active(path) {
        return Err(Error::InactiveQubit(path));
    }
    state.add_qubit(QubitAddress::oam(photon), NewQubit::CopyOf(path))
}

/// Two-photon fusion on a PBS with one-photon-per-output post-selection:
/// keeps the equal-polarization terms.
pub fn pbs_fuse(state: &SparseState, photon_a: u8, photon_b: u8) -> Result<(SparseState, f64)> {
    let pa = state.position(QubitAddress::pol(photon_a))?;
    let pb = state.position(QubitAddress::pol(photon_b))?;
    state.post_select(|k| ((k >> pa) & 1) == ((k >> pb) & 1))
}

/// One outcome of a projective analyzer.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: bool,
    pub probability: f64,
    /// `None` when the outcome cannot occur.
    pub state: Option<SparseState>,
}

fn split_branches(state: &SparseState, addr: QubitAddress) -> Result<[Branch; 2]> {
    let one = |outcome| -> Result<Branch> {
        match state.project_qubit(addr, outcome) {
            Ok((s, p)) => Ok(Branch {
                outcome,
                probability: p,
                state: Some(s),
            }),
            Err(Error::ImpossibleOutcome { probability }) => Ok(Branch {
                outcome,
                probability,
                state: None,
            }),
            Err(e) => Err(e),
        }
    };
    Ok([one(false)?, one(true)?])
}

/// Basis change applied before the path detectors: prism phase
/// `diag(1, e^{−iθ})` then the 50/50 recombiner (real Hadamard form).
/// Identity in the open (computational) configuration.
pub fn spatial_basis_gate(basis: AnalyzerBasis) -> Gate {
    match basis {
        AnalyzerBasis::Computational => Gate::identity(1),
        AnalyzerBasis::Superposition { theta } => {
            let phase = Gate::one([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), C64::from_polar(1.0, -theta)]]);
            hadamard().matmul(&phase)
        }
    }
}

/// Mach-Zehnder readout of the path qubit.
pub fn spatial_analyzer(state: &SparseState, photon: u8, basis: AnalyzerBasis) -> Result<[Branch; 2]> {
    let path = QubitAddress::path(photon);
    let rotated = state.apply_unitary(&[path], &spatial_basis_gate(basis))?;
    split_branches(&rotated, path)
}

/// (QWP, HWP) settings in front of the polarization PBS.
pub fn pol_analyzer_angles(basis: AnalyzerBasis) -> (ElementAngle, ElementAngle) {
    match basis {
        AnalyzerBasis::Computational => (ElementAngle(0.0), ElementAngle(0.0)),
        AnalyzerBasis::Superposition { theta } => (ElementAngle(45.0), ElementAngle(22.5 - theta.to_degrees() / 4.0)),
    }
}

/// Combined QWP-then-HWP rotation for `basis`.
pub fn pol_basis_gate(basis: AnalyzerBasis) -> Gate {
    let (q, h) = pol_analyzer_angles(basis);
    hwp_matrix(h).matmul(&qwp_matrix(q))
}

/// QWP, HWP and PBS: transmitted (H) is outcome 0, reflected (V) outcome 1.
pub fn pol_analyzer(state: &SparseState, photon: u8, basis: AnalyzerBasis) -> Result<[Branch; 2]> {
    let pol = QubitAddress::pol(photon);
    let rotated = state.apply_unitary(&[pol], &pol_basis_gate(basis))?;
    split_branches(&rotated, pol)
}

/// CNOT(OAM → POL) then CNOT(POL → OAM).
pub fn oam_swap_ideal(state: &SparseState, photon: u8) -> Result<SparseState> {
    let (pol, oam) = (QubitAddress::pol(photon), QubitAddress::oam(photon));
    state
        .apply_unitary(&[oam, pol], &cnot())?
        .apply_unitary(&[pol, oam], &cnot())
}

/// OAM-controlled polarization flip built from the interferometer
/// elements: HWP(22.5°), polarizing split into two arms, Dove prisms at
/// ±22.5°, HWP(45°), recombination, QWP(−45°). Defined for inputs whose
/// polarization is |H⟩; equals CNOT(OAM → POL) up to a global phase.
pub fn oam_cnot_interferometric(state: &SparseState, photon: u8) -> Result<SparseState> {
    let (pol, oam, arm) = (
        QubitAddress::pol(photon),
        QubitAddress::oam(photon),
        QubitAddress::arm(photon),
    );
    let p = state.position(pol)?;
    state.position(oam)?;
    if state.amplitudes().keys().any(|k| (k >> p) & 1 == 1) {
        return Err(Error::Contract(format!(
            "OAM interferometer on photon {photon} expects |H⟩ polarization at its input"
        )));
    }
    let s = state.apply_unitary(&[pol], &hwp_matrix(ElementAngle(22.5)))?;
    // first PBS: H to the upper arm (0), V to the lower arm (1)
    let s = s.add_qubit(arm, NewQubit::CopyOf(pol))?;
    let doves = Gate::block_diag(&dove_matrix(ElementAngle(22.5)), &dove_matrix(ElementAngle(-22.5)));
    let s = s.apply_unitary(&[arm, oam], &doves)?;
    let s = s.apply_unitary(&[pol], &hwp_matrix(ElementAngle(45.0)))?;
    // second PBS: the arm is now the complement of the polarization and
    // is erased on recombination
    let erase = Gate::controlled(&pauli_x()).matmul(&Gate::identity(1).kron(&pauli_x()));
    let s = s.apply_unitary(&[pol, arm], &erase)?;
    let s = s.remove_qubit(arm)?;
    s.apply_unitary(&[pol], &qwp_matrix(ElementAngle(-45.0)))
}

/// q-plate converter between two QWPs: |R⟩|H⟩ → |G⟩|H⟩ and |L⟩|V⟩ →
/// |G⟩|V⟩. Only these two inputs are defined, so the state must lie in
/// span{|R,H⟩, |L,V⟩} on this photon. The Gaussian output mode carries no
/// qubit and the OAM address is removed.
pub fn qplate_convert(state: &SparseState, photon: u8) -> Result<SparseState> {
    let (pol, oam) = (QubitAddress::pol(photon), QubitAddress::oam(photon));
    let (pp, po) = (state.position(pol)?, state.position(oam)?);
    if state.amplitudes().keys().any(|k| (k >> pp) & 1 != (k >> po) & 1) {
        return Err(Error::Contract(format!(
            "q-plate on photon {photon} is defined only on span{{|R,H⟩, |L,V⟩}}"
        )));
    }
    state.apply_unitary(&[pol, oam], &cnot())?.remove_qubit(oam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H: f64 = FRAC_1_SQRT_2;

    fn pol_state(a: C64, b: C64) -> SparseState {
        SparseState::from_amplitudes(vec![QubitAddress::pol(1)], [(0, a), (1, b)]).unwrap()
    }

    fn ray(s: &SparseState, a: C64, b: C64) -> bool {
        s.approx_eq_ray(&pol_state(a, b), 1e-12)
    }

    fn on_pol(g: &Gate, a: C64, b: C64) -> SparseState {
        pol_state(a, b).apply_unitary(&[QubitAddress::pol(1)], g).unwrap()
    }

    #[test]
    fn half_wave_plate_conventions() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let s = on_pol(&hwp_matrix(ElementAngle(22.5)), one, zero);
        assert!((s.amplitude(0) - c(H, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(1) - c(H, 0.0)).norm() < 1e-15);
        let s = on_pol(&hwp_matrix(ElementAngle(45.0)), one, zero);
        assert!((s.amplitude(1) - one).norm() < 1e-15 && s.len() == 1);
        let z = hwp_matrix(ElementAngle(0.0));
        assert_eq!(z.get(0, 0), one);
        assert_eq!(z.get(1, 1), -one);
    }

    #[test]
    fn quarter_wave_plate_conventions() {
        let q = qwp_matrix(ElementAngle(-45.0));
        assert!(ray(&on_pol(&q, c(H, 0.0), c(0.0, -H)), c(1.0, 0.0), c(0.0, 0.0)));
        assert!(ray(&on_pol(&q, c(H, 0.0), c(0.0, H)), c(0.0, 0.0), c(1.0, 0.0)));
        let s = on_pol(&qwp_matrix(ElementAngle(0.0)), c(1.0, 0.0), c(0.0, 0.0));
        assert!(ray(&s, c(1.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn dove_prism_phases() {
        let d = dove_matrix(ElementAngle(22.5));
        assert!((d.get(0, 0) - C64::from_polar(1.0, -PI / 4.0)).norm() < 1e-15);
        assert!((d.get(1, 1) - C64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        assert!(dove_matrix(ElementAngle(0.0)).approx_eq_up_to_phase(&Gate::identity(1), 1e-15));
        let d90 = dove_matrix(ElementAngle(90.0));
        assert!((d90.get(0, 0) + 1.0).norm() < 1e-15 && (d90.get(1, 1) + 1.0).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn wave_plates_are_unitary_and_hwp_squares_to_identity(deg in -720.0f64..720.0) {
            let h = hwp_matrix(ElementAngle(deg));
            prop_assert!(h.unitarity_error() < 1e-12);
            prop_assert!(qwp_matrix(ElementAngle(deg)).unitarity_error() < 1e-12);
            prop_assert!(h.matmul(&h).approx_eq_up_to_phase(&Gate::identity(1), 1e-12));
        }

        #[test]
        fn spatial_probabilities_sum_to_one(
            theta in 0.0f64..PI, a in -1.0f64..1.0, b in -1.0f64..1.0, ph in -3.0f64..3.0,
        ) {
            let n = (a * a + b * b).sqrt();
            prop_assume!(n > 1e-3);
            let s = SparseState::from_amplitudes(
                vec![QubitAddress::path(1)],
                [(0, c(a / n, 0.0)), (1, C64::from_polar(b / n, ph))],
            ).unwrap();
            for basis in [AnalyzerBasis::Computational, AnalyzerBasis::Superposition { theta }] {
                let br = spatial_analyzer(&s, 1, basis).unwrap();
                prop_assert!((br[0].probability + br[1].probability - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pbs_split_and_spp_encode() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let s = pbs_split(&pol_state(a, b), 1).unwrap();
        assert_eq!(s.amplitude(0b00), a);
        assert_eq!(s.amplitude(0b11), b);
        let s = spp_encode(&s, 1).unwrap();
        assert_eq!(s.amplitude(0b000), a);
        assert_eq!(s.amplitude(0b111), b);
        let h = pbs_split(&pol_state(c(1.0, 0.0), c(0.0, 0.0)), 1).unwrap();
        assert_eq!(h.amplitudes().keys().copied().collect::<Vec<_>>(), vec![0]);
        let v = spp_encode(&pbs_split(&pol_state(c(0.0, 0.0), c(1.0, 0.0)), 1).unwrap(), 1).unwrap();
        assert_eq!(v.amplitudes().keys().copied().collect::<Vec<_>>(), vec![0b111]);
        assert!(matches!(pbs_split(&s, 1), Err(Error::DuplicateQubit(_))));
        assert!(matches!(spp_encode(&pol_state(a, b), 1), Err(Error::InactiveQubit(_))));
    }

    #[test]
    fn fusion_of_two_singlets() {
        let reg: Vec<_> = (1..=4).map(QubitAddress::pol).collect();
        // |ψ⁻⟩₁₂|ψ⁻⟩₃₄ enumerated term by term
        let mut amps = Vec::new();
        for (b1, s1) in [(0b10u64, 1.0), (0b01, -1.0)] {
            for (b2, s2) in [(0b10u64, 1.0), (0b01, -1.0)] {
                amps.push((b1 | b2 << 2, c(0.5 * s1 * s2, 0.0)));
            }
        }
        let s = SparseState::from_amplitudes(reg.clone(), amps).unwrap();
        let (f, p) = pbs_fuse(&s, 2, 4).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        // H1 V2 H3 V4 + V1 H2 V3 H4, equal signs
        assert!((f.amplitude(0b1010) - c(H, 0.0)).norm() < 1e-15);
        assert!((f.amplitude(0b0101) - c(H, 0.0)).norm() < 1e-15);
        assert_eq!(f.len(), 2);

        let hh = SparseState::basis(reg.clone(), 0).unwrap();
        let (out, p) = pbs_fuse(&hh, 2, 4).unwrap();
        assert_eq!((out, p), (hh, 1.0));
        let hv = SparseState::basis(reg, 0b1000).unwrap();
        assert!(matches!(pbs_fuse(&hv, 2, 4), Err(Error::ImpossibleOutcome { .. })));
    }

    #[test]
    fn spatial_analyzer_examples() {
        let path = QubitAddress::path(1);
        let plus = SparseState::from_amplitudes(vec![path], [(0, c(H, 0.0)), (1, c(H, 0.0))]).unwrap();
        let minus = SparseState::from_amplitudes(vec![path], [(0, c(H, 0.0)), (1, c(-H, 0.0))]).unwrap();
        let zero = AnalyzerBasis::Superposition { theta: 0.0 };
        let b = spatial_analyzer(&plus, 1, zero).unwrap();
        assert!((b[0].probability - 1.0).abs() < 1e-12 && b[1].state.is_none());
        let b = spatial_analyzer(&minus, 1, zero).unwrap();
        assert!((b[1].probability - 1.0).abs() < 1e-12);
        let b = spatial_analyzer(&plus, 1, AnalyzerBasis::Superposition { theta: PI / 2.0 }).unwrap();
        assert!((b[0].probability - 0.5).abs() < 1e-12 && (b[1].probability - 0.5).abs() < 1e-12);
        let b = spatial_analyzer(&plus, 1, AnalyzerBasis::Computational).unwrap();
        assert!((b[0].probability - 0.5).abs() < 1e-12);
        assert!(matches!(spatial_analyzer(&plus, 2, zero), Err(Error::InactiveQubit(_))));
    }

    #[test]
    fn analyzer_angle_examples() {
        assert_eq!(
            pol_analyzer_angles(AnalyzerBasis::Computational),
            (ElementAngle(0.0), ElementAngle(0.0))
        );
        assert_eq!(
            pol_analyzer_angles(AnalyzerBasis::Superposition { theta: 0.0 }),
            (ElementAngle(45.0), ElementAngle(22.5))
        );
        let (q, h) = pol_analyzer_angles(AnalyzerBasis::Superposition { theta: PI });
        assert_eq!(q, ElementAngle(45.0));
        assert!((h.degrees() + 22.5).abs() < 1e-12);
    }

    proptest! {
        // Independent route: probability of outcome 0 is |⟨+θ|ψ⟩|² with
        // |+θ⟩ = (|H⟩ + e^{iθ}|V⟩)/√2.
        #[test]
        fn analyzer_angles_project_onto_phase_basis(
            theta in 0.0f64..=PI, a in -1.0f64..1.0, b in -1.0f64..1.0, ph in -3.0f64..3.0,
        ) {
            let n = (a * a + b * b).sqrt();
            prop_assume!(n > 1e-3);
            let (x, y) = (c(a / n, 0.0), C64::from_polar(b / n, ph));
            let br = pol_analyzer(&pol_state(x, y), 1, AnalyzerBasis::Superposition { theta }).unwrap();
            let plus = (x + C64::from_polar(1.0, -theta) * y) * H;
            let minus = (x - C64::from_polar(1.0, -theta) * y) * H;
            prop_assert!((br[0].probability - plus.norm_sqr()).abs() < 1e-10);
            prop_assert!((br[1].probability - minus.norm_sqr()).abs() < 1e-10);
        }
    }

    fn oam_pol(a: C64, b: C64) -> SparseState {
        // register [pol1, oam1]; OAM value in bit 1
        SparseState::from_amplitudes(vec![QubitAddress::pol(1), QubitAddress::oam(1)], [(0b00, a), (0b10, b)]).unwrap()
    }

    #[test]
    fn swap_transfers_oam_onto_polarization() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let out = oam_swap_ideal(&oam_pol(a, b), 1).unwrap();
        // (α|H⟩ + β|V⟩)|R⟩
        assert_eq!(out.amplitude(0b00), a);
        assert_eq!(out.amplitude(0b01), b);
        assert_eq!(out.len(), 2);
        let l = oam_swap_ideal(&oam_pol(c(0.0, 0.0), c(1.0, 0.0)), 1).unwrap();
        assert_eq!(l.amplitudes().keys().copied().collect::<Vec<_>>(), vec![0b01]);
    }

    #[test]
    fn interferometric_cnot_reproduces_target_state() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let out = oam_cnot_interferometric(&oam_pol(a, b), 1).unwrap();
        let want =
            SparseState::from_amplitudes(vec![QubitAddress::pol(1), QubitAddress::oam(1)], [(0b00, a), (0b11, b)])
                .unwrap();
        assert!(out.approx_eq_ray(&want, 1e-12));
        let r = oam_cnot_interferometric(&oam_pol(c(1.0, 0.0), c(0.0, 0.0)), 1).unwrap();
        assert!(r.approx_eq_ray(&oam_pol(c(1.0, 0.0), c(0.0, 0.0)), 1e-12));
        let v_in = SparseState::basis(vec![QubitAddress::pol(1), QubitAddress::oam(1)], 0b01).unwrap();
        assert!(matches!(oam_cnot_interferometric(&v_in, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn qplate_rules() {
        let reg = vec![QubitAddress::pol(1), QubitAddress::oam(1)];
        let rh = SparseState::basis(reg.clone(), 0b00).unwrap();
        assert_eq!(qplate_convert(&rh, 1).unwrap().amplitude(0), c(1.0, 0.0));
        let lv = SparseState::basis(reg.clone(), 0b11).unwrap();
        let out = qplate_convert(&lv, 1).unwrap();
        assert_eq!(out.register(), &[QubitAddress::pol(1)]);
        assert_eq!(out.amplitude(1), c(1.0, 0.0));
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let mixed = SparseState::from_amplitudes(reg.clone(), [(0b00, a), (0b11, b)]).unwrap();
        let out = qplate_convert(&mixed, 1).unwrap();
        assert_eq!((out.amplitude(0), out.amplitude(1)), (a, b));
        let rv = SparseState::basis(reg, 0b01).unwrap();
        assert!(matches!(qplate_convert(&rv, 1), Err(Error::Contract(_))));
    }
}
