//! Entangled-pair sources, PBS fusion into a six-photon GHZ state, and the
//! noise channels of the experiment.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, Member};
use crate::error::{Error, Result};
use crate::optics::{pauli_x, pbs_fuse};
use crate::state::{QubitAddress, SparseState, C64, PHOTONS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Singlet fidelity of each source pair.
    pub pair_fidelity: f64,
    /// Fraction of accepted six-fold events coming from higher-order emission.
    pub double_pair_fraction: f64,
    /// Bit-flip probability per encoded qubit.
    pub bitflip_prob: f64,
    pub spatial_visibility: f64,
    pub oam_visibility: f64,
    /// Efficiency of one OAM-to-polarization converter; only thins events.
    pub converter_efficiency: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            pair_fidelity: 0.98,
            double_pair_fraction: 0.113,
            // 1 − (1 − 0.073)^(1/18): about 7.3% of events carry a flip
            bitflip_prob: 0.0042,
            spatial_visibility: 0.994,
            oam_visibility: 0.996,
            converter_efficiency: 0.92,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        NoiseParams {
            pair_fidelity: 1.0,
            double_pair_fraction: 0.0,
            bitflip_prob: 0.0,
            spatial_visibility: 1.0,
            oam_visibility: 1.0,
            converter_efficiency: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pair_fidelity", self.pair_fidelity),
            ("double_pair_fraction", self.double_pair_fraction),
            ("bitflip_prob", self.bitflip_prob),
            ("spatial_visibility", self.spatial_visibility),
            ("oam_visibility", self.oam_visibility),
            ("converter_efficiency", self.converter_efficiency),
        ];
        for (name, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn pair_state(a: u8, b: u8, kind: BellKind) -> SparseState {
    let h = FRAC_1_SQRT_2;
    // bit 0 = photon a, bit 1 = photon b
    let amps: [(u64, f64); 2] = match kind {
        BellKind::PsiMinus => [(0b10, h), (0b01, -h)],
        BellKind::PsiPlus => [(0b10, h), (0b01, h)],
        BellKind::PhiPlus => [(0b00, h), (0b11, h)],
        BellKind::PhiMinus => [(0b00, h), (0b11, -h)],
    };
    SparseState::from_amplitudes(
        vec![QubitAddress::pol(a), QubitAddress::pol(b)],
        amps.map(|(k, v)| (k, C64::new(v, 0.0))),
    )
    .expect("normalized Bell state")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellKind {
    PsiMinus,
    PsiPlus,
    PhiPlus,
    PhiMinus,
}

/// Werner pair `v|ψ⁻⟩⟨ψ⁻| + (1−v)I/4` with `v = (4F − 1)/3`, written as a
/// mixture of the four Bell states.
pub fn bell_pair_on(photon_a: u8, photon_b: u8, pair_fidelity: f64) -> Result<Ensemble> {
    if !(0.25..=1.0).contains(&pair_fidelity) {
        return Err(Error::Domain(format!(
            "pair fidelity {pair_fidelity} is not reachable by a Werner state (needs 0.25 ≤ F ≤ 1)"
        )));
    }
    let other = (1.0 - pair_fidelity) / 3.0;
    let members = [
        (BellKind::PsiMinus, pair_fidelity),
        (BellKind::PsiPlus, other),
        (BellKind::PhiPlus, other),
        (BellKind::PhiMinus, other),
    ]
    .into_iter()
    .map(|(kind, weight)| Member {
        weight,
        state: pair_state(photon_a, photon_b, kind),
    })
    .collect();
    Ensemble::from_members(members)
}

/// Werner pair on photons 1 and 2.
pub fn bell_pair(pair_fidelity: f64) -> Result<Ensemble> {
    bell_pair_on(1, 2, pair_fidelity)
}

/// `(4F − 1)/3`.
pub fn werner_visibility(pair_fidelity: f64) -> f64 {
    (4.0 * pair_fidelity - 1.0) / 3.0
}

/// Maximally mixed pair, as four classical members.
pub fn white_noise_pair(photon_a: u8, photon_b: u8) -> Ensemble {
    let reg = vec![QubitAddress::pol(photon_a), QubitAddress::pol(photon_b)];
    let members = (0..4)
        .map(|k| Member {
            weight: 0.25,
            state: SparseState::basis(reg.clone(), k).expect("two-qubit basis state"),
        })
        .collect();
    Ensemble::from_members(members).expect("uniform weights")
}

/// Source pairs `(1, 2), (3, 4), …` feeding an `photons`-photon GHZ state.
pub fn source_pairs(photons: u8) -> Vec<(u8, u8)> {
    (0..photons / 2).map(|k| (2 * k + 1, 2 * k + 2)).collect()
}

/// Fuses photon 2 with 4, then 4 with 6, … over every product of the pair
/// ensembles, and flips photons 1, 3, 5, … so the ideal output is a GHZ state
/// in the computational basis: `(|H⟩^⊗6 − |V⟩^⊗6)/√2` for three pairs and
/// `(|H⟩^⊗4 + |V⟩^⊗4)/√2` for two. Returns the post-selected ensemble and the
/// overall success probability.
pub fn fuse_pairs(pairs: &[&Ensemble]) -> Result<(Ensemble, f64)> {
    if pairs.is_empty() {
        return Err(Error::Contract("fusion needs at least one pair".into()));
    }
    let mut partial: Vec<(f64, SparseState)> = pairs[0].members().iter().map(|m| (m.weight, m.state.clone())).collect();
    for (k, pair) in pairs.iter().enumerate().skip(1) {
        let (a, b) = (2 * k as u8, 2 * k as u8 + 2);
        let mut next = Vec::new();
        for (w, s) in &partial {
            for m in pair.members() {
                let joined = s.tensor(&m.state)?;
                match pbs_fuse(&joined, a, b) {
                    Ok((fused, _)) => next.push((w * m.weight, fused)),
                    Err(Error::ImpossibleOutcome { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        partial = next;
    }
    if partial.is_empty() {
        return Err(Error::ImpossibleOutcome { probability: 0.0 });
    }
    let mut members = Vec::with_capacity(partial.len());
    let mut success = 0.0;
    for (w, mut s) in partial {
        // the state's weight has accumulated every post-selection factor
        let p = s.weight();
        for photon in (1..=2 * pairs.len() as u8).step_by(2) {
            s = s.apply_unitary(&[QubitAddress::pol(photon)], &pauli_x())?;
        }
        success += w * p;
        members.push(Member {
            weight: w * p,
            state: s,
        });
    }
    Ok((Ensemble::from_members(members)?, success))
}

/// Polarization GHZ state of `photons` photons (even, at most six) from
/// Werner pairs. Only `pair_fidelity` is used here.
pub fn ghz_photons(photons: u8, noise: &NoiseParams) -> Result<(Ensemble, f64)> {
    if photons == 0 || photons % 2 == 1 || photons > PHOTONS {
        return Err(Error::Domain(format!(
            "fused GHZ states need an even number of photons up to {PHOTONS}, got {photons}"
        )));
    }
    let pairs = source_pairs(photons)
        .into_iter()
        .map(|(a, b)| bell_pair_on(a, b, noise.pair_fidelity))
        .collect::<Result<Vec<_>>>()?;
    fuse_pairs(&pairs.iter().collect::<Vec<_>>())
}

/// Six-photon polarization GHZ ensemble from three Werner pairs.
/// Only `pair_fidelity` is used here; the other channels act downstream.
pub fn ghz6(noise: &NoiseParams) -> Result<(Ensemble, f64)> {
    ghz_photons(PHOTONS, noise)
}

pub fn ideal_ghz6() -> SparseState {
    crate::state::ghz_state((1..=PHOTONS).map(QubitAddress::pol).collect(), -1.0).expect("normalized")
}

/// Independent X errors with probability `p` on each listed qubit.
pub fn apply_bitflip(ensemble: &Ensemble, addresses: &[QubitAddress], p: f64) -> Result<Ensemble> {
    addresses
        .iter()
        .try_fold(ensemble.clone(), |e, a| e.with_bit_flip(*a, p))
}

/// Z errors with probability `(1 − V)/2`, scaling the fringe contrast of
/// each listed qubit by `V`.
pub fn apply_visibility_dephasing(
    ensemble: &Ensemble,
    addresses: &[QubitAddress],
    visibility: f64,
) -> Result<Ensemble> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::Domain(format!("visibility {visibility} outside [0, 1]")));
    }
    addresses
        .iter()
        .try_fold(ensemble.clone(), |e, a| e.with_phase_flip(*a, (1.0 - visibility) / 2.0))
}

/// Classical branch left by double-pair emission in one source.
///
/// The emitting source is chosen uniformly. Its pair is replaced by white
/// noise at the source; after the fusions the photon of that source which
/// bypasses the PBSs (1, 3 or 5) carries an independent random logic value
/// and all other photons share one common random value. All qubits of a
/// photon carry the photon's value, and no coherence survives.
pub fn double_pair_branch(register: &[QubitAddress]) -> Result<Ensemble> {
    let photons = register.iter().map(|a| a.photon).max().unwrap_or(0);
    if photons < 2 || photons % 2 == 1 {
        return Err(Error::Contract(format!(
            "double-pair noise needs photons 1..2k from k sources, register ends at photon {photons}"
        )));
    }
    for photon in 1..=photons {
        if !register.iter().any(|a| a.photon == photon) {
            return Err(Error::Contract(format!(
                "double-pair noise needs every source photon; photon {photon} is absent"
            )));
        }
    }
    let sources = source_pairs(photons);
    let mut members = Vec::with_capacity(4 * sources.len());
    for (lone, _) in sources {
        for lone_value in [false, true] {
            for common in [false, true] {
                let bits = register
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| if a.photon == lone { lone_value } else { common })
                    .map(|(k, _)| 1u64 << k)
                    .sum();
                members.push(Member {
                    weight: 1.0,
                    state: SparseState::basis(register.to_vec(), bits)?,
                });
            }
        }
    }
    Ensemble::from_members(members)
}

/// `(1 − fraction)·ρ + fraction·ρ_double-pair`.
pub fn apply_double_pair_noise(ensemble: &Ensemble, fraction: f64) -> Result<Ensemble> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("double-pair fraction {fraction} outside [0, 1]")));
    }
    if fraction == 0.0 {
        return Ok(ensemble.clone());
    }
    let branch = double_pair_branch(ensemble.register())?;
    ensemble.mix(&branch, fraction)
}
