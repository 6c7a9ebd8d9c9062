//! Mixed states as weighted pure-state decompositions.
//!
//! Local Pauli noise (independent X and Z flips per qubit) is kept in
//! factored form on top of the members: the ensemble stands for
//! `Λ(Σ wᵢ |ψᵢ⟩⟨ψᵢ|)` with `Λ` the product of the per-qubit channels.
//! Readout code evaluates `Λ` exactly in the Heisenberg picture;
//! [`Ensemble::materialize`] expands it into explicit branches.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Gate, QubitAddress, SparseState, C64};

/// Branch count above which channel expansion switches to Monte Carlo.
pub const EXACT_BRANCH_LIMIT: usize = 10_000;

const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub weight: f64,
    pub state: SparseState,
}

/// Independent bit-flip (`x`) and phase-flip (`z`) probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliRates {
    pub x: f64,
    pub z: f64,
}

impl PauliRates {
    pub fn is_trivial(&self) -> bool {
        self.x == 0.0 && self.z == 0.0
    }

    /// Probabilities of I, X, Z, Y (= XZ up to phase).
    pub fn branch_probs(&self) -> [f64; 4] {
        let (x, z) = (self.x, self.z);
        [(1.0 - x) * (1.0 - z), x * (1.0 - z), (1.0 - x) * z, x * z]
    }
}

/// Two successive flips with probabilities `a`, `b` act as one with this
/// probability.
fn compose_flip(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<Member>,
    channels: BTreeMap<QubitAddress, PauliRates>,
}

impl Ensemble {
    pub fn pure(state: SparseState) -> Self {
        Ensemble {
            members: vec![Member { weight: 1.0, state }],
            channels: BTreeMap::new(),
        }
    }

    /// Normalizes the weights; zero-weight members are dropped.
    pub fn from_members(members: Vec<Member>) -> Result<Self> {
        if members.iter().any(|m| !(m.weight >= 0.0) || !m.weight.is_finite()) {
            return Err(Error::Numeric(
                "ensemble weights must be finite and non-negative".into(),
            ));
        }
        let mut members: Vec<Member> = members.into_iter().filter(|m| m.weight > 0.0).collect();
        let total: f64 = members.iter().map(|m| m.weight).sum();
        if members.is_empty() || total <= 0.0 {
            return Err(Error::Numeric("ensemble has no weight".into()));
        }
        let reg = members[0].state.register().to_vec();
        if members.iter().any(|m| m.state.register() != reg.as_slice()) {
            return Err(Error::RegisterMismatch(
                "ensemble members must share one register".into(),
            ));
        }
        for m in &mut members {
            m.weight /= total;
        }
        Ok(Ensemble {
            members,
            channels: BTreeMap::new(),
        })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn channels(&self) -> &BTreeMap<QubitAddress, PauliRates> {
        &self.channels
    }

    pub fn channel(&self, addr: QubitAddress) -> PauliRates {
        self.channels.get(&addr).copied().unwrap_or_default()
    }

    pub fn has_channels(&self) -> bool {
        self.channels.values().any(|c| !c.is_trivial())
    }

    pub fn register(&self) -> &[QubitAddress] {
        self.members[0].state.register()
    }

    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|m| m.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() < WEIGHT_TOL
    }

    /// Applies `f` to every member state. Pending channels must be
    /// materialized first since they sit after the members.
    pub fn map_states(&self, f: impl Fn(&SparseState) -> Result<SparseState>) -> Result<Self> {
        if self.has_channels() {
            return Err(Error::Contract(
                "ensemble carries pending noise channels; materialize before further evolution".into(),
            ));
        }
        let members = self
            .members
            .iter()
            .map(|m| {
                Ok(Member {
                    weight: m.weight,
                    state: f(&m.state)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ensemble::from_members(members)
    }

    /// `(1 − fraction)·self + fraction·other`.
    pub fn mix(&self, other: &Ensemble, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Domain(format!("mixing fraction {fraction} outside [0, 1]")));
        }
        if self.has_channels() || other.has_channels() {
            return Err(Error::Contract("cannot mix ensembles with pending channels".into()));
        }
        if fraction == 0.0 {
            return Ok(self.clone());
        }
        let scaled = |e: &Ensemble, s: f64| {
            e.members
                .iter()
                .map(move |m| Member {
                    weight: m.weight * s,
                    state: m.state.clone(),
                })
                .collect::<Vec<_>>()
        };
        let mut members = scaled(self, 1.0 - fraction);
        members.extend(scaled(other, fraction));
        Ensemble::from_members(members)
    }

    fn check_active(&self, addr: QubitAddress) -> Result<()> {
        if self.register().contains(&addr) {
            Ok(())
        } else {
            Err(Error::InactiveQubit(addr))
        }
    }

    /// Composes an X flip with probability `p` onto `addr`.
    pub fn with_bit_flip(&self, addr: QubitAddress, p: f64) -> Result<Self> {
        check_prob(p)?;
        self.check_active(addr)?;
        let mut out = self.clone();
        let c = out.channels.entry(addr).or_default();
        c.x = compose_flip(c.x, p);
        Ok(out)
    }

    /// Composes a Z flip with probability `p` onto `addr`.
    pub fn with_phase_flip(&self, addr: QubitAddress, p: f64) -> Result<Self> {
        check_prob(p)?;
        self.check_active(addr)?;
        let mut out = self.clone();
        let c = out.channels.entry(addr).or_default();
        c.z = compose_flip(c.z, p);
        Ok(out)
    }

    /// Expands the pending channels into explicit Pauli-error branches.
    ///
    /// Exact enumeration when the branch count stays within
    /// [`EXACT_BRANCH_LIMIT`]; otherwise `EXACT_BRANCH_LIMIT` Monte Carlo
    /// trajectories drawn from `seed`.
    pub fn materialize(&self, seed: u64) -> Result<Self> {
        let noisy: Vec<(QubitAddress, PauliRates)> = self
            .channels
            .iter()
            .filter(|(_, c)| !c.is_trivial())
            .map(|(a, c)| (*a, *c))
            .collect();
        if noisy.is_empty() {
            let mut out = self.clone();
            out.channels.clear();
            return Ok(out);
        }
        let per_qubit: Vec<Vec<(usize, f64)>> = noisy
            .iter()
            .map(|(_, c)| {
                c.branch_probs()
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| *p > 0.0)
                    .collect()
            })
            .collect();
        let patterns: f64 = per_qubit.iter().map(|v| v.len() as f64).product();
        let branches = patterns * self.members.len() as f64;

        let apply = |state: &SparseState, pattern: &[usize]| -> Result<SparseState> {
            let mut s = state.clone();
            for ((addr, _), &pauli) in noisy.iter().zip(pattern) {
                if let Some(g) = pauli_gate(pauli) {
                    s = s.apply_unitary(&[*addr], &g)?;
                }
            }
            Ok(s)
        };

        let mut members = Vec::new();
        if branches <= EXACT_BRANCH_LIMIT as f64 {
            let mut pattern = vec![0usize; noisy.len()];
            let mut digits = vec![0usize; noisy.len()];
            loop {
                let mut prob = 1.0;
                for (q, d) in digits.iter().enumerate() {
                    let (pauli, p) = per_qubit[q][*d];
                    pattern[q] = pauli;
                    prob *= p;
                }
                for m in &self.members {
                    members.push(Member {
                        weight: m.weight * prob,
                        state: apply(&m.state, &pattern)?,
                    });
                }
                // odometer over the per-qubit branch lists
                let mut q = 0;
                loop {
                    if q == digits.len() {
                        return finish(members);
                    }
                    digits[q] += 1;
                    if digits[q] < per_qubit[q].len() {
                        break;
                    }
                    digits[q] = 0;
                    q += 1;
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cumulative: Vec<f64> = self
            .members
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m.weight;
                Some(*acc)
            })
            .collect();
        let total = *cumulative.last().expect("non-empty");
        let w = 1.0 / EXACT_BRANCH_LIMIT as f64;
        for _ in 0..EXACT_BRANCH_LIMIT {
            let u: f64 = rng.random::<f64>() * total;
            let idx = cumulative.partition_point(|c| *c < u).min(self.members.len() - 1);
            let pattern: Vec<usize> = noisy
                .iter()
                .map(|(_, c)| {
                    let x = rng.random::<f64>() < c.x;
                    let z = rng.random::<f64>() < c.z;
                    x as usize | (z as usize) << 1
                })
                .collect();
            members.push(Member {
                weight: w,
                state: apply(&self.members[idx].state, &pattern)?,
            });
        }
        finish(members)
    }
}

fn finish(members: Vec<Member>) -> Result<Ensemble> {
    Ensemble::from_members(members)
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability {p} outside [0, 1]")))
    }
}

/// 0 = I, 1 = X, 2 = Z, 3 = XZ.
fn pauli_gate(code: usize) -> Option<Gate> {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    match code {
        0 => None,
        1 => Some(Gate::one([[o, l], [l, o]])),
        2 => Some(Gate::one([[l, o], [o, -l]])),
        _ => Some(Gate::one([[o, -l], [l, o]])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ghz_state;

    #[test]
    fn weights_are_normalized() {
        let p = QubitAddress::pol(1);
        let e = Ensemble::from_members(vec![
            Member {
                weight: 2.0,
                state: SparseState::basis(vec![p], 0).unwrap(),
            },
            Member {
                weight: 6.0,
                state: SparseState::basis(vec![p], 1).unwrap(),
            },
        ])
        .unwrap();
        assert!(e.is_normalized());
        assert!((e.members()[1].weight - 0.75).abs() < 1e-15);
        assert!(Ensemble::from_members(vec![]).is_err());
    }

    #[test]
    fn flips_compose() {
        let p = QubitAddress::pol(1);
        let e = Ensemble::pure(SparseState::basis(vec![p], 0).unwrap());
        let e = e.with_bit_flip(p, 0.1).unwrap().with_bit_flip(p, 0.2).unwrap();
        assert!((e.channel(p).x - (0.1 * 0.8 + 0.2 * 0.9)).abs() < 1e-15);
        assert!(e.with_bit_flip(QubitAddress::pol(2), 0.1).is_err());
        assert!(e.with_bit_flip(p, 1.5).is_err());
        assert!(e.map_states(|s| Ok(s.clone())).is_err());
    }

    #[test]
    fn exact_materialization_is_trace_preserving() {
        let reg: Vec<_> = (1..=3).map(QubitAddress::pol).collect();
        let mut e = Ensemble::pure(ghz_state(reg.clone(), -1.0).unwrap());
        for a in &reg {
            e = e.with_bit_flip(*a, 0.1).unwrap().with_phase_flip(*a, 0.05).unwrap();
        }
        let m = e.materialize(1).unwrap();
        assert_eq!(m.members().len(), 64);
        assert!(m.is_normalized());
        assert!(!m.has_channels());
        // Probability of |000> is 0.5·(0.9³ + 0.1³).
        let p000: f64 = m
            .members()
            .iter()
            .map(|mb| mb.weight * mb.state.amplitude(0).norm_sqr())
            .sum();
        assert!((p000 - 0.5 * (0.9f64.powi(3) + 0.1f64.powi(3))).abs() < 1e-12);
    }

    #[test]
    fn large_expansion_falls_back_to_monte_carlo() {
        // 2^15 branches
        let reg = crate::state::hyper_register(5);
        let mut e = Ensemble::pure(ghz_state(reg.clone(), -1.0).unwrap());
        for a in &reg {
            e = e.with_bit_flip(*a, 0.2).unwrap();
        }
        let m = e.materialize(7).unwrap();
        assert_eq!(m.members().len(), EXACT_BRANCH_LIMIT);
        assert!(m.is_normalized());
        assert_eq!(m, e.materialize(7).unwrap());
    }
}
