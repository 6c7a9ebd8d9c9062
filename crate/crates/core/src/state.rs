//! Sparse state vectors over a dynamic register of photon qubits.
//!
//! Every qubit is addressed by a photon number and a degree of freedom.
//! Logic `|0⟩` is `|H⟩` (polarization), `|U⟩` (path) or `|R⟩` (OAM);
//! logic `|1⟩` is `|V⟩`, `|D⟩` or `|L⟩`. Bit `k` of a basis index holds the
//! value of the qubit at register position `k`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_TOL: f64 = 1e-12;

/// Projections with success probability below this are reported as impossible.
pub const IMPOSSIBLE_TOL: f64 = 1e-15;

const UNITARY_TOL: f64 = 1e-9;

/// Number of photons in the full experiment.
pub const PHOTONS: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dof {
    Pol,
    Path,
    Oam,
    /// Transient arm of an internal interferometer. Never part of a
    /// measured register.
    Arm,
}

impl Dof {
    pub fn rank(self) -> usize {
        match self {
            Dof::Pol => 0,
            Dof::Path => 1,
            Dof::Oam => 2,
            Dof::Arm => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QubitAddress {
    pub photon: u8,
    pub dof: Dof,
}

impl QubitAddress {
    pub fn new(photon: u8, dof: Dof) -> Result<Self> {
        if !(1..=PHOTONS).contains(&photon) {
            return Err(Error::Config(format!("photon number {photon} outside 1..={PHOTONS}")));
        }
        Ok(QubitAddress { photon, dof })
    }

    /// Panics on an out-of-range photon; for literal addresses.
    pub fn pol(photon: u8) -> Self {
        Self::new(photon, Dof::Pol).expect("photon in range")
    }

    pub fn path(photon: u8) -> Self {
        Self::new(photon, Dof::Path).expect("photon in range")
    }

    pub fn oam(photon: u8) -> Self {
        Self::new(photon, Dof::Oam).expect("photon in range")
    }

    pub fn arm(photon: u8) -> Self {
        Self::new(photon, Dof::Arm).expect("photon in range")
    }

    /// `3·(photon−1) + rank(dof)`; `None` for interferometer arms.
    pub fn flat_index(self) -> Option<usize> {
        match self.dof {
            Dof::Arm => None,
            dof => Some(3 * (self.photon as usize - 1) + dof.rank()),
        }
    }

    pub fn from_flat_index(index: usize) -> Result<Self> {
        let dof = match index % 3 {
            0 => Dof::Pol,
            1 => Dof::Path,
            _ => Dof::Oam,
        };
        Self::new((index / 3 + 1) as u8, dof)
    }
}

impl fmt::Display for QubitAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dof = match self.dof {
            Dof::Pol => "pol",
            Dof::Path => "path",
            Dof::Oam => "oam",
            Dof::Arm => "arm",
        };
        write!(f, "{dof}{}", self.photon)
    }
}

/// Register of `photons` photons with all three degrees of freedom, in flat
/// index order.
pub fn hyper_register(photons: u8) -> Vec<QubitAddress> {
    (0..3 * photons as usize)
        .map(|i| QubitAddress::from_flat_index(i).expect("photon in range"))
        .collect()
}

/// A 2×2 or 4×4 matrix acting on one or two register qubits.
///
/// For two targets `[a, b]` the local index is `2·bit(a) + bit(b)`, i.e. the
/// first target is the more significant factor of a Kronecker product.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    dim: usize,
    m: Vec<C64>,
}

impl Gate {
    pub fn one(m: [[C64; 2]; 2]) -> Self {
        Gate {
            dim: 2,
            m: m.iter().flatten().copied().collect(),
        }
    }

    pub fn two(m: [[C64; 4]; 4]) -> Self {
        Gate {
            dim: 4,
            m: m.iter().flatten().copied().collect(),
        }
    }

    pub fn identity(qubits: usize) -> Self {
        let dim = 1 << qubits;
        let mut m = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = C64::new(1.0, 0.0);
        }
        Gate { dim, m }
    }

    /// Controlled gate: identity when `control` is 0, `target_op` when 1.
    /// Targets are `[control, target]`.
    pub fn controlled(target_op: &Gate) -> Self {
        assert_eq!(target_op.dim, 2, "controlled gates take a single-qubit operator");
        Self::block_diag(&Gate::identity(1), target_op)
    }

    /// `diag(low, high)` where the first target selects the block.
    pub fn block_diag(low: &Gate, high: &Gate) -> Self {
        assert!(low.dim == 2 && high.dim == 2);
        let z = C64::new(0.0, 0.0);
        let mut m = vec![z; 16];
        for r in 0..2 {
            for c in 0..2 {
                m[r * 4 + c] = low.get(r, c);
                m[(r + 2) * 4 + c + 2] = high.get(r, c);
            }
        }
        Gate { dim: 4, m }
    }

    /// Kronecker product `self ⊗ other` of two single-qubit gates.
    pub fn kron(&self, other: &Gate) -> Self {
        assert!(self.dim == 2 && other.dim == 2);
        let mut m = vec![C64::new(0.0, 0.0); 16];
        for r in 0..4 {
            for c in 0..4 {
                m[r * 4 + c] = self.get(r >> 1, c >> 1) * other.get(r & 1, c & 1);
            }
        }
        Gate { dim: 4, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.m[r * self.dim + c]
    }

    pub fn matmul(&self, rhs: &Gate) -> Gate {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                m[r * d + c] = (0..d).map(|k| self.get(r, k) * rhs.get(k, c)).sum();
            }
        }
        Gate { dim: d, m }
    }

    pub fn adjoint(&self) -> Gate {
        let d = self.dim;
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                m[r * d + c] = self.get(c, r).conj();
            }
        }
        Gate { dim: d, m }
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// Largest entry-wise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().matmul(self);
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let want = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((p.get(r, c) - want).norm());
            }
        }
        worst
    }

    /// True when the two gates agree up to one global phase.
    pub fn approx_eq_up_to_phase(&self, other: &Gate, tol: f64) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let (idx, _) = other
            .m
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("non-empty gate");
        if other.m[idx].norm() < tol {
            return false;
        }
        let phase = self.m[idx] / other.m[idx];
        if (phase.norm() - 1.0).abs() > tol {
            return false;
        }
        self.m.iter().zip(&other.m).all(|(a, b)| (a - phase * b).norm() < tol)
    }
}

/// Value given to a freshly added qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewQubit {
    Value(bool),
    /// New bit equals the named qubit's bit in every basis term
    /// (a CNOT onto a fresh `|0⟩` target).
    CopyOf(QubitAddress),
}

/// Sub-normalized pure state over the active register.
///
/// `weight` accumulates the success probability of every post-selection
/// applied on the way to this branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    register: Vec<QubitAddress>,
    amplitudes: BTreeMap<u64, C64>,
    weight: f64,
}

fn bit(index: u64, pos: usize) -> bool {
    (index >> pos) & 1 == 1
}

fn check_distinct(register: &[QubitAddress]) -> Result<()> {
    for (i, a) in register.iter().enumerate() {
        if register[..i].contains(a) {
            return Err(Error::DuplicateQubit(*a));
        }
    }
    Ok(())
}

impl SparseState {
    pub fn basis(register: Vec<QubitAddress>, bits: u64) -> Result<Self> {
        if register.is_empty() {
            return Err(Error::Config("register must not be empty".into()));
        }
        check_distinct(&register)?;
        if register.len() > 63 || bits >> register.len() != 0 {
            return Err(Error::Config(format!(
                "basis index {bits:#b} does not fit a {}-qubit register",
                register.len()
            )));
        }
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(bits, C64::new(1.0, 0.0));
        Ok(SparseState {
            register,
            amplitudes,
            weight: 1.0,
        })
    }

    /// Builds a state from explicit amplitudes; small entries are pruned and
    /// the squared norm must not exceed one.
    pub fn from_amplitudes(
        register: Vec<QubitAddress>,
        amplitudes: impl IntoIterator<Item = (u64, C64)>,
    ) -> Result<Self> {
        check_distinct(&register)?;
        let width = register.len();
        let mut map = BTreeMap::new();
        for (k, a) in amplitudes {
            if width < 64 && k >> width != 0 {
                return Err(Error::Config(format!(
                    "basis index {k:#b} does not fit a {width}-qubit register"
                )));
            }
            *map.entry(k).or_insert(C64::new(0.0, 0.0)) += a;
        }
        let mut s = SparseState {
            register,
            amplitudes: map,
            weight: 1.0,
        };
        s.prune();
        let n = s.norm_sqr();
        if n == 0.0 || n > 1.0 + 1e-9 {
            return Err(Error::Numeric(format!("squared norm {n} outside (0, 1]")));
        }
        Ok(s)
    }

    pub fn register(&self) -> &[QubitAddress] {
        &self.register
    }

    pub fn amplitudes(&self) -> &BTreeMap<u64, C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: u64) -> C64 {
        self.amplitudes.get(&index).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn position(&self, addr: QubitAddress) -> Result<usize> {
        self.register
            .iter()
            .position(|a| *a == addr)
            .ok_or(Error::InactiveQubit(addr))
    }

    pub fn is_active(&self, addr: QubitAddress) -> bool {
        self.register.contains(&addr)
    }

    fn prune(&mut self) {
        self.amplitudes.retain(|_, a| a.norm() >= PRUNE_TOL);
    }

    pub fn apply_unitary(&self, targets: &[QubitAddress], gate: &Gate) -> Result<Self> {
        if targets.len() != gate.qubits() || !(1..=2).contains(&targets.len()) {
            return Err(Error::Contract(format!(
                "{}-qubit gate given {} targets",
                gate.qubits(),
                targets.len()
            )));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::DuplicateQubit(targets[0]));
        }
        let err = gate.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Error::Numeric(format!("gate is not unitary (deviation {err:e})")));
        }
        let pos: Vec<usize> = targets.iter().map(|t| self.position(*t)).collect::<Result<_>>()?;
        let mask: u64 = pos.iter().map(|p| 1u64 << p).sum();
        let local = |index: u64| -> usize { pos.iter().fold(0usize, |acc, p| (acc << 1) | bit(index, *p) as usize) };
        let spread = |l: usize| -> u64 {
            pos.iter()
                .rev()
                .enumerate()
                .map(|(k, p)| (((l >> k) & 1) as u64) << p)
                .sum()
        };

        let dim = gate.dim();
        let mut groups: BTreeMap<u64, Vec<C64>> = BTreeMap::new();
        for (&k, &a) in &self.amplitudes {
            groups.entry(k & !mask).or_insert_with(|| vec![C64::new(0.0, 0.0); dim])[local(k)] += a;
        }
        let mut out = BTreeMap::new();
        for (base, v) in groups {
            for (l, a) in gate.apply_vec(&v).into_iter().enumerate() {
                if a.norm() >= PRUNE_TOL {
                    out.insert(base | spread(l), a);
                }
            }
        }
        Ok(SparseState {
            register: self.register.clone(),
            amplitudes: out,
            weight: self.weight,
        })
    }

    /// Appends `addr` to the register.
    pub fn add_qubit(&self, addr: QubitAddress, value: NewQubit) -> Result<Self> {
        if self.is_active(addr) {
            return Err(Error::DuplicateQubit(addr));
        }
        let new_pos = self.register.len();
        let src = match value {
            NewQubit::CopyOf(src) => Some(self.position(src)?),
            NewQubit::Value(_) => None,
        };
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(&k, &a)| {
                let b = match (value, src) {
                    (NewQubit::Value(v), _) => v,
                    (_, Some(p)) => bit(k, p),
                    _ => unreachable!(),
                };
                (k | ((b as u64) << new_pos), a)
            })
            .collect();
        let mut register = self.register.clone();
        register.push(addr);
        Ok(SparseState {
            register,
            amplitudes,
            weight: self.weight,
        })
    }

    /// Keeps the basis terms accepted by `keep`, renormalizes, and folds the
    /// success probability into `weight`.
    pub fn post_select(&self, keep: impl Fn(u64) -> bool) -> Result<(Self, f64)> {
        let total = self.norm_sqr();
        let kept: BTreeMap<u64, C64> = self
            .amplitudes
            .iter()
            .filter(|(k, _)| keep(**k))
            .map(|(k, a)| (*k, *a))
            .collect();
        let kept_norm: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        let p = if total > 0.0 { kept_norm / total } else { 0.0 };
        if p < IMPOSSIBLE_TOL {
            return Err(Error::ImpossibleOutcome { probability: p });
        }
        let scale = 1.0 / kept_norm.sqrt();
        let mut s = SparseState {
            register: self.register.clone(),
            amplitudes: kept.into_iter().map(|(k, a)| (k, a * scale)).collect(),
            weight: self.weight * p,
        };
        s.prune();
        Ok((s, p))
    }

    pub fn project_qubit(&self, addr: QubitAddress, outcome: bool) -> Result<(Self, f64)> {
        let pos = self.position(addr)?;
        self.post_select(|k| bit(k, pos) == outcome)
    }

    /// Probability of `outcome` on `addr` without collapsing.
    pub fn probability(&self, addr: QubitAddress, outcome: bool) -> Result<f64> {
        let pos = self.position(addr)?;
        let total = self.norm_sqr();
        let hit: f64 = self
            .amplitudes
            .iter()
            .filter(|(k, _)| bit(**k, pos) == outcome)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(hit / total)
    }

    /// Drops a qubit whose bit is the same in every basis term.
    pub fn remove_qubit(&self, addr: QubitAddress) -> Result<Self> {
        let pos = self.position(addr)?;
        let mut values = self.amplitudes.keys().map(|&k| bit(k, pos));
        if let Some(first) = values.next() {
            if values.any(|b| b != first) {
                return Err(Error::Contract(format!(
                    "{addr} is entangled with the rest of the register"
                )));
            }
        }
        let low = (1u64 << pos) - 1;
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(&k, &a)| ((k & low) | ((k >> (pos + 1)) << pos), a))
            .collect();
        let mut register = self.register.clone();
        register.remove(pos);
        Ok(SparseState {
            register,
            amplitudes,
            weight: self.weight,
        })
    }

    /// `⟨reference|self⟩`.
    pub fn overlap(&self, reference: &SparseState) -> Result<C64> {
        if self.register != reference.register {
            return Err(Error::RegisterMismatch(format!(
                "{:?} vs {:?}",
                self.register, reference.register
            )));
        }
        Ok(reference
            .amplitudes
            .iter()
            .filter_map(|(k, r)| self.amplitudes.get(k).map(|a| r.conj() * a))
            .sum())
    }

    /// `self ⊗ other`; `other`'s qubits are appended to the register.
    pub fn tensor(&self, other: &SparseState) -> Result<Self> {
        let mut register = self.register.clone();
        register.extend_from_slice(&other.register);
        check_distinct(&register)?;
        let shift = self.register.len();
        let mut amplitudes = BTreeMap::new();
        for (&ka, &a) in &self.amplitudes {
            for (&kb, &b) in &other.amplitudes {
                amplitudes.insert(ka | (kb << shift), a * b);
            }
        }
        let mut s = SparseState {
            register,
            amplitudes,
            weight: self.weight * other.weight,
        };
        s.prune();
        Ok(s)
    }

    /// Re-keys amplitudes onto a permutation of the current register.
    pub fn permuted(&self, order: &[QubitAddress]) -> Result<Self> {
        if order.len() != self.register.len() {
            return Err(Error::RegisterMismatch(format!(
                "permutation of {} qubits given for {}",
                order.len(),
                self.register.len()
            )));
        }
        check_distinct(order)?;
        let from: Vec<usize> = order.iter().map(|a| self.position(*a)).collect::<Result<_>>()?;
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(&k, &a)| {
                let nk = from
                    .iter()
                    .enumerate()
                    .map(|(new, old)| (bit(k, *old) as u64) << new)
                    .sum();
                (nk, a)
            })
            .collect();
        Ok(SparseState {
            register: order.to_vec(),
            amplitudes,
            weight: self.weight,
        })
    }

    /// Register sorted by photon, then degree of freedom.
    pub fn canonical(&self) -> Result<Self> {
        let mut order = self.register.clone();
        order.sort();
        self.permuted(&order)
    }

    /// Maximum per-amplitude deviation after removing the global phase,
    /// aligned on the reference's largest amplitude.
    pub fn phase_aligned_distance(&self, reference: &SparseState) -> Result<f64> {
        if self.register != reference.register {
            return Err(Error::RegisterMismatch(format!(
                "{:?} vs {:?}",
                self.register, reference.register
            )));
        }
        let Some((&k, &r)) = reference
            .amplitudes
            .iter()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        else {
            return Ok(if self.is_empty() { 0.0 } else { f64::INFINITY });
        };
        let a = self.amplitude(k);
        let phase = if a.norm() > 0.0 {
            (r / a) / (r / a).norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let keys: std::collections::BTreeSet<u64> = self
            .amplitudes
            .keys()
            .chain(reference.amplitudes.keys())
            .copied()
            .collect();
        Ok(keys
            .into_iter()
            .map(|k| (self.amplitude(k) * phase - reference.amplitude(k)).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq_ray(&self, reference: &SparseState, tol: f64) -> bool {
        self.phase_aligned_distance(reference).map(|d| d < tol).unwrap_or(false)
    }

    /// Dense amplitude vector in basis-index order.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); 1 << self.register.len()];
        for (&k, &a) in &self.amplitudes {
            v[k as usize] = a;
        }
        v
    }
}

/// `(|0…0⟩ + sign·|1…1⟩)/√2` over `register`.
pub fn ghz_state(register: Vec<QubitAddress>, sign: f64) -> Result<SparseState> {
    let n = register.len();
    let ones = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    SparseState::from_amplitudes(register, [(0, C64::new(h, 0.0)), (ones, C64::new(sign * h, 0.0))])
}
