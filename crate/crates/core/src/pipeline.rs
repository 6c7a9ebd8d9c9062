//! The full experiment: state preparation for the 1-, 3-, 12- and 18-qubit
//! configurations, per-qubit analyzer settings, exact outcome
//! distributions and Poissonian event sampling.
//!
//! Readout is evaluated per photon. For every analyzer outcome the physical
//! detection chain (Mach-Zehnder on the path qubit, wave plates and PBS on
//! polarization, then OAM transfer onto polarization and a second
//! polarization analysis) is run on each basis input to obtain the
//! outcome's Kraus row. Pending Pauli channels are folded into the
//! resulting effects in the Heisenberg picture, so outcome probabilities are
//! exact without expanding the noise into branches.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::analysis::{expectation_from_histogram, FringePoint, FringeSeries};
use crate::ensemble::{Ensemble, PauliRates};
use crate::error::{Error, Result};
use crate::optics::{
    hwp_matrix, oam_cnot_interferometric, pbs_split, pol_analyzer, qplate_convert, spatial_analyzer, spp_encode,
    AnalyzerBasis, Branch, ElementAngle,
};
use crate::source::{apply_bitflip, apply_double_pair_noise, apply_visibility_dephasing, ghz_photons, NoiseParams};
use crate::state::{Dof, QubitAddress, SparseState, C64, PHOTONS};

/// Qubit counts of the available sub-experiments.
pub const SUPPORTED_QUBIT_COUNTS: [usize; 4] = [1, 3, 12, 18];

/// `k·π/18` for `k = 0..=18`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=18).map(|k| k as f64 * PI / 18.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    bases: BTreeMap<QubitAddress, AnalyzerBasis>,
}

impl MeasurementSetting {
    pub fn new(bases: impl IntoIterator<Item = (QubitAddress, AnalyzerBasis)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (addr, basis) in bases {
            if map.insert(addr, basis).is_some() {
                return Err(Error::DuplicateQubit(addr));
            }
        }
        Ok(MeasurementSetting { bases: map })
    }

    pub fn uniform(register: &[QubitAddress], basis: AnalyzerBasis) -> Self {
        MeasurementSetting {
            bases: register.iter().map(|a| (*a, basis)).collect(),
        }
    }

    pub fn computational(register: &[QubitAddress]) -> Self {
        Self::uniform(register, AnalyzerBasis::Computational)
    }

    pub fn superposition(register: &[QubitAddress], theta: f64) -> Result<Self> {
        Ok(Self::uniform(register, AnalyzerBasis::superposition(theta)?))
    }

    /// Replaces the basis of one qubit.
    pub fn with(mut self, addr: QubitAddress, basis: AnalyzerBasis) -> Self {
        self.bases.insert(addr, basis);
        self
    }

    pub fn basis(&self, addr: QubitAddress) -> Option<AnalyzerBasis> {
        self.bases.get(&addr).copied()
    }

    pub fn bases(&self) -> &BTreeMap<QubitAddress, AnalyzerBasis> {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn is_computational(&self) -> bool {
        self.bases.values().all(|b| *b == AnalyzerBasis::Computational)
    }

    fn check_covers(&self, register: &[QubitAddress]) -> Result<()> {
        if register.len() != self.bases.len() || register.iter().any(|a| !self.bases.contains_key(a)) {
            return Err(Error::RegisterMismatch(format!(
                "setting covers {:?}, register is {:?}",
                self.bases.keys().collect::<Vec<_>>(),
                register
            )));
        }
        Ok(())
    }
}

/// `(−1)^popcount(outcome)`.
pub fn outcome_parity(outcome: u64) -> i32 {
    if outcome.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Dense probability vector over `2^N` outcomes. Bit `k` of an outcome is
/// the result on register position `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    register: Vec<QubitAddress>,
    setting: MeasurementSetting,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn from_probabilities(
        register: Vec<QubitAddress>,
        setting: MeasurementSetting,
        probs: Vec<f64>,
    ) -> Result<Self> {
        setting.check_covers(&register)?;
        if probs.len() != 1usize << register.len() {
            return Err(Error::Config(format!(
                "{} probabilities for a {}-qubit register",
                probs.len(),
                register.len()
            )));
        }
        if probs.iter().any(|p| !(*p >= -1e-15)) {
            return Err(Error::Numeric("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("probabilities sum to {total}")));
        }
        Ok(OutcomeDistribution {
            register,
            setting,
            probs,
        })
    }

    pub fn register(&self) -> &[QubitAddress] {
        &self.register
    }

    pub fn setting(&self) -> &MeasurementSetting {
        &self.setting
    }

    pub fn n_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn probability(&self, outcome: u64) -> f64 {
        self.probs.get(outcome as usize).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Outcomes with probability above `1e-15`, in increasing order.
    pub fn nonzero(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 1e-15)
            .map(|(k, p)| (k as u64, *p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Parity expectation `Σ p_s v_s`.
    pub fn expectation(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * outcome_parity(k as u64) as f64)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeHistogram {
    register: Vec<QubitAddress>,
    setting: MeasurementSetting,
    counts: BTreeMap<u64, u64>,
    total_events: u64,
    duration_s: f64,
}

impl OutcomeHistogram {
    pub fn from_counts(
        register: Vec<QubitAddress>,
        setting: MeasurementSetting,
        counts: BTreeMap<u64, u64>,
        duration_s: f64,
    ) -> Result<Self> {
        setting.check_covers(&register)?;
        let n = register.len();
        if let Some(k) = counts.keys().find(|k| n < 64 && **k >> n != 0) {
            return Err(Error::Config(format!("outcome {k:#b} does not fit {n} qubits")));
        }
        let counts: BTreeMap<u64, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let total_events = counts.values().sum();
        Ok(OutcomeHistogram {
            register,
            setting,
            counts,
            total_events,
            duration_s,
        })
    }

    pub fn register(&self) -> &[QubitAddress] {
        &self.register
    }

    pub fn setting(&self) -> &MeasurementSetting {
        &self.setting
    }

    pub fn n_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn count(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn total_events(&self) -> u64 {
        self.total_events
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }
}

/// Event source seeded by `seed`, on an independent stream per `stream`.
pub fn derived_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson-distributed event total with multinomial allocation.
pub fn sample_histogram(
    distribution: &OutcomeDistribution,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<OutcomeHistogram> {
    sample_histogram_with(distribution, rate_hz, duration_s, &mut derived_rng(seed, 0))
}

pub fn sample_histogram_with(
    distribution: &OutcomeDistribution,
    rate_hz: f64,
    duration_s: f64,
    rng: &mut impl Rng,
) -> Result<OutcomeHistogram> {
    if !(rate_hz >= 0.0 && duration_s >= 0.0 && rate_hz.is_finite() && duration_s.is_finite()) {
        return Err(Error::Domain(format!(
            "rate {rate_hz} Hz and duration {duration_s} s must be finite and non-negative"
        )));
    }
    let mean = rate_hz * duration_s;
    let total = if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::Numeric(e.to_string()))?;
        poisson.sample(rng) as u64
    } else {
        0
    };
    let cumulative: Vec<f64> = distribution
        .probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p.max(0.0);
            Some(*acc)
        })
        .collect();
    let norm = *cumulative.last().unwrap_or(&1.0);
    let mut counts = BTreeMap::new();
    for _ in 0..total {
        let u = rng.random::<f64>() * norm;
        let k = cumulative.partition_point(|c| *c <= u).min(cumulative.len() - 1);
        *counts.entry(k as u64).or_insert(0) += 1;
    }
    OutcomeHistogram::from_counts(
        distribution.register.clone(),
        distribution.setting.clone(),
        counts,
        duration_s,
    )
}

/// Six-fold rate after the OAM converters of `converters` photons.
pub fn detected_rate(rate_hz: f64, noise: &NoiseParams, converters: usize) -> f64 {
    rate_hz * noise.converter_efficiency.powi(converters as i32)
}

/// PBS split and SPP encoding on each listed photon, register in canonical
/// order.
pub fn encode_hyper(ensemble: &Ensemble, photons: &[u8]) -> Result<Ensemble> {
    ensemble.map_states(|s| {
        let mut s = s.clone();
        for &p in photons {
            s = spp_encode(&pbs_split(&s, p)?, p)?;
        }
        s.canonical()
    })
}

/// Bit flips on every qubit, visibility dephasing on path and OAM qubits.
pub fn apply_detection_noise(ensemble: &Ensemble, noise: &NoiseParams) -> Result<Ensemble> {
    let register = ensemble.register().to_vec();
    let of = |dof: Dof| -> Vec<QubitAddress> { register.iter().copied().filter(|a| a.dof == dof).collect() };
    let e = apply_bitflip(ensemble, &register, noise.bitflip_prob)?;
    let e = apply_visibility_dephasing(&e, &of(Dof::Path), noise.spatial_visibility)?;
    apply_visibility_dephasing(&e, &of(Dof::Oam), noise.oam_visibility)
}

/// The 18-qubit hyper-entangled state: noisy six-photon GHZ source with
/// double-pair contamination, hyper-encoding of every photon, then bit-flip
/// and visibility channels. The ideal branch is
/// `(|0⟩^⊗18 − |1⟩^⊗18)/√2` up to a global phase.
pub fn build_hyper_ghz18(noise: &NoiseParams) -> Result<Ensemble> {
    build_experiment(18, noise)
}

/// Sub-experiment with `n_qubits` ∈ {1, 3, 12, 18}: one polarization qubit,
/// one photon in three degrees of freedom, four photons or six photons.
pub fn build_experiment(n_qubits: usize, noise: &NoiseParams) -> Result<Ensemble> {
    noise.validate()?;
    let (photons, hyper) = match n_qubits {
        1 => (1u8, false),
        3 => (1, true),
        12 => (4, true),
        18 => (PHOTONS, true),
        n => {
            return Err(Error::Usage(format!(
                "no sub-experiment with {n} qubits; choose one of {SUPPORTED_QUBIT_COUNTS:?}"
            )))
        }
    };
    let pol = if photons == 1 {
        let s = SparseState::basis(vec![QubitAddress::pol(1)], 0)?
            .apply_unitary(&[QubitAddress::pol(1)], &hwp_matrix(ElementAngle(22.5)))?;
        Ensemble::pure(s)
    } else {
        let (e, _) = ghz_photons(photons, noise)?;
        apply_double_pair_noise(&e, noise.double_pair_fraction)?
    };
    let encoded = if hyper {
        encode_hyper(&pol, &(1..=photons).collect::<Vec<_>>())?
    } else {
        pol
    };
    apply_detection_noise(&encoded, noise)
}

/// Number of OAM converters in the readout of `register`.
pub fn converter_count(register: &[QubitAddress]) -> usize {
    register.iter().filter(|a| a.dof == Dof::Oam).count()
}

type RowKey = (Vec<Dof>, Vec<(bool, u64)>);

const ROW_CACHE_LIMIT: usize = 4096;

/// Kraus rows depend only on a photon's degrees of freedom and bases, not on
/// which photon it is, so they are shared across photons and calls.
fn row_cache() -> &'static Mutex<HashMap<RowKey, Vec<Vec<C64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<RowKey, Vec<Vec<C64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Exact analytic readout of an ensemble under one measurement setting.
struct Readout {
    /// Members in canonical register order with normalized amplitudes.
    members: Vec<(f64, Vec<(u64, C64)>)>,
    photons: Vec<PhotonReadout>,
    /// Canonical position → position in the caller's register.
    order: Vec<usize>,
}

struct PhotonReadout {
    offset: usize,
    width: usize,
    /// Effect operator per local outcome, `d × d` row-major.
    effects: Vec<Vec<C64>>,
    /// `Σ_o (−1)^popcount(o) effects[o]`.
    parity: Vec<C64>,
}

impl PhotonReadout {
    fn dim(&self) -> usize {
        1 << self.width
    }

    fn local(&self, index: u64) -> usize {
        ((index >> self.offset) & ((1 << self.width) - 1)) as usize
    }
}

fn take(branches: [Branch; 2], outcome: bool) -> Option<SparseState> {
    let [b0, b1] = branches;
    if outcome {
        b1.state
    } else {
        b0.state
    }
}

/// `⟨outcome| K |input⟩` for one photon's detection chain, where the local
/// bit order follows `dofs` (a sorted subset of POL, PATH, OAM).
fn chain_amplitude(photon: u8, dofs: &[Dof], bases: &[AnalyzerBasis], input: u64, outcome: u64) -> Result<C64> {
    let register: Vec<QubitAddress> = dofs
        .iter()
        .map(|d| QubitAddress::new(photon, *d))
        .collect::<Result<_>>()?;
    let slot = |dof: Dof| dofs.iter().position(|d| *d == dof);
    let out_bit = |i: usize| (outcome >> i) & 1 == 1;
    let zero = C64::new(0.0, 0.0);

    let mut s = SparseState::basis(register, input)?;
    if let Some(i) = slot(Dof::Path) {
        let Some(next) = take(spatial_analyzer(&s, photon, bases[i])?, out_bit(i)) else {
            return Ok(zero);
        };
        s = next.remove_qubit(QubitAddress::path(photon))?;
    }
    let oam = slot(Dof::Oam);
    if let Some(i) = slot(Dof::Pol) {
        let Some(next) = take(pol_analyzer(&s, photon, bases[i])?, out_bit(i)) else {
            return Ok(zero);
        };
        s = next;
        if oam.is_some() && out_bit(i) {
            // reflected port: rotate back to H before the OAM interferometer
            s = s.apply_unitary(&[QubitAddress::pol(photon)], &hwp_matrix(ElementAngle(45.0)))?;
        }
    } else if oam.is_some() {
        return Err(Error::Contract(format!(
            "OAM readout on photon {photon} needs its polarization qubit"
        )));
    }
    if let Some(i) = oam {
        s = qplate_convert(&oam_cnot_interferometric(&s, photon)?, photon)?;
        let Some(next) = take(pol_analyzer(&s, photon, bases[i])?, out_bit(i)) else {
            return Ok(zero);
        };
        s = next;
    }
    let mut amps = s.amplitudes().values();
    match (amps.next(), amps.next()) {
        (Some(a), None) => Ok(a * s.weight().sqrt()),
        _ => Err(Error::Numeric(format!(
            "detection chain on photon {photon} did not end in a single basis term"
        ))),
    }
}

/// `A → (1 − x)A + x·X A X`, then the same with Z, on local qubit `j`.
fn heisenberg_pauli(e: &mut [C64], dim: usize, j: usize, rates: PauliRates) {
    let m = 1usize << j;
    if rates.x > 0.0 {
        let old = e.to_vec();
        for a in 0..dim {
            for b in 0..dim {
                e[a * dim + b] = old[a * dim + b] * (1.0 - rates.x) + old[(a ^ m) * dim + (b ^ m)] * rates.x;
            }
        }
    }
    if rates.z > 0.0 {
        for a in 0..dim {
            for b in 0..dim {
                if (a ^ b) & m != 0 {
                    e[a * dim + b] *= 1.0 - 2.0 * rates.z;
                }
            }
        }
    }
}

impl Readout {
    fn new(ensemble: &Ensemble, setting: &MeasurementSetting) -> Result<Self> {
        let register = ensemble.register();
        setting.check_covers(register)?;
        let mut canonical = register.to_vec();
        canonical.sort();
        let order: Vec<usize> = canonical
            .iter()
            .map(|a| register.iter().position(|b| b == a).expect("same qubit set"))
            .collect();

        let mut photons = Vec::new();
        let mut start = 0;
        while start < canonical.len() {
            let photon = canonical[start].photon;
            let end = canonical[start..]
                .iter()
                .position(|a| a.photon != photon)
                .map_or(canonical.len(), |k| start + k);
            let qubits = &canonical[start..end];
            if let Some(a) = qubits.iter().find(|a| a.dof == Dof::Arm) {
                return Err(Error::Contract(format!("{a} has no detector")));
            }
            let dofs: Vec<Dof> = qubits.iter().map(|a| a.dof).collect();
            let bases: Vec<AnalyzerBasis> = qubits.iter().map(|a| setting.basis(*a).expect("covered")).collect();
            let width = qubits.len();
            let dim = 1usize << width;
            let key = (
                dofs.clone(),
                bases
                    .iter()
                    .map(|b| match b {
                        AnalyzerBasis::Computational => (false, 0),
                        AnalyzerBasis::Superposition { theta } => (true, theta.to_bits()),
                    })
                    .collect(),
            );
            let cached = row_cache().lock().ok().and_then(|c| c.get(&key).cloned());
            let rows = match cached {
                Some(rows) => rows,
                None => {
                    let rows = (0..dim as u64)
                        .map(|o| {
                            (0..dim as u64)
                                .map(|x| chain_amplitude(photon, &dofs, &bases, x, o))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if let Ok(mut c) = row_cache().lock() {
                        if c.len() >= ROW_CACHE_LIMIT {
                            c.clear();
                        }
                        c.insert(key, rows.clone());
                    }
                    rows
                }
            };
            let mut effects = Vec::with_capacity(dim);
            for row in &rows {
                let mut e = vec![C64::new(0.0, 0.0); dim * dim];
                for x in 0..dim {
                    for y in 0..dim {
                        e[x * dim + y] = row[x].conj() * row[y];
                    }
                }
                for (j, a) in qubits.iter().enumerate() {
                    heisenberg_pauli(&mut e, dim, j, ensemble.channel(*a));
                }
                effects.push(e);
            }
            let mut parity = vec![C64::new(0.0, 0.0); dim * dim];
            for (o, e) in effects.iter().enumerate() {
                let sign = outcome_parity(o as u64) as f64;
                for (p, v) in parity.iter_mut().zip(e) {
                    *p += v * sign;
                }
            }
            photons.push(PhotonReadout {
                offset: start,
                width,
                effects,
                parity,
            });
            start = end;
        }

        let members = ensemble
            .members()
            .iter()
            .map(|m| {
                let s = m.state.permuted(&canonical)?;
                let scale = 1.0 / s.norm_sqr().sqrt();
                let amps = s.amplitudes().iter().map(|(k, a)| (*k, a * scale)).collect();
                Ok((m.weight, amps))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Readout {
            members,
            photons,
            order,
        })
    }

    fn to_canonical(&self, outcome: u64) -> u64 {
        self.order
            .iter()
            .enumerate()
            .map(|(c, &r)| ((outcome >> r) & 1) << c)
            .sum()
    }

    fn canonical_to_register(&self, outcome: u64) -> u64 {
        self.order
            .iter()
            .enumerate()
            .map(|(c, &r)| ((outcome >> c) & 1) << r)
            .sum()
    }

    /// `Σ_m w_m ⟨ψ_m| ⊗_p E_p |ψ_m⟩` with `E_p` chosen by `pick`.
    fn evaluate<'a>(&'a self, pick: impl Fn(&'a PhotonReadout) -> &'a [C64]) -> f64 {
        let mats: Vec<&[C64]> = self.photons.iter().map(&pick).collect();
        let mut total = 0.0;
        for (w, amps) in &self.members {
            let mut acc = C64::new(0.0, 0.0);
            for (x, ax) in amps {
                for (y, ay) in amps {
                    let mut v = ax.conj() * ay;
                    for (p, m) in self.photons.iter().zip(&mats) {
                        v *= m[p.local(*x) * p.dim() + p.local(*y)];
                    }
                    acc += v;
                }
            }
            total += w * acc.re;
        }
        total
    }

    fn probability(&self, outcome: u64) -> f64 {
        let o = self.to_canonical(outcome);
        self.evaluate(|p| &p.effects[p.local(o)]).max(0.0)
    }

    fn parity_expectation(&self) -> f64 {
        self.evaluate(|p| &p.parity)
    }

    /// All `2^N` probabilities, split over the outcomes of the last photon.
    fn dense(&self) -> Vec<f64> {
        let n: usize = self.photons.iter().map(|p| p.width).sum();
        let Some((last, lower)) = self.photons.split_last() else {
            return vec![1.0];
        };
        let low_len = 1usize << (n - last.width);
        let mut probs = vec![0.0; 1 << n];
        probs.par_chunks_mut(low_len).enumerate().for_each(|(o_last, chunk)| {
            let mut cur: Vec<C64> = Vec::with_capacity(low_len);
            let mut next: Vec<C64> = Vec::with_capacity(low_len);
            for (w, amps) in &self.members {
                for (x, ax) in amps {
                    for (y, ay) in amps {
                        let top = last.effects[o_last][last.local(*x) * last.dim() + last.local(*y)];
                        let c = ax.conj() * ay * top * *w;
                        if c.norm_sqr() == 0.0 {
                            continue;
                        }
                        cur.clear();
                        cur.push(c);
                        for p in lower {
                            let (lx, ly, d) = (p.local(*x), p.local(*y), p.dim());
                            next.clear();
                            for e in &p.effects {
                                let f = e[lx * d + ly];
                                next.extend(cur.iter().map(|v| v * f));
                            }
                            std::mem::swap(&mut cur, &mut next);
                        }
                        // digits were appended lowest photon first, so `k`
                        // is already the register index below the last photon
                        for (k, v) in cur.iter().enumerate() {
                            chunk[k] += v.re;
                        }
                    }
                }
            }
        });
        for p in probs.iter_mut() {
            *p = p.max(0.0);
        }
        if self.order.iter().enumerate().all(|(c, r)| c == *r) {
            return probs;
        }
        let mut out = vec![0.0; probs.len()];
        for (k, p) in probs.into_iter().enumerate() {
            out[self.canonical_to_register(k as u64) as usize] = p;
        }
        out
    }
}

pub fn outcome_distribution(ensemble: &Ensemble, setting: &MeasurementSetting) -> Result<OutcomeDistribution> {
    let readout = Readout::new(ensemble, setting)?;
    let probs = readout.dense();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Numeric(format!("outcome probabilities sum to {total}")));
    }
    Ok(OutcomeDistribution {
        register: ensemble.register().to_vec(),
        setting: setting.clone(),
        probs,
    })
}

/// Exact probability of a single outcome (bits in register order).
pub fn outcome_probability(ensemble: &Ensemble, setting: &MeasurementSetting, outcome: u64) -> Result<f64> {
    Ok(Readout::new(ensemble, setting)?.probability(outcome))
}

/// Exact parity expectation `⟨⊗ M⟩` under `setting`.
pub fn exact_expectation(ensemble: &Ensemble, setting: &MeasurementSetting) -> Result<f64> {
    Ok(Readout::new(ensemble, setting)?.parity_expectation())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanMode {
    Exact,
    Sampled { rate_hz: f64, duration_s: f64, seed: u64 },
}

/// Parity fringe with every qubit in the superposition basis at each θ.
pub fn fringe_scan(ensemble: &Ensemble, n_qubits: usize, theta_grid: &[f64], mode: ScanMode) -> Result<FringeSeries> {
    let register = ensemble.register().to_vec();
    if register.len() != n_qubits {
        return Err(Error::RegisterMismatch(format!(
            "fringe scan over {n_qubits} qubits requested on a {}-qubit register",
            register.len()
        )));
    }
    let points = theta_grid
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let setting = MeasurementSetting::superposition(&register, theta)?;
            let (expectation, stderr) = match mode {
                ScanMode::Exact => (exact_expectation(ensemble, &setting)?, 0.0),
                ScanMode::Sampled {
                    rate_hz,
                    duration_s,
                    seed,
                } => {
                    let dist = outcome_distribution(ensemble, &setting)?;
                    let mut rng = derived_rng(seed, k as u64);
                    let hist = sample_histogram_with(&dist, rate_hz, duration_s, &mut rng)?;
                    expectation_from_histogram(&hist)?
                }
            };
            Ok(FringePoint {
                theta,
                expectation,
                stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FringeSeries::new(n_qubits, points)
}
