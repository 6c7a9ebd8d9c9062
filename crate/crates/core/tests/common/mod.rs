//! Independent references for integration tests: a dense density-matrix
//! readout that never touches the photon detection chains.

#![allow(dead_code)]

use hyperghz::ensemble::Ensemble;
use hyperghz::optics::AnalyzerBasis;
use hyperghz::pipeline::MeasurementSetting;
use hyperghz::state::{QubitAddress, SparseState, C64};
use rand::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Rows `⟨0_b|`, `⟨1_b|` of the measurement basis: the computational basis,
/// or `(|0⟩ ± e^{iθ}|1⟩)/√2`.
fn basis_rows(basis: AnalyzerBasis) -> [[C64; 2]; 2] {
    match basis {
        AnalyzerBasis::Computational => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        AnalyzerBasis::Superposition { theta } => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let e = C64::from_polar(h, -theta);
            [[c(h, 0.0), e], [c(h, 0.0), -e]]
        }
    }
}

/// Dense `ρ`, row-major.
pub struct Dense {
    pub n: usize,
    pub rho: Vec<C64>,
}

impl Dense {
    fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn from_ensemble(e: &Ensemble) -> Dense {
        let n = e.register().len();
        let d = 1usize << n;
        let mut rho = vec![c(0.0, 0.0); d * d];
        for m in e.members() {
            let v = m.state.to_dense();
            let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            for i in 0..d {
                for j in 0..d {
                    rho[i * d + j] += v[i] * v[j].conj() * (m.weight / norm);
                }
            }
        }
        let mut dense = Dense { n, rho };
        for (k, addr) in e.register().iter().enumerate() {
            let ch = e.channel(*addr);
            dense.pauli(k, ch.x, ch.z);
        }
        dense
    }

    /// `ρ → (1−x)ρ + x XρX`, then the same with Z, on qubit `k`.
    fn pauli(&mut self, k: usize, x: f64, z: f64) {
        let d = self.dim();
        let m = 1usize << k;
        let old = self.rho.clone();
        for i in 0..d {
            for j in 0..d {
                self.rho[i * d + j] = old[i * d + j] * (1.0 - x) + old[(i ^ m) * d + (j ^ m)] * x;
            }
        }
        for i in 0..d {
            for j in 0..d {
                if (i ^ j) & m != 0 {
                    self.rho[i * d + j] *= 1.0 - 2.0 * z;
                }
            }
        }
    }

    /// Applies the single-qubit operator `g` on qubit `k` from both sides.
    fn conjugate(&mut self, k: usize, g: [[C64; 2]; 2]) {
        let d = self.dim();
        let m = 1usize << k;
        let old = self.rho.clone();
        // left: (Gρ)[i, j]
        let mut left = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            let bi = (i >> k) & 1;
            let i0 = i & !m;
            for j in 0..d {
                left[i * d + j] = g[bi][0] * old[i0 * d + j] + g[bi][1] * old[(i0 | m) * d + j];
            }
        }
        // right: (ρG†)[i, j]
        for i in 0..d {
            for j in 0..d {
                let bj = (j >> k) & 1;
                let j0 = j & !m;
                self.rho[i * d + j] = left[i * d + j0] * g[bj][0].conj() + left[i * d + (j0 | m)] * g[bj][1].conj();
            }
        }
    }

    /// Outcome probabilities with outcome bits in register order.
    pub fn probabilities(mut self, register: &[QubitAddress], setting: &MeasurementSetting) -> Vec<f64> {
        for (k, a) in register.iter().enumerate() {
            self.conjugate(k, basis_rows(setting.basis(*a).expect("setting covers register")));
        }
        let d = self.dim();
        (0..d).map(|i| self.rho[i * d + i].re).collect()
    }
}

pub fn dense_distribution(e: &Ensemble, setting: &MeasurementSetting) -> Vec<f64> {
    Dense::from_ensemble(e).probabilities(e.register(), setting)
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

pub fn random_state(rng: &mut impl Rng, register: Vec<QubitAddress>) -> SparseState {
    let d = 1u64 << register.len();
    let amps: Vec<(u64, C64)> = (0..d)
        .map(|k| (k, c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
        .collect();
    let norm: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    SparseState::from_amplitudes(register, amps.into_iter().map(|(k, a)| (k, a / norm))).unwrap()
}

pub fn random_basis(rng: &mut impl Rng) -> AnalyzerBasis {
    if rng.random::<f64>() < 0.3 {
        AnalyzerBasis::Computational
    } else {
        AnalyzerBasis::Superposition {
            theta: rng.random::<f64>() * std::f64::consts::PI,
        }
    }
}

/// Random mixed ensemble with random Pauli channels on every qubit.
pub fn random_noisy_ensemble(rng: &mut impl Rng, register: &[QubitAddress], members: usize) -> Ensemble {
    let ms = (0..members)
        .map(|_| hyperghz::ensemble::Member {
            weight: rng.random::<f64>() + 0.1,
            state: random_state(rng, register.to_vec()),
        })
        .collect();
    let mut e = Ensemble::from_members(ms).unwrap();
    for a in register {
        e = e.with_bit_flip(*a, rng.random::<f64>() * 0.2).unwrap();
        e = e.with_phase_flip(*a, rng.random::<f64>() * 0.2).unwrap();
    }
    e
}

pub fn random_setting(rng: &mut impl Rng, register: &[QubitAddress]) -> MeasurementSetting {
    MeasurementSetting::new(register.iter().map(|a| (*a, random_basis(rng)))).unwrap()
}

/// Random input with photon 1 in H and its OAM entangled with photon 2's polarization.
pub fn oam_input(rng: &mut impl Rng) -> SparseState {
    let register = vec![QubitAddress::pol(1), QubitAddress::oam(1), QubitAddress::pol(2)];
    let s = random_state(rng, vec![QubitAddress::oam(1), QubitAddress::pol(2)]);
    SparseState::from_amplitudes(register, s.amplitudes().iter().map(|(k, a)| (k << 1, *a))).unwrap()
}
