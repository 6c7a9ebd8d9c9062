//! Estimators over simulated or sampled data: parity expectations,
//! population, coherence, fidelity, witness significance, signal-to-noise,
//! noise attribution and rate gain.

use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pipeline::{outcome_parity, OutcomeDistribution, OutcomeHistogram};
use crate::source::NoiseParams;
use crate::state::QubitAddress;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Number of outcomes that are neither `0…0` nor `1…1` in the 18-qubit register.
const UNDESIRED_18: f64 = ((1u64 << 18) - 2) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub theta: f64,
    pub expectation: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeSeries {
    n_qubits: usize,
    points: Vec<FringePoint>,
}

impl FringeSeries {
    pub fn new(n_qubits: usize, points: Vec<FringePoint>) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].theta > w[0].theta) {
                return Err(Error::Contract(format!(
                    "fringe angles must be strictly increasing ({} then {})",
                    w[0].theta, w[1].theta
                )));
            }
        }
        for p in &points {
            if !(-1e-12..=PI + 1e-12).contains(&p.theta) {
                return Err(Error::Domain(format!("fringe angle {} outside [0, π]", p.theta)));
            }
            if !(p.expectation.abs() <= 1.0 + 1e-9) {
                return Err(Error::Domain(format!("expectation {} outside [−1, 1]", p.expectation)));
            }
            if !(p.stderr >= 0.0) {
                return Err(Error::Domain(format!("negative standard error {}", p.stderr)));
            }
        }
        Ok(FringeSeries { n_qubits, points })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn points(&self) -> &[FringePoint] {
        &self.points
    }

    /// The points at `θ = kπ/18`, `k = 0..18`, as needed by [`coherence18`].
    pub fn coherence_points(&self) -> Result<Vec<FringePoint>> {
        (0..18)
            .map(|k| {
                let theta = k as f64 * PI / 18.0;
                self.points
                    .iter()
                    .find(|p| (p.theta - theta).abs() < 1e-9)
                    .copied()
                    .ok_or_else(|| Error::Contract(format!("fringe series lacks θ = {k}π/18")))
            })
            .collect()
    }
}

/// `(Σ n_s v_s / N, sqrt((1 − value²)/N))`.
pub fn expectation_from_histogram(histogram: &OutcomeHistogram) -> Result<(f64, f64)> {
    let n = histogram.total_events();
    if n == 0 {
        return Err(Error::InsufficientData("histogram has no events".into()));
    }
    let signed: i64 = histogram
        .counts()
        .iter()
        .map(|(k, c)| outcome_parity(*k) as i64 * *c as i64)
        .sum();
    let value = signed as f64 / n as f64;
    Ok((value, ((1.0 - value * value).max(0.0) / n as f64).sqrt()))
}

/// `(1/18)·Σ_k (−1)^{k+1}·⟨M_{kπ/18}⟩` over `k = 0..18`, errors combined
/// in quadrature.
pub fn coherence18(points: &[FringePoint]) -> Result<(f64, f64)> {
    if points.len() != 18 {
        return Err(Error::Contract(format!(
            "coherence needs 18 settings, got {}",
            points.len()
        )));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for (k, p) in points.iter().enumerate() {
        let theta = k as f64 * PI / 18.0;
        if (p.theta - theta).abs() > 1e-9 {
            return Err(Error::Contract(format!(
                "setting {k} is at θ = {}, expected {theta}",
                p.theta
            )));
        }
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        value += sign * p.expectation;
        var += p.stderr * p.stderr;
    }
    Ok((value / 18.0, var.sqrt() / 18.0))
}

fn all_ones(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn require_computational(setting: &crate::pipeline::MeasurementSetting) -> Result<()> {
    if !setting.is_computational() {
        return Err(Error::Contract(
            "population and SNR need computational-basis data".into(),
        ));
    }
    Ok(())
}

/// `((n_{0…0} + n_{1…1})/N, sqrt(P(1 − P)/N))`.
pub fn population(histogram: &OutcomeHistogram) -> Result<(f64, f64)> {
    require_computational(histogram.setting())?;
    let n = histogram.total_events();
    if n == 0 {
        return Err(Error::InsufficientData("histogram has no events".into()));
    }
    let good = histogram.count(0) + histogram.count(all_ones(histogram.n_qubits()));
    let p = good as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

/// Population of an exact distribution; the error is zero.
pub fn population_exact(distribution: &OutcomeDistribution) -> Result<(f64, f64)> {
    require_computational(distribution.setting())?;
    let ones = all_ones(distribution.n_qubits());
    Ok((distribution.probability(0) + distribution.probability(ones), 0.0))
}

/// `((P + C)/2, sqrt(σ_P² + σ_C²)/2)`.
pub fn ghz_fidelity(population: (f64, f64), coherence: (f64, f64)) -> (f64, f64) {
    (
        (population.0 + coherence.0) / 2.0,
        (population.1 * population.1 + coherence.1 * coherence.1).sqrt() / 2.0,
    )
}

/// `(F − 1/2)/σ`. With `σ = 0` the result is `+∞` above threshold, `−∞`
/// below and `0` exactly at it.
pub fn witness_sigma(fidelity: f64, stderr: f64) -> Result<f64> {
    if !(stderr >= 0.0) {
        return Err(Error::Domain(format!("standard error {stderr} is negative")));
    }
    let excess = fidelity - 0.5;
    if stderr == 0.0 {
        return Ok(if excess > 0.0 {
            f64::INFINITY
        } else if excess < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        });
    }
    Ok(excess / stderr)
}

fn snr_from(desired: f64, total: f64, n_qubits: usize) -> f64 {
    let undesired = total - desired;
    if undesired <= 0.0 {
        return f64::INFINITY;
    }
    let others = if n_qubits == 18 {
        UNDESIRED_18
    } else {
        (all_ones(n_qubits) - 1) as f64
    };
    (desired / 2.0) / (undesired / others)
}

/// Mean desired-component count over mean undesired-component count.
pub fn snr(histogram: &OutcomeHistogram) -> Result<f64> {
    require_computational(histogram.setting())?;
    let n = histogram.total_events();
    if n == 0 {
        return Err(Error::InsufficientData("histogram has no events".into()));
    }
    let desired = histogram.count(0) + histogram.count(all_ones(histogram.n_qubits()));
    Ok(snr_from(desired as f64, n as f64, histogram.n_qubits()))
}

pub fn snr_exact(distribution: &OutcomeDistribution) -> Result<f64> {
    let (p, _) = population_exact(distribution)?;
    Ok(snr_from(p, 1.0, distribution.n_qubits()))
}

/// Undesired-event fractions, split by whether every photon's qubits agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseAttribution {
    pub double_pair: f64,
    pub bitflip: f64,
}

fn photon_masks(register: &[QubitAddress]) -> Vec<u64> {
    let mut masks: std::collections::BTreeMap<u8, u64> = Default::default();
    for (k, a) in register.iter().enumerate() {
        *masks.entry(a.photon).or_default() |= 1 << k;
    }
    masks.into_values().collect()
}

fn photon_consistent(outcome: u64, masks: &[u64]) -> bool {
    masks.iter().all(|m| {
        let bits = outcome & m;
        bits == 0 || bits == *m
    })
}

fn attribute<I: Iterator<Item = (u64, f64)>>(register: &[QubitAddress], entries: I) -> NoiseAttribution {
    let masks = photon_masks(register);
    let ones = all_ones(register.len());
    let (mut total, mut dp, mut bf) = (0.0, 0.0, 0.0);
    for (k, w) in entries {
        total += w;
        if k == 0 || k == ones {
            continue;
        }
        if photon_consistent(k, &masks) {
            dp += w;
        } else {
            bf += w;
        }
    }
    if total == 0.0 {
        return NoiseAttribution {
            double_pair: 0.0,
            bitflip: 0.0,
        };
    }
    NoiseAttribution {
        double_pair: dp / total,
        bitflip: bf / total,
    }
}

/// Classifies undesired computational-basis events: photon-consistent
/// patterns (each photon's qubits agree) count as double-pair emission, the
/// rest as bit flips. Both are fractions of all events.
pub fn attribute_noise(histogram: &OutcomeHistogram) -> Result<NoiseAttribution> {
    require_computational(histogram.setting())?;
    Ok(attribute(
        histogram.register(),
        histogram.counts().iter().map(|(k, c)| (*k, *c as f64)),
    ))
}

pub fn attribute_noise_exact(distribution: &OutcomeDistribution) -> Result<NoiseAttribution> {
    require_computational(distribution.setting())?;
    Ok(attribute(distribution.register(), distribution.nonzero()))
}

/// `log10(rate_hyper / rate_single)`.
pub fn rate_gain(rate_hyper_hz: f64, rate_single_dof_hz: f64) -> Result<f64> {
    if !(rate_hyper_hz > 0.0 && rate_single_dof_hz > 0.0) {
        return Err(Error::Domain(format!(
            "rates must be positive, got {rate_hyper_hz} and {rate_single_dof_hz}"
        )));
    }
    Ok((rate_hyper_hz / rate_single_dof_hz).log10())
}

/// Infinite values are written as the strings `"Infinity"` / `"-Infinity"`.
mod sentinel {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "Infinity" } else { "-Infinity" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "Infinity" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-Infinity" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number, got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhzReport {
    pub population: f64,
    pub population_err: f64,
    pub coherence: f64,
    pub coherence_err: f64,
    pub fidelity: f64,
    pub fidelity_err: f64,
    #[serde(with = "sentinel")]
    pub witness_sigma: f64,
    #[serde(with = "sentinel")]
    pub snr: f64,
    pub noise_params: NoiseParams,
    pub schema_version: u32,
}

impl GhzReport {
    pub fn new(population: (f64, f64), coherence: (f64, f64), snr: f64, noise_params: NoiseParams) -> Result<Self> {
        let (fidelity, fidelity_err) = ghz_fidelity(population, coherence);
        Ok(GhzReport {
            population: population.0,
            population_err: population.1,
            coherence: coherence.0,
            coherence_err: coherence.1,
            fidelity,
            fidelity_err,
            witness_sigma: witness_sigma(fidelity, fidelity_err)?,
            snr,
            noise_params,
            schema_version: REPORT_SCHEMA_VERSION,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: GhzReport = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "report schema version {} is not supported",
                report.schema_version
            )));
        }
        Ok(report)
    }
}
