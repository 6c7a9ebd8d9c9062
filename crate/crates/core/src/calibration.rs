//! Inversion of measured population and coherence into the two free noise
//! parameters, `double_pair_fraction` and `bitflip_prob`.

use std::f64::consts::PI;

use crate::analysis::{coherence18, FringePoint};
use crate::error::{Error, Result};
use crate::pipeline::{build_hyper_ghz18, exact_expectation, outcome_probability, MeasurementSetting};
use crate::source::NoiseParams;

pub const MAX_ITERATIONS: usize = 200;
/// Largest accepted deviation from either target.
pub const TARGET_TOL: f64 = 0.005;

const BITFLIP_MAX: f64 = 0.5;
const STOP_RESIDUAL: f64 = 1e-9;

/// Exact-mode population and coherence of the 18-qubit experiment.
pub fn model_observables(noise: &NoiseParams) -> Result<(f64, f64)> {
    let ensemble = build_hyper_ghz18(noise)?;
    let register = ensemble.register().to_vec();
    let z = MeasurementSetting::computational(&register);
    let ones = (1u64 << register.len()) - 1;
    let population = outcome_probability(&ensemble, &z, 0)? + outcome_probability(&ensemble, &z, ones)?;
    let points = (0..18)
        .map(|k| {
            let theta = k as f64 * PI / 18.0;
            let setting = MeasurementSetting::superposition(&register, theta)?;
            Ok(FringePoint {
                theta,
                expectation: exact_expectation(&ensemble, &setting)?,
                stderr: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((population, coherence18(&points)?.0))
}

fn with_params(base: &NoiseParams, x: [f64; 2]) -> NoiseParams {
    NoiseParams {
        double_pair_fraction: x[0],
        bitflip_prob: x[1],
        ..*base
    }
}

fn clamp(x: [f64; 2]) -> [f64; 2] {
    [x[0].clamp(0.0, 1.0), x[1].clamp(0.0, BITFLIP_MAX)]
}

/// Adjusts `double_pair_fraction` and `bitflip_prob` of `initial` until the
/// exact-mode population and coherence match the targets within
/// [`TARGET_TOL`]. Damped Gauss-Newton steps with a forward-difference
/// Jacobian, at most [`MAX_ITERATIONS`] iterations.
pub fn calibrate_noise(target_population: f64, target_coherence: f64, initial: &NoiseParams) -> Result<NoiseParams> {
    for (name, t) in [("population", target_population), ("coherence", target_coherence)] {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("target {name} {t} outside (0, 1]")));
        }
    }
    initial.validate()?;
    let residual = |x: [f64; 2]| -> Result<[f64; 2]> {
        let (p, c) = model_observables(&with_params(initial, x))?;
        Ok([p - target_population, c - target_coherence])
    };
    let sq = |r: [f64; 2]| r[0] * r[0] + r[1] * r[1];

    let mut x = clamp([initial.double_pair_fraction, initial.bitflip_prob]);
    let mut r = residual(x)?;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && r[0].abs().max(r[1].abs()) > STOP_RESIDUAL {
        iterations += 1;
        let mut jac = [[0.0; 2]; 2];
        for (k, h) in [(0usize, 1e-6), (1, 1e-7)] {
            let upper = if k == 0 { 1.0 } else { BITFLIP_MAX };
            let h = if x[k] + h > upper { -h } else { h };
            let mut xh = x;
            xh[k] += h;
            let rh = residual(xh)?;
            jac[0][k] = (rh[0] - r[0]) / h;
            jac[1][k] = (rh[1] - r[1]) / h;
        }
        // normal equations JᵀJ δ = −Jᵀr
        let jtj = [
            [
                jac[0][0].powi(2) + jac[1][0].powi(2),
                jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1],
            ],
            [
                jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1],
                jac[0][1].powi(2) + jac[1][1].powi(2),
            ],
        ];
        let g = [jac[0][0] * r[0] + jac[1][0] * r[1], jac[0][1] * r[0] + jac[1][1] * r[1]];
        let mut improved = false;
        let mut stalled = false;
        for _ in 0..30 {
            let a = [
                [jtj[0][0] * (1.0 + lambda) + 1e-18, jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda) + 1e-18],
            ];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det.abs() > 0.0 && det.is_finite() {
                let step = [
                    -(a[1][1] * g[0] - a[0][1] * g[1]) / det,
                    -(a[0][0] * g[1] - a[1][0] * g[0]) / det,
                ];
                let trial = clamp([x[0] + step[0], x[1] + step[1]]);
                let rt = residual(trial)?;
                if sq(rt) < sq(r) {
                    stalled =
                        sq(r) - sq(rt) <= 1e-12 * sq(r) || (trial[0] - x[0]).abs().max((trial[1] - x[1]).abs()) < 1e-12;
                    x = trial;
                    r = rt;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved || stalled {
            break;
        }
    }
    if r[0].abs() > TARGET_TOL || r[1].abs() > TARGET_TOL {
        return Err(Error::CalibrationFailure {
            iterations,
            population_residual: r[0],
            coherence_residual: r[1],
            double_pair_fraction: x[0],
            bitflip_prob: x[1],
        });
    }
    Ok(with_params(initial, x))
}
