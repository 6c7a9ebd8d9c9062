//! Least-squares fit of `A·cos(fθ + φ) + c` to a fringe series.
//!
//! For fixed `f` the model is linear in `(A cos φ, −A sin φ, c)`, so the
//! residual is minimized in closed form and only `f` is searched: a grid
//! over `[0.75 N, 1.25 N]` followed by golden-section refinement.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::FringeSeries;
use crate::error::{Error, Result};

const GRID_STEPS: usize = 400;
const MAX_REFINE_ITERATIONS: usize = 200;
const FREQUENCY_TOL: f64 = 1e-10;
const DEGENERATE_AMPLITUDE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// `|A|`, reported as the fringe visibility.
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub offset: f64,
    pub rms_residual: f64,
    /// The series carries no measurable oscillation.
    pub degenerate: bool,
    /// `frequency` lies within 2% of the qubit count.
    pub frequency_ok: bool,
    pub iterations: usize,
}

struct Linear {
    a: f64,
    b: f64,
    c: f64,
    sse: f64,
}

fn solve_linear(thetas: &[f64], ys: &[f64], f: f64) -> Option<Linear> {
    let n = thetas.len();
    let design = DMatrix::from_fn(n, 3, |r, k| match k {
        0 => (f * thetas[r]).cos(),
        1 => (f * thetas[r]).sin(),
        _ => 1.0,
    });
    let y = DVector::from_column_slice(ys);
    let coef = design.clone().svd(true, true).solve(&y, 1e-12).ok()?;
    let resid = &design * &coef - &y;
    let sse = resid.norm_squared();
    sse.is_finite().then(|| Linear {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        sse,
    })
}

pub fn fringe_fit(series: &FringeSeries) -> Result<FringeFit> {
    let points = series.points();
    if points.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "a fringe fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    let n = series.n_qubits() as f64;
    if n <= 0.0 {
        return Err(Error::Domain("fringe series has no qubits".into()));
    }
    let thetas: Vec<f64> = points.iter().map(|p| p.theta).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.expectation).collect();
    let sse = |f: f64| solve_linear(&thetas, &ys, f).map(|l| l.sse);
    let failure = |iterations, reason: &str| Error::FitFailure {
        iterations,
        reason: reason.to_string(),
    };

    let (lo, hi) = (0.75 * n, 1.25 * n);
    let step = (hi - lo) / GRID_STEPS as f64;
    let mut best = (f64::INFINITY, n);
    for k in 0..=GRID_STEPS {
        let f = lo + step * k as f64;
        let s = sse(f).ok_or_else(|| failure(0, "linear solve failed on the frequency grid"))?;
        // prefer the grid point nearest N on ties
        if s < best.0 - 1e-15 || ((s - best.0).abs() <= 1e-15 && (f - n).abs() < (best.1 - n).abs()) {
            best = (s, f);
        }
    }

    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let mut iterations = 0;
    let mut x1 = b - golden * (b - a);
    let mut x2 = a + golden * (b - a);
    let mut f1 = sse(x1).ok_or_else(|| failure(0, "linear solve failed"))?;
    let mut f2 = sse(x2).ok_or_else(|| failure(0, "linear solve failed"))?;
    while b - a > FREQUENCY_TOL {
        if iterations == MAX_REFINE_ITERATIONS {
            return Err(failure(iterations, "frequency refinement did not converge"));
        }
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - golden * (b - a);
            f1 = sse(x1).ok_or_else(|| failure(iterations, "linear solve failed"))?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (b - a);
            f2 = sse(x2).ok_or_else(|| failure(iterations, "linear solve failed"))?;
        }
    }
    let mut frequency = (a + b) / 2.0;
    let mut fit = solve_linear(&thetas, &ys, frequency).ok_or_else(|| failure(iterations, "linear solve failed"))?;
    if best.0 < fit.sse {
        frequency = best.1;
        fit = solve_linear(&thetas, &ys, frequency).ok_or_else(|| failure(iterations, "linear solve failed"))?;
    }

    let amplitude = fit.a.hypot(fit.b);
    Ok(FringeFit {
        amplitude,
        frequency,
        phase: (-fit.b).atan2(fit.a),
        offset: fit.c,
        rms_residual: (fit.sse / points.len() as f64).sqrt(),
        degenerate: amplitude < DEGENERATE_AMPLITUDE,
        frequency_ok: (frequency - n).abs() <= 0.02 * n,
        iterations,
    })
}
