//! Configuration and commands behind the `hyperghz` binary.
//!
//! The configuration file is TOML:
//!
//! ```toml
//! schema_version = 1
//! mode = "exact"          # or "sampled"
//! rate_hz = 0.2
//! duration_s = 7200.0
//! theta_grid = [0.0, 0.5] # optional, radians; default k·π/18, k = 0..=18
//! output_dir = "out"
//! seed = 0
//!
//! [noise]                 # any NoiseParams field; omitted ones keep defaults
//! pair_fidelity = 0.98
//!
//! [calibration]           # optional: fit the noise to these targets first
//! population = 0.814
//! coherence = 0.602
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    attribute_noise, attribute_noise_exact, coherence18, population, population_exact, snr, snr_exact, FringePoint,
    FringeSeries, GhzReport, NoiseAttribution,
};
use crate::calibration::calibrate_noise;
use crate::error::{Error, Result};
use crate::fit::{fringe_fit, FringeFit};
use crate::io::{distribution_matrix, fringes_to_csv, histogram_matrix, histogram_to_csv, matrix_to_csv};
use crate::pipeline::{
    build_experiment, build_hyper_ghz18, converter_count, default_theta_grid, derived_rng, detected_rate, fringe_scan,
    outcome_distribution, sample_histogram_with, MeasurementSetting, ScanMode, SUPPORTED_QUBIT_COUNTS,
};
use crate::source::NoiseParams;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Random stream of the computational-basis acquisition; fringe settings
/// use streams `0..` by grid index.
const ZBASIS_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    pub population: f64,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mode: Mode,
    pub rate_hz: f64,
    pub duration_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub noise: NoiseParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationTargets>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            mode: Mode::Exact,
            rate_hz: 0.2,
            duration_s: 7200.0,
            theta_grid: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            noise: NoiseParams::default(),
            calibration: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.noise.validate()?;
        if self.mode == Mode::Sampled && !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "sampled mode needs rate_hz > 0, got {}",
                self.rate_hz
            )));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration_s must be non-negative, got {}",
                self.duration_s
            )));
        }
        if let Some(grid) = &self.theta_grid {
            FringeSeries::new(
                1,
                grid.iter()
                    .map(|&theta| FringePoint {
                        theta,
                        expectation: 0.0,
                        stderr: 0.0,
                    })
                    .collect(),
            )
            .map_err(|e| Error::Config(format!("theta_grid: {e}")))?;
        }
        if let Some(t) = self.calibration {
            for v in [t.population, t.coherence] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::Config(format!("calibration target {v} outside (0, 1]")));
                }
            }
        }
        Ok(())
    }

    pub fn theta_grid(&self) -> Vec<f64> {
        self.theta_grid.clone().unwrap_or_else(default_theta_grid)
    }

    /// Noise parameters after applying the optional calibration targets.
    pub fn resolved_noise(&self) -> Result<NoiseParams> {
        match self.calibration {
            Some(t) => calibrate_noise(t.population, t.coherence, &self.noise),
            None => Ok(self.noise),
        }
    }
}

/// Rounds to six significant digits for console output.
pub fn sig6(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "Infinity".into() } else { "-Infinity".into() };
    }
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    if rounded.abs() < 1e-4 || rounded.abs() >= 1e15 {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Files written and a console summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringesResult {
    pub series: FringeSeries,
    pub fit: Option<FringeFit>,
    pub output: CommandOutput,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    n_qubits: usize,
    mode: Mode,
    fit: Option<&'a FringeFit>,
    fit_error: Option<String>,
    noise_params: NoiseParams,
}

pub fn cmd_fringes(config: &RunConfig, n_qubits: usize) -> Result<FringesResult> {
    config.validate()?;
    if !SUPPORTED_QUBIT_COUNTS.contains(&n_qubits) {
        return Err(Error::Usage(format!(
            "--n must be one of {SUPPORTED_QUBIT_COUNTS:?}, got {n_qubits}"
        )));
    }
    let noise = config.resolved_noise()?;
    let ensemble = build_experiment(n_qubits, &noise)?;
    let mode = match config.mode {
        Mode::Exact => ScanMode::Exact,
        Mode::Sampled => ScanMode::Sampled {
            rate_hz: detected_rate(config.rate_hz, &noise, converter_count(ensemble.register())),
            duration_s: config.duration_s,
            seed: config.seed,
        },
    };
    let series = fringe_scan(&ensemble, n_qubits, &config.theta_grid(), mode)?;
    let (fit, fit_error) = match fringe_fit(&series) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let dir = &config.output_dir;
    let files = vec![
        write_file(dir, &format!("fringes_N{n_qubits}.csv"), &fringes_to_csv(&series)?)?,
        write_file(
            dir,
            &format!("fit_N{n_qubits}.json"),
            &to_json(&FitSummary {
                n_qubits,
                mode: config.mode,
                fit: fit.as_ref(),
                fit_error: fit_error.clone(),
                noise_params: noise,
            })?,
        )?,
    ];
    let mut summary = format!("N = {n_qubits}, {} settings\n", series.points().len());
    match &fit {
        Some(f) => {
            let _ = writeln!(
                summary,
                "fit: amplitude {} frequency {} phase {} offset {} rms {}{}",
                sig6(f.amplitude),
                sig6(f.frequency),
                sig6(f.phase),
                sig6(f.offset),
                sig6(f.rms_residual),
                if f.frequency_ok {
                    ""
                } else {
                    " (frequency off by more than 2%)"
                }
            );
        }
        None => {
            let _ = writeln!(summary, "fit: {}", fit_error.unwrap_or_default());
        }
    }
    Ok(FringesResult {
        series,
        fit,
        output: CommandOutput { files, summary },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZBasisSummary {
    pub mode: Mode,
    pub total_events: Option<u64>,
    pub population: Option<f64>,
    pub population_err: Option<f64>,
    #[serde(serialize_with = "opt_sentinel")]
    pub snr: Option<f64>,
    pub attribution: Option<NoiseAttribution>,
    pub noise_params: NoiseParams,
}

fn opt_sentinel<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_infinite() => s.serialize_str(if *x > 0.0 { "Infinity" } else { "-Infinity" }),
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_none(),
    }
}

pub fn cmd_zbasis(config: &RunConfig) -> Result<(ZBasisSummary, CommandOutput)> {
    config.validate()?;
    let noise = config.resolved_noise()?;
    let ensemble = build_hyper_ghz18(&noise)?;
    let setting = MeasurementSetting::computational(ensemble.register());
    let distribution = outcome_distribution(&ensemble, &setting)?;
    let dir = &config.output_dir;
    let mut files = Vec::new();
    let summary = match config.mode {
        Mode::Exact => {
            files.push(write_file(
                dir,
                "zbasis_matrix.csv",
                &matrix_to_csv(&distribution_matrix(&distribution)?)?,
            )?);
            let (p, e) = population_exact(&distribution)?;
            ZBasisSummary {
                mode: Mode::Exact,
                total_events: None,
                population: Some(p),
                population_err: Some(e),
                snr: Some(snr_exact(&distribution)?),
                attribution: Some(attribute_noise_exact(&distribution)?),
                noise_params: noise,
            }
        }
        Mode::Sampled => {
            let rate = detected_rate(config.rate_hz, &noise, converter_count(ensemble.register()));
            let mut rng = derived_rng(config.seed, ZBASIS_STREAM);
            let histogram = sample_histogram_with(&distribution, rate, config.duration_s, &mut rng)?;
            files.push(write_file(dir, "zbasis_histogram.csv", &histogram_to_csv(&histogram)?)?);
            files.push(write_file(
                dir,
                "zbasis_matrix.csv",
                &matrix_to_csv(&histogram_matrix(&histogram)?)?,
            )?);
            let n = histogram.total_events();
            let pop = if n > 0 { Some(population(&histogram)?) } else { None };
            ZBasisSummary {
                mode: Mode::Sampled,
                total_events: Some(n),
                population: pop.map(|p| p.0),
                population_err: pop.map(|p| p.1),
                snr: if n > 0 { Some(snr(&histogram)?) } else { None },
                attribution: if n > 0 {
                    Some(attribute_noise(&histogram)?)
                } else {
                    None
                },
                noise_params: noise,
            }
        }
    };
    files.push(write_file(dir, "zbasis_summary.json", &to_json(&summary)?)?);
    let text = match (summary.population, summary.total_events) {
        (Some(p), events) => format!(
            "population {} ± {}, SNR {}{}\n",
            sig6(p),
            sig6(summary.population_err.unwrap_or(0.0)),
            sig6(summary.snr.unwrap_or(f64::NAN)),
            events.map(|n| format!(", {n} events")).unwrap_or_default()
        ),
        (None, _) => "no events recorded; population and SNR are undefined\n".to_string(),
    };
    Ok((summary, CommandOutput { files, summary: text }))
}

/// Population, coherence and fidelity of the 18-qubit state in both bases.
pub fn run_report(config: &RunConfig) -> Result<GhzReport> {
    config.validate()?;
    let noise = config.resolved_noise()?;
    let ensemble = build_hyper_ghz18(&noise)?;
    let register = ensemble.register().to_vec();
    let z = outcome_distribution(&ensemble, &MeasurementSetting::computational(&register))?;
    let coherence_grid: Vec<f64> = default_theta_grid()[..18].to_vec();
    match config.mode {
        Mode::Exact => {
            let series = fringe_scan(&ensemble, 18, &coherence_grid, ScanMode::Exact)?;
            let coherence = coherence18(series.points())?;
            GhzReport::new(population_exact(&z)?, coherence, snr_exact(&z)?, noise)
        }
        Mode::Sampled => {
            let rate = detected_rate(config.rate_hz, &noise, converter_count(&register));
            let mut rng = derived_rng(config.seed, ZBASIS_STREAM);
            let histogram = sample_histogram_with(&z, rate, config.duration_s, &mut rng)?;
            let series = fringe_scan(
                &ensemble,
                18,
                &coherence_grid,
                ScanMode::Sampled {
                    rate_hz: rate,
                    duration_s: config.duration_s,
                    seed: config.seed,
                },
            )?;
            let coherence = coherence18(series.points())?;
            GhzReport::new(population(&histogram)?, coherence, snr(&histogram)?, noise)
        }
    }
}

pub fn cmd_report(config: &RunConfig) -> Result<(GhzReport, CommandOutput)> {
    let report = run_report(config)?;
    let path = write_file(&config.output_dir, "report.json", &(report.to_json()? + "\n"))?;
    let summary = format!(
        "population {} ± {}\ncoherence {} ± {}\nfidelity {} ± {}\nwitness {} σ, SNR {}\n",
        sig6(report.population),
        sig6(report.population_err),
        sig6(report.coherence),
        sig6(report.coherence_err),
        sig6(report.fidelity),
        sig6(report.fidelity_err),
        sig6(report.witness_sigma),
        sig6(report.snr)
    );
    Ok((
        report,
        CommandOutput {
            files: vec![path],
            summary,
        },
    ))
}

/// Calibrates against the given targets and writes the resulting
/// configuration, ready to be passed back with `--config`.
pub fn cmd_calibrate(config: &RunConfig, population: f64, coherence: f64) -> Result<(NoiseParams, CommandOutput)> {
    config.validate()?;
    let noise = calibrate_noise(population, coherence, &config.noise)?;
    let calibrated = RunConfig {
        noise,
        calibration: None,
        ..config.clone()
    };
    let path = write_file(&config.output_dir, "calibrated.toml", &calibrated.to_toml()?)?;
    let summary = format!(
        "double_pair_fraction {}, bitflip_prob {}\n",
        sig6(noise.double_pair_fraction),
        sig6(noise.bitflip_prob)
    );
    Ok((
        noise,
        CommandOutput {
            files: vec![path],
            summary,
        },
    ))
}
