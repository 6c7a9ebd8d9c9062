use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperghz::cli::{cmd_calibrate, cmd_fringes, cmd_report, cmd_zbasis, CommandOutput, Mode, RunConfig};
use hyperghz::Result;

/// Simulate and analyse the 18-qubit hyper-entangled GHZ experiment.
#[derive(Parser)]
#[command(name = "hyperghz", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for event sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Analytic probabilities, no sampling.
    #[arg(long, global = true, conflicts_with = "sampled")]
    exact: bool,
    /// Poisson-sampled acquisition.
    #[arg(long, global = true)]
    sampled: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parity fringes for N = 1, 3, 12 or 18 qubits.
    Fringes {
        #[arg(long)]
        n: usize,
    },
    /// Computational-basis populations and the 512 × 512 matrix.
    Zbasis,
    /// Population, coherence, fidelity, witness and SNR.
    Report,
    /// Fit the noise parameters to a measured population and coherence.
    Calibrate {
        /// Target population of the two GHZ terms.
        #[arg(long)]
        population: f64,
        /// Target coherence.
        #[arg(long)]
        coherence: f64,
    },
}

fn config(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.exact {
        config.mode = Mode::Exact;
    }
    if common.sampled {
        config.mode = Mode::Sampled;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<CommandOutput> {
    let config = config(&cli.common)?;
    Ok(match cli.command {
        Command::Fringes { n } => cmd_fringes(&config, n)?.output,
        Command::Zbasis => cmd_zbasis(&config)?.1,
        Command::Report => cmd_report(&config)?.1,
        Command::Calibrate { population, coherence } => cmd_calibrate(&config, population, coherence)?.1,
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{}", out.summary);
            for f in out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                hyperghz::Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
