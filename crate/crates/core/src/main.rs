use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use wavecast::experiment::{export_neighbors, run_experiment, validate, ExperimentConfig, Severity};
use wavecast::similarity::Criterion;

#[derive(Parser)]
#[command(name = "wavecast", version, about = "Next-week case forecasting with related-city features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit, evaluate and write reports for every configured disease.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run a single disease from the config.
        #[arg(long)]
        disease: Option<String>,
        /// Related-city criterion (repeatable); the baseline always runs.
        #[arg(long)]
        criterion: Vec<Criterion>,
        /// Number of related cities; replaces the configured list.
        #[arg(long)]
        neighbors: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Also list the all-cities stratum in plotdata.csv.
        #[arg(long)]
        include_anomalous: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the config and its input files without fitting anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write neighbor rankings for one criterion.
    Neighbors {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        criterion: Criterion,
        /// Neighbors listed per city.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        error!("{e}");
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Run {
            config,
            disease,
            criterion,
            neighbors,
            seed,
            jobs,
            include_anomalous,
            out,
        } => {
            let mut config = load(&config)?;
            if let Some(d) = disease {
                config.select_disease(&d).map_err(|e| {
                    error!("{e}");
                    ExitCode::from(1)
                })?;
            }
            if !criterion.is_empty() {
                config.criteria = criterion;
            }
            if let Some(k) = neighbors {
                config.k_values = vec![k];
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(j) = jobs {
                config.jobs = j;
            }
            if let Some(o) = out {
                config.out = o;
            }
            config.include_anomalous |= include_anomalous;
            let outcome = run_experiment(&config).map_err(|e| {
                error!("{e}");
                ExitCode::from(1)
            })?;
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.failed_fits() > 0 {
                error!("{} fits failed; see warnings above", outcome.failed_fits());
                return Err(ExitCode::from(2));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let config = load(&config)?;
            let diagnostics = validate(&config);
            for d in &diagnostics {
                println!("{d}");
            }
            if diagnostics.iter().any(|d| d.severity == Severity::Error) {
                return Err(ExitCode::from(1));
            }
            println!("ok");
            Ok(())
        }
        Command::Neighbors {
            config,
            criterion,
            depth,
            out,
        } => {
            let mut config = load(&config)?;
            if let Some(o) = out {
                config.out = o;
            }
            let files = export_neighbors(&config, criterion, depth).map_err(|e| {
                error!("{e}");
                ExitCode::from(1)
            })?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
