use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quantstab::config::Config;
use quantstab::report::{
    canonical_cases, cmd_bounds, cmd_quantizer, cmd_schedule, cmd_simulate, cmd_verify,
};
use quantstab::Error;

#[derive(Parser)]
#[command(
    name = "quantstab",
    version,
    about = "Data-rate bounds, quantizers and closed-loop checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and batches.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    m_max: Option<usize>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Required gap below 1 for the spectral-radius tests.
    #[arg(long, global = true)]
    margin: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Necessary and sufficient bounds over the sweep.
    Bounds,
    /// Closed-loop run, or a seeded batch when `[sim] runs > 0`.
    Simulate,
    /// Best periodic schedule at each sweep point.
    Schedule,
    /// Oracle and invariant suite.
    Verify,
    /// Boundary export of the configured family.
    Quantizer {
        #[arg(long)]
        levels: usize,
    },
}

enum Failure {
    Verification(String),
    Config(Error),
}

fn load(common: &Common) -> Result<Config, Failure> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path).map_err(Failure::Config)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(m) = common.m_max {
        cfg.schedule.m_max = m;
    }
    if let Some(n) = common.n_max {
        cfg.schedule.n_max = n;
    }
    if let Some(margin) = common.margin {
        cfg.schedule.margin = margin;
    }
    Ok(cfg)
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Config(Error::Io(format!("{}: {e}", path.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let common = &cli.common;
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Config(Error::InvalidArgument(e.to_string())))?;
    }
    let cfg = load(common)?;
    match &cli.command {
        Command::Bounds => emit(common, &cmd_bounds(&cfg).map_err(Failure::Config)?),
        Command::Schedule => emit(common, &cmd_schedule(&cfg).map_err(Failure::Config)?),
        Command::Quantizer { levels } => emit(
            common,
            &cmd_quantizer(&cfg, *levels).map_err(Failure::Config)?,
        ),
        Command::Simulate => {
            let out = cmd_simulate(&cfg).map_err(Failure::Config)?;
            match &out.csv {
                Some(csv) => {
                    emit(common, csv)?;
                    eprint!("{}", out.summary);
                }
                None => emit(common, &out.summary)?,
            }
            if out.passed {
                Ok(())
            } else {
                Err(Failure::Verification(out.summary))
            }
        }
        Command::Verify => {
            let report = cmd_verify(&canonical_cases(cfg.seed)).map_err(Failure::Config)?;
            emit(common, &report.to_csv())?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification(format!(
                    "{} of {} checks failed\n",
                    report.failures(),
                    report.rows.len()
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprint!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
