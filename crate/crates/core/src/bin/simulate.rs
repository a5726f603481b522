use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rydberg_mimo::expcli::{emit_csv, run, Experiment, SweepConfig};
use rydberg_mimo::Error;

/// Capacity sweeps comparing atomic and classical MIMO receivers.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// TOML sweep config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `experiment` (farfield | nearfield).
    #[arg(long)]
    experiment: Option<Experiment>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `snr_db`.
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    snr_db: Option<f64>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::Unsupported(_) => 2,
        Error::Io { .. } => 1,
        _ => 3,
    }
}

fn execute(args: &Args) -> Result<(), Error> {
    let mut cfg = SweepConfig::from_file(&args.config)?;
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.snr_db {
        cfg.snr_db = s;
    }
    cfg.validate()?;
    let res = run(&cfg)?;
    match &args.out {
        Some(path) => emit_csv(&res, path),
        None => res
            .write_csv(std::io::stdout().lock())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
