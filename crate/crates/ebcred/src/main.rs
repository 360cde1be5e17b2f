//! Thin batch CLI over [`ebcred::experiments::run`].
//!
//! `ebcred <mode> --config <path> [--seed N] [--reps N] [--out DIR]
//!  [--n LIST] [--truth NAME] [--L FLOAT]`
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical/runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ebcred::error::Error;
use ebcred::experiments::{run, ExperimentSpec, Mode, Overrides};

#[derive(Parser, Debug)]
#[command(name = "ebcred", version, about = "Seeded coverage experiments and diagnostics for empirical Bayes credible sets")]
struct Cli {
    /// coverage | figures | diagnose | prior-check | minimax
    mode: String,
    /// TOML experiment manifest
    #[arg(long)]
    config: PathBuf,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Replication count override
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory override
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated n values override, e.g. 1e4,1e6
    #[arg(long)]
    n: Option<String>,
    /// Truth override: selfsim | bad | bad-zero-first | zero | file:PATH
    #[arg(long)]
    truth: Option<String>,
    /// Radius inflation factor override
    #[arg(long = "L")]
    l: Option<f64>,
}

fn parse_n_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad value in --n list: '{tok}'")))
        })
        .collect()
}

fn try_main(cli: Cli) -> Result<(), Error> {
    let mode: Mode = cli.mode.parse()?;
    let mut spec = ExperimentSpec::from_path(&cli.config).map_err(|e| match e {
        Error::Io { .. } => Error::Config(format!("cannot read config: {e}")),
        other => other,
    })?;
    if spec.mode != mode {
        spec.mode = mode;
        spec.validate()?;
    }
    let n_list = cli.n.as_deref().map(parse_n_list).transpose()?;
    spec.apply_overrides(&Overrides {
        seed: cli.seed,
        reps: cli.reps,
        out: cli.out,
        n_list,
        truth: cli.truth,
        l: cli.l,
    })?;
    let artifacts = run(&spec)?;
    println!("wrote {}", artifacts.summary_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match try_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
