mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use run::{Experiment, Failure};

/// Numerical checks for the quasisymmetric weighted-cube metric.
#[derive(Parser, Debug)]
#[command(name = "qsmetric", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn threads() -> Result<Option<usize>, String> {
    match std::env::var("QSMETRIC_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!(
                "QSMETRIC_THREADS must be a positive integer, got `{v}`"
            )),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let usage = |msg: String| {
        eprintln!("qsmetric: {msg}");
        ExitCode::from(2)
    };
    match threads() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                return usage(format!("cannot start {n} workers: {e}"));
            }
        }
        Ok(None) => {}
        Err(msg) => return usage(msg),
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read {}: {e}", cli.config.display())),
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(msg) => return usage(format!("{}: {msg}", cli.config.display())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match run::run(cli.experiment, cfg, &cli.out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "qsmetric: some checks failed; see {}",
                cli.out.join("report.json").display()
            );
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => usage(msg),
        Err(Failure::Io(msg)) => {
            eprintln!("qsmetric: {msg}");
            ExitCode::from(1)
        }
    }
}
