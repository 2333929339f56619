//! `slowfast`: experiments on slow-fast systems on the torus.
//!
//! Exit status: 0 success, 2 configuration error, 3 model assumptions
//! fail, 4 cycle detection failed, 1 anything else.

mod commands;
mod config;
mod failure;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, ExperimentConfig};
use failure::{Failure, Kind};
use output::Output;

#[derive(Parser)]
#[command(name = "slowfast", version, about = "Knotted canard cycles of slow-fast systems on the 2-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical curves and the normal hyperbolicity / slow regularity checks
    Validate(CommonArgs),
    /// Limit cycle census for each eps
    Cycles(CommonArgs),
    /// Convergence of cycles to the critical curves along a decreasing eps list
    Sweep(CommonArgs),
    /// Forward and backward limit cycles of a grid of initial points
    Basin(CommonArgs),
    /// Slow divergence integral of every critical curve
    Sdi(CommonArgs),
    /// Torus knot types of a model's curves and of given winding pairs
    Knots(CommonArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &CommonArgs, &'static [f64]) {
        match self {
            Command::Validate(a) => ("validate", a, &[0.05]),
            Command::Cycles(a) => ("cycles", a, &[0.05]),
            Command::Sweep(a) => ("sweep", a, &[0.2, 0.1, 0.05, 0.025]),
            Command::Basin(a) => ("basin", a, &[0.05]),
            Command::Sdi(a) => ("sdi", a, &[0.05]),
            Command::Knots(a) => ("knots", a, &[0.05]),
        }
    }
}

fn run(command: &Command) -> Result<(), Failure> {
    let started = chrono::Utc::now().to_rfc3339();
    let (name, args, default_eps) = command.parts();
    let cfg = ExperimentConfig::resolve(args, default_eps)?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(Kind::Other, e.to_string()))?;
    }
    let model = match (name, &cfg.model) {
        ("knots", None) => None,
        _ => Some(cfg.build_model()?),
    };
    let mut out = Output::create(&cfg.out)?;
    let result = match (command, &model) {
        (Command::Knots(_), m) => commands::knots(m.as_ref(), &cfg, &mut out),
        (_, None) => unreachable!("model resolved above"),
        (Command::Validate(_), Some(m)) => commands::validate(m, &cfg, &mut out),
        (Command::Cycles(_), Some(m)) => commands::cycles(m, &cfg, &mut out),
        (Command::Sweep(_), Some(m)) => commands::sweep(m, &cfg, &mut out),
        (Command::Basin(_), Some(m)) => commands::basin(m, &cfg, &mut out),
        (Command::Sdi(_), Some(m)) => commands::sdi(m, &cfg, &mut out),
    };
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("exit {}: {e}", e.kind.exit_code()),
    };
    out.metadata(name, &cfg, &started, &status)?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
