//! `halfline`: run m-function, amplitude and spectral computations from a TOML config.

mod commands;
mod config;
mod output;

use clap::{Parser, ValueEnum};
use config::RunConfig;
use output::Sink;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// m(−κ²) along κ points with the a-priori bounds.
    M,
    /// A(α) by marching plus the pointwise bounds.
    Amplitude,
    /// Residual of the Laplace representation against its tail bound.
    Laplace,
    /// Bump-averaged A from m by contour inversion.
    Invert,
    /// Spectral measure, closed form or finite differences.
    Rho,
    /// A from ρ by Abelian summation, and the smeared identity.
    Bridge,
    /// Scattering data and A from it.
    Scatter,
    /// m_h, B_h and the large-κ coefficients for the boundary parameter h.
    Hbc,
    /// Partial sums of the undamped spectral integral.
    Probe,
    /// All acceptance criteria as a JSON report.
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "halfline", version, about)]
struct Cli {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accuracy target for amplitude marching.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Worker threads; rayon's default when absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(halfline::Error),
    Io(std::io::Error),
}

impl From<halfline::Error> for CliError {
    fn from(e: halfline::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.tolerance {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("--tolerance must be positive, got {t}")));
        }
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Config)?,
        None if matches!(cli.command, Command::Verify) => RunConfig::default(),
        None => return Err(CliError::Config("--config is required for this command".into())),
    };
    let dir = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut sink = Sink::new(&dir)?;
    let tol = cli.tolerance;
    let table = match cli.command {
        Command::M => commands::m(&cfg, &mut sink)?,
        Command::Amplitude => commands::amplitude(&cfg, &mut sink, tol)?,
        Command::Laplace => commands::laplace(&cfg, &mut sink, tol)?,
        Command::Invert => commands::invert(&cfg, &mut sink)?,
        Command::Rho => commands::rho(&cfg, &mut sink)?,
        Command::Bridge => commands::bridge(&cfg, &mut sink, tol)?,
        Command::Scatter => commands::scatter(&cfg, &mut sink)?,
        Command::Hbc => commands::hbc(&cfg, &mut sink)?,
        Command::Probe => commands::probe(&cfg, &mut sink)?,
        Command::Verify => {
            let passed = commands::verify(&cfg, &mut sink)?;
            eprintln!("acceptance: {}", if passed { "all criteria pass" } else { "some criteria fail" });
            None
        }
    };
    if let Some(t) = table {
        print!("{}", t.to_csv());
    }
    for p in &sink.written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(e)) => {
            eprintln!("{}", json!({ "schema": 1, "error": e, "message": e.to_string() }));
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("{}", json!({ "schema": 1, "error": { "kind": "io" }, "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
