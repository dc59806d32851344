//! `freejacobi`: command-line front end for the free Jacobi toolkit.

mod commands;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use thiserror::Error;

use output::{Format, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Usage(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "freejacobi", version, about = "Spectral dynamics of the free Jacobi process")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Moment trajectory from the hierarchy (beta = alpha or beta = 1/2).
    Moments,
    /// Both closed forms of the moment generating function on a circle.
    Flow,
    /// Phase report of the deformed map and samples of it.
    Vmap,
    /// Critical points and the saddle-point comparison of the inverse coefficients.
    Saddle,
    /// Inverse coefficients by Lagrange inversion and by contour integration.
    Coeffs,
    /// The two Wachter-type measures and their moments.
    Wachter,
    /// Pushforward moments against the stationary moments.
    Kunisky,
    /// Residuals of the common transport equation along a trajectory.
    Dynamic,
    /// Both sides of the initial-data identity on random projections.
    Equa3,
    /// Matrix Monte Carlo: unitary Brownian motion and corner Jacobi moments.
    Mc,
    /// Runs the acceptance suite.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Flow => "flow",
            Command::Vmap => "vmap",
            Command::Saddle => "saddle",
            Command::Coeffs => "coeffs",
            Command::Wachter => "wachter",
            Command::Kunisky => "kunisky",
            Command::Dynamic => "dynamic",
            Command::Equa3 => "equa3",
            Command::Mc => "mc",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Params {
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Coefficient index.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Matrix dimension.
    #[arg(long = "N", global = true)]
    pub big_n: Option<usize>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (also FREEJACOBI_THREADS).
    #[arg(long, global = true, env = "FREEJACOBI_THREADS")]
    pub threads: Option<usize>,
}

/// Parameter access that records every resolved value for the manifest.
pub struct Ctx<'a> {
    pub p: &'a Params,
    pub used: BTreeMap<&'static str, Value>,
    pub seed: Option<u64>,
}

impl Ctx<'_> {
    pub fn f(&mut self, name: &'static str, value: Option<f64>, default: f64) -> Result<f64, CliError> {
        let v = value.unwrap_or(default);
        if !v.is_finite() {
            return Err(CliError::Usage(format!("--{name} must be finite, got {v}")));
        }
        self.used.insert(name, Value::from(v));
        Ok(v)
    }

    pub fn u(&mut self, name: &'static str, value: Option<usize>, default: usize) -> usize {
        let v = value.unwrap_or(default);
        self.used.insert(name, Value::from(v));
        v
    }

    pub fn optional_f(&mut self, name: &'static str, value: Option<f64>) -> Option<f64> {
        self.used.insert(name, value.map_or(Value::Null, Value::from));
        value
    }

    pub fn optional_u(&mut self, name: &'static str, value: Option<usize>) -> Option<usize> {
        self.used.insert(name, value.map_or(Value::Null, Value::from));
        value
    }

    pub fn seed(&mut self, default: u64) -> u64 {
        let s = self.p.seed.unwrap_or(default);
        self.used.insert("seed", Value::from(s));
        self.seed = Some(s);
        s
    }
}

pub fn open_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), CliError> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must lie in ({lo}, {hi}), got {v}")))
    }
}

pub fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

pub fn at_least(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be at least {min}, got {v}")))
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.params.threads)?;
    let start = Instant::now();
    let mut ctx = Ctx { p: &cli.params, used: BTreeMap::new(), seed: None };
    let run = commands::dispatch(cli.command, &mut ctx)?;
    let out = cli.params.out.as_deref();
    let outputs = output::emit(&run.artifacts, cli.params.format, out)?;
    let manifest = RunManifest {
        subcommand: cli.command.name().into(),
        params: serde_json::to_value(&ctx.used).expect("parameters serialize"),
        seed: ctx.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        outputs,
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    output::write_manifest(&manifest, out)?;
    if run.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(run.failures.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("freejacobi: {e}");
            ExitCode::from(e.code())
        }
    }
}
