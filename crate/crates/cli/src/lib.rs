//! Command-line harness: configuration, per-figure commands, sweeps, and CSV
//! plus gnuplot output.
//!
//! Exit codes: 0 on success, 2 for configuration or output-location problems,
//! 3 for numerical failures (including a sweep with failed cells).

pub mod commands;
pub mod config;
pub mod plot;
pub mod sweep;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_classical, cmd_echo, cmd_otoc, cmd_spectrum};
pub use config::{OneOrMany, RunConfig, Settings};
pub use sweep::{cmd_sweep, Manifest};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(tiltwell::Error),
    /// Some sweep cells failed; the manifest records which.
    PartialSweep(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) | Failure::PartialSweep(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Failure {
        Failure::Config(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "configuration error: {msg}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::PartialSweep(msg) => write!(f, "sweep incomplete: {msg}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<tiltwell::Error> for Failure {
    fn from(e: tiltwell::Error) -> Self {
        match e {
            tiltwell::Error::InvalidParameter(msg) => Failure::Config(msg),
            other => Failure::Numerical(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tiltwell", version, about = "Spectra, OTOCs and echoes of tilted polynomial wells")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Potential, levels, eigenfunctions, level differences, DOS and state spreads.
    Spectrum,
    /// Microcanonical and thermal OTOCs with growth-window fits.
    Otoc,
    /// Loschmidt echo of the harmonic oscillator against tilted wells.
    Echo,
    /// Fixed points, region grid and phase portraits.
    Classical,
    /// One directory per (model, sigma, beta) and a checksummed manifest.
    Sweep,
}

/// Flags shared by every command. Each replaces the matching config-file value.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with any of the fields below (kebab-case keys).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// model-i, model-ia, model-ii, harmonic or custom; comma-separated for several.
    #[arg(long, global = true, value_delimiter = ',')]
    pub model: Vec<String>,
    /// Dimensionless tilt strength; comma-separated for several.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Number of eigenstates solved for.
    #[arg(long, global = true)]
    pub k_states: Option<usize>,
    /// Basis truncation for matrix elements and OTOCs.
    #[arg(long, global = true)]
    pub k_trunc: Option<usize>,
    /// half (kappa = 1/2) or canonical (kappa = 1).
    #[arg(long, global = true)]
    pub convention: Option<String>,
    /// Inverse temperatures; comma-separated for several.
    #[arg(long, global = true, value_delimiter = ',')]
    pub beta: Vec<f64>,
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Microcanonical states as a half-open range, e.g. 0..40.
    #[arg(long, global = true, value_parser = parse_range)]
    pub states: Option<[usize; 2]>,
    /// Echo evaluation: exact or peres.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Echo perturbation in units of 1/sigma_x of the initial state.
    #[arg(long, global = true)]
    pub strength: Option<f64>,
    /// Sweep worker count.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

fn parse_range(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected FIRST..END, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok([parse(a)?, parse(b)?])
}

impl Flags {
    pub fn to_config(&self) -> RunConfig {
        let list = |v: &Vec<f64>| (!v.is_empty()).then(|| OneOrMany::Many(v.clone()));
        RunConfig {
            model: (!self.model.is_empty()).then(|| OneOrMany::Many(self.model.clone())),
            sigma: list(&self.sigma),
            grid_points: self.grid_points,
            k_states: self.k_states,
            k_trunc: self.k_trunc,
            convention: self.convention.clone(),
            beta: list(&self.beta),
            tmax: self.tmax,
            samples: self.samples,
            states: self.states,
            method: self.method.clone(),
            strength: self.strength,
            out: self.out.clone(),
            jobs: self.jobs,
            ..RunConfig::default()
        }
    }

    /// File values overlaid by flags.
    pub fn settings(&self) -> Result<Settings, Failure> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        base.overlay(self.to_config()).resolve()
    }
}

/// Runs one command and reports what it wrote.
pub fn execute(command: Command, settings: &Settings) -> Result<String, Failure> {
    let files = match command {
        Command::Spectrum => cmd_spectrum(settings)?,
        Command::Otoc => cmd_otoc(settings)?,
        Command::Echo => cmd_echo(settings)?,
        Command::Classical => cmd_classical(settings)?,
        Command::Sweep => {
            let manifest = cmd_sweep(settings)?;
            let failed = manifest.failed();
            if failed > 0 {
                let first = manifest.cells.iter().find_map(|c| c.error.clone()).unwrap_or_default();
                return Err(Failure::PartialSweep(format!(
                    "{failed} of {} cells failed (first: {first}); see {}",
                    manifest.cells.len(),
                    settings.out.join(sweep::MANIFEST).display()
                )));
            }
            return Ok(format!("{} cells, manifest {}", manifest.cells.len(), settings.out.join(sweep::MANIFEST).display()));
        }
    };
    Ok(format!("{} files under {}", files.len(), settings.out.display()))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.flags.settings().and_then(|s| execute(cli.command, &s)) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
