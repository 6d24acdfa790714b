//! Command-line front end for np-core: JSON configs in, CSV out.

pub mod battery;
pub mod commands;
pub mod config;
pub mod oracles;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use np_core::NpError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("self-check failed: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

/// Whether an error stems from the input rather than from the numerics.
pub fn is_config_error(e: &NpError) -> bool {
    matches!(
        e,
        NpError::InvalidParameter(_)
            | NpError::CurvesTooClose { .. }
            | NpError::InclusionNotInterior(_)
            | NpError::PlacementInvalid(_)
            | NpError::OverlappingDisks { .. }
            | NpError::UnsupportedSource(_)
            | NpError::IncompatibleData(_)
            | NpError::TrivialContrast
            | NpError::TooCloseToBoundary { .. }
    )
}

impl From<NpError> for CliError {
    fn from(e: NpError) -> Self {
        if is_config_error(&e) {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "np", version, about = "Neumann-Poincare spectra, transmission solves and validation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Seed for randomized batteries; overrides a "seed" in the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Eigenvalues of the symmetrized K* on one curve.
    Spectrum,
    /// Free-space transmission solves over a list of conductivities.
    SolveFree,
    /// Neumann problem in a disk with one inclusion.
    SolveBvp,
    /// Generalized polarization tensors.
    Gpt,
    /// Small-inclusion expansion errors and fitted orders.
    Asymptotics,
    /// Resolvent-bound sweep over a conductivity grid.
    SweepK,
    /// Two-disk block solves against the bipolar series.
    TwoDisk,
    /// Several inclusions in free space.
    Multibody,
    /// Acceptance battery at reduced sizes.
    Selfcheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::SolveFree => "solve-free",
            Command::SolveBvp => "solve-bvp",
            Command::Gpt => "gpt",
            Command::Asymptotics => "asymptotics",
            Command::SweepK => "sweep-k",
            Command::TwoDisk => "two-disk",
            Command::Multibody => "multibody",
            Command::Selfcheck => "selfcheck",
        }
    }
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("np {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let name = cli.command.name();
    let path = cli.config.as_deref();
    let need = || path.ok_or_else(|| CliError::Config(format!("{name} requires --config PATH")));
    pool.install(|| match cli.command {
        Command::Spectrum => commands::with_config(need()?, name, cli, commands::spectrum),
        Command::SolveFree => commands::with_config(need()?, name, cli, commands::solve_free),
        Command::SolveBvp => commands::with_config(need()?, name, cli, commands::solve_bvp),
        Command::Gpt => commands::with_config(need()?, name, cli, commands::gpt),
        Command::Asymptotics => commands::with_config(need()?, name, cli, commands::asymptotics),
        Command::SweepK => commands::with_config(need()?, name, cli, commands::sweep_k),
        Command::TwoDisk => commands::with_config(need()?, name, cli, commands::two_disk),
        Command::Multibody => commands::with_config(need()?, name, cli, commands::multibody),
        Command::Selfcheck => match path {
            Some(p) => commands::with_config(p, name, cli, commands::selfcheck),
            None => {
                let loaded = config::parse::<config::SelfcheckConfig>("{}", name)?;
                commands::run_loaded(loaded, cli, commands::selfcheck)
            }
        },
    })
}
