//! Staged command-line pipeline: allocate, size, hosting, zonal, report.
//!
//! Each stage reads its upstream artifacts from the output directory and
//! writes its own. Everything random is derived from the single study seed.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use feederhc::hosting::{HostingError, Strategy};
use feederhc::zonal::ZonalError;

pub mod artifacts;
pub mod commands;
pub mod config;

pub use config::StudyConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<HostingError> for CliError {
    fn from(e: HostingError) -> Self {
        match e {
            HostingError::Solver { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ZonalError> for CliError {
    fn from(e: ZonalError) -> Self {
        match e {
            ZonalError::Hosting(h) => h.into(),
            ZonalError::Solver { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "feederhc", version, about = "PV hosting capacity studies on radial feeders")]
pub struct Cli {
    /// Study configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Study seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the config, then to the available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory for artifacts; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assign pool houses to every load node.
    Allocate,
    /// Choose the net-benefit-maximizing PV size for every allocated profile.
    Size,
    /// Stochastic hosting-capacity study at the pool resolution.
    Hosting(HostingArgs),
    /// Zone partition, zonal voltage changes and the strategy x resolution table.
    Zonal(ZonalArgs),
    /// Summarize whatever study artifacts exist.
    Report,
}

#[derive(Debug, Args)]
pub struct HostingArgs {
    /// Run one strategy instead of all three.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Uniform size for the fixed strategy, kW.
    #[arg(long)]
    pub fixed_kw: Option<f64>,
    /// Number of scenarios (M).
    #[arg(long)]
    pub scenarios: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ZonalArgs {
    /// Number of zones.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of scenarios (M) for the capacity table.
    #[arg(long)]
    pub scenarios: Option<usize>,
}

/// Resolved settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: StudyConfig,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl Context {
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
        let config = StudyConfig::load(path).map_err(CliError::Input)?;
        let seed = cli
            .seed
            .or(config.seed)
            .ok_or_else(|| CliError::Usage("a seed is required (--seed or \"seed\" in the config)".into()))?;
        let workers = match cli.workers.or(config.workers) {
            Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let out = cli
            .out
            .clone()
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self {
            config,
            seed,
            workers,
            out,
        })
    }
}

/// Parses arguments and runs one command. Help and version output count as success.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string().trim_end().to_string())),
    };
    let ctx = Context::resolve(&cli)?;
    std::fs::create_dir_all(&ctx.out).map_err(|e| CliError::Input(format!("{}: {e}", ctx.out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", ctx.workers)))?;
    pool.install(|| match &cli.command {
        Command::Allocate => commands::allocate(&ctx),
        Command::Size => commands::size(&ctx),
        Command::Hosting(args) => commands::hosting(&ctx, args),
        Command::Zonal(args) => commands::zonal(&ctx, args),
        Command::Report => commands::report(&ctx),
    })
}
