//! Experiment driver: reads a config, runs one experiment, writes its
//! artifacts. Identical config + seed reproduce the output files byte for
//! byte; see the README section on reproducibility.

mod assemble;
mod commands;
mod config;
mod meta;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::Config;
use meta::Meta;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(warplab::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "{e}"),
        }
    }
}

impl From<warplab::Error> for CliError {
    fn from(e: warplab::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

impl CliError {
    /// 0 success, 2 config, 3 resource cap, 4 non-convergence, 1 the rest.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) => match e {
                warplab::Error::InvalidInput(_) => 2,
                warplab::Error::ResourceLimit { .. } => 3,
                warplab::Error::Discretization(_) | warplab::Error::Convergence(_) => 4,
                warplab::Error::Internal(_) => 1,
            },
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Lib(e) => match e {
                warplab::Error::InvalidInput(_) => "invalid-input",
                warplab::Error::ResourceLimit { .. } => "resource-limit",
                warplab::Error::Discretization(_) => "discretization",
                warplab::Error::Convergence(_) => "non-convergence",
                warplab::Error::Internal(_) => "internal",
            },
            CliError::Io(_) => "io",
            CliError::Json(_) => "serialization",
        }
    }
}

#[derive(Parser)]
#[command(
    name = "warp",
    version,
    about = "Warped-metric experiments over group actions on compact spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file (flat key=value with [sections]).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the [run] seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; beats OUTPUT_DIR and the [run] out key.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap the worker pool.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Also emit gnuplot-ready two-column .dat files.
    #[arg(long, global = true)]
    plot_data: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build one warped level: distance matrix, level graph, spectral gap,
    /// action audit.
    Level,
    /// Trivialization defect over a (t, r) sweep.
    Trivsweep,
    /// Spectral gap of the level graph over a t sweep.
    Expander,
    /// Enumerate one map space and dump its diagnostics.
    Mapspace,
    /// Gromov-Hausdorff Cauchy diagnostic along a map-space tower.
    Ghdiag,
    /// Invariance-defect experiments and measure diagnostics.
    Measures,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Level => "level",
            Command::Trivsweep => "trivsweep",
            Command::Expander => "expander",
            Command::Mapspace => "mapspace",
            Command::Ghdiag => "ghdiag",
            Command::Measures => "measures",
        }
    }
}

pub struct RunContext<'a> {
    pub cfg: &'a Config,
    pub meta: Meta,
    pub out: PathBuf,
    pub seed: u64,
    pub plot_data: bool,
}

impl RunContext<'_> {
    pub fn write(&self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        std::fs::write(&path, content)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        warplab::par::configure_threads(n)?;
    }
    let config_path = cli
        .config
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let cfg = Config::load(&config_path)?;

    let (seed, seed_source) = match cli.seed {
        Some(s) => {
            cfg.opt_u64("run.seed")?; // still a known key when overridden
            (s, "flag")
        }
        None => match cfg.opt_u64("run.seed")? {
            Some(s) => (s, "config"),
            None => (7, "default"),
        },
    };

    let cfg_out = cfg.opt_str("run.out");
    let out = cli
        .out
        .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
        .or_else(|| cfg_out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(cli.command.name()));
    std::fs::create_dir_all(&out)?;

    let meta = Meta::new(cli.command.name(), &cfg, seed, seed_source);
    let mut ctx = RunContext {
        cfg: &cfg,
        meta,
        out,
        seed,
        plot_data: cli.plot_data,
    };
    match cli.command {
        Command::Level => commands::level::run(&mut ctx),
        Command::Trivsweep => commands::trivsweep::run(&mut ctx),
        Command::Expander => commands::expander::run(&mut ctx),
        Command::Mapspace => commands::mapspace::run(&mut ctx),
        Command::Ghdiag => commands::ghdiag::run(&mut ctx),
        Command::Measures => commands::measures::run(&mut ctx),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let record = json!({
            "error": { "kind": e.kind(), "message": e.to_string(), "exit": e.exit_code() }
        });
        eprintln!("{record}");
        std::process::exit(e.exit_code());
    }
}
