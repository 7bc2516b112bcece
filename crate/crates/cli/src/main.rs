//! `opencomp`: runs scenarios from a TOML config and writes a CSV/JSON
//! series plus a JSON report.
//!
//! Exit codes: 0 success, 2 config parse, 3 validation, 4 runtime or a
//! failed self-check.

mod config;
mod failure;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, Kind};
use failure::{runtime_error, stage_of, validation_error};
use output::{write_outputs, Format};

#[derive(Parser)]
#[command(name = "opencomp", version, about = "Elementary-component scenarios for open quantum systems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Format of the series file (the report is always JSON)
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Only print errors
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads for per-mode work (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario kind named in the config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-form evolution of one component
    EvolveComponent {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Decay of one component with a fitted long-time rate
    ComponentDecay {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Spectral evolution of a Gaussian wave-vector spread
    EvolveState {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Closed form against the numerical oracle
    #[command(alias = "oracle-diff")]
    OracleCompare {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Two-sided translation symmetry of the generator
    SymmetryScan {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Clebsch-Gordan table with an orthogonality self-check
    RotationsTable {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Largest angular momentum (integer or half-integer)
        #[arg(long)]
        lmax: Option<f64>,
    },
    /// PDE residual of the closed form under grid refinement
    ResidualCheck {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&Path>, kind: Kind) -> anyhow::Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::minimal(kind.name(), kind)),
    }
}

fn resolve(command: &Command) -> anyhow::Result<(Kind, Config)> {
    let (kind, mut cfg) = match command {
        Command::Run { config } => {
            let cfg = Config::load(config)?;
            let kind = cfg
                .scenario
                .kind
                .ok_or_else(|| validation_error("`run` needs scenario.kind in the config"))?;
            (kind, cfg)
        }
        Command::EvolveComponent { config } => (Kind::EvolveComponent, load(config.as_deref(), Kind::EvolveComponent)?),
        Command::ComponentDecay { config } => (Kind::ComponentDecay, load(config.as_deref(), Kind::ComponentDecay)?),
        Command::EvolveState { config } => (Kind::EvolveState, load(config.as_deref(), Kind::EvolveState)?),
        Command::OracleCompare { config } => (Kind::OracleCompare, load(config.as_deref(), Kind::OracleCompare)?),
        Command::SymmetryScan { config } => (Kind::SymmetryScan, load(config.as_deref(), Kind::SymmetryScan)?),
        Command::ResidualCheck { config } => (Kind::ResidualCheck, load(config.as_deref(), Kind::ResidualCheck)?),
        Command::RotationsTable { config, lmax } => {
            let mut cfg = load(config.as_deref(), Kind::RotationsTable)?;
            if let Some(l) = lmax {
                cfg.rotations.lmax = *l;
            }
            (Kind::RotationsTable, cfg)
        }
    };
    cfg.scenario.kind = Some(kind);
    Ok((kind, cfg))
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(validation_error("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| runtime_error(e.to_string()))?;
    }
    let (kind, cfg) = resolve(&cli.command)?;
    log::info!("running {} ({})", cfg.scenario.name, kind.name());
    let outcome = scenarios::run(kind, &cfg)?;
    let (series, report) = write_outputs(&cli.global.out, &cfg, kind.name(), &outcome, cli.global.format)?;
    if !cli.global.quiet {
        println!("{}: wrote {} and {}", cfg.scenario.name, series.display(), report.display());
    }
    if let Some(reason) = &outcome.gate_failure {
        return Err(runtime_error(format!("self-check failed: {reason}")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(stage_of(&e).exit_code() as u8)
        }
    }
}
