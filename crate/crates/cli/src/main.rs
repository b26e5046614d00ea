//! `annealab`: generate instances, compute ground states, measure profiles,
//! build schedules, run single anneals and benchmark campaigns.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error,
//! 4 missing ground truth.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Global, MissingGroundTruth};
use config::{
    AnnealArgs, CampaignArgs, ConfigError, FileConfig, GenerateArgs, GroundstateArgs, ProfileArgs,
    ScheduleArgs,
};

#[derive(Parser)]
#[command(name = "annealab", version, about = "Classical and simulated quantum annealing of 3D Ising spin glasses")]
struct Cli {
    /// TOML config; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed used when a subcommand has no seed of its own.
    #[arg(long = "master-seed", global = true)]
    master_seed: Option<u64>,
    /// Worker threads; 1 runs sequentially [default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Base directory for outputs [default: .].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Log level: error, warn, info, debug or trace [default: info].
    #[arg(long, global = true)]
    log: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random spin-glass (or ferromagnet) instance files.
    Generate(GenerateArgs),
    /// Compute exact ground-state energies into a registry file.
    Groundstate(GroundstateArgs),
    /// Measure a fluctuation profile over an instance ensemble.
    Profile(ProfileArgs),
    /// Write a linear, exponential, hybrid or adaptive schedule.
    Schedule(ScheduleArgs),
    /// Run one anneal and print a JSON report.
    Anneal(AnnealArgs),
    /// Run a benchmark campaign and write records and tables.
    Campaign(CampaignArgs),
}

enum Category {
    Config,
    Runtime,
    MissingGroundTruth,
}

impl Category {
    fn of(err: &anyhow::Error) -> Self {
        for cause in err.chain() {
            if cause.is::<ConfigError>() {
                return Category::Config;
            }
            if cause.is::<MissingGroundTruth>() {
                return Category::MissingGroundTruth;
            }
            if let Some(e) = cause.downcast_ref::<annealab::Error>() {
                return match e {
                    annealab::Error::NoGroundTruth(_) => Category::MissingGroundTruth,
                    annealab::Error::InvalidParameter(_)
                    | annealab::Error::InvalidSchedule(_)
                    | annealab::Error::InvalidLattice(_)
                    | annealab::Error::TooLarge { .. } => Category::Config,
                    _ => Category::Runtime,
                };
            }
        }
        Category::Runtime
    }

    fn name(&self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Runtime => "runtime",
            Category::MissingGroundTruth => "missing_ground_truth",
        }
    }

    fn code(&self) -> u8 {
        match self {
            Category::Config => 2,
            Category::Runtime => 3,
            Category::MissingGroundTruth => 4,
        }
    }
}

fn init_logging(level: Option<&str>) -> Result<(), ConfigError> {
    let level = match level.unwrap_or("info") {
        l @ ("error" | "warn" | "info" | "debug" | "trace" | "off") => l.parse().expect("known level"),
        other => return Err(ConfigError(vec![format!("`log`: unknown level '{other}'")])),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    init_logging(cli.log.as_deref().or(file.log.as_deref()))?;
    let workers = cli.workers.or(file.workers).unwrap_or(0);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| anyhow::anyhow!("cannot start worker pool: {e}"))?;
    }
    let global = Global {
        seed: cli.master_seed.or(file.seed),
        out_dir: cli.out_dir.or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from(".")),
    };
    match cli.command {
        Command::Generate(mut a) => {
            a.overlay(&file.generate);
            commands::generate(a, &global)
        }
        Command::Groundstate(mut a) => {
            a.overlay(&file.groundstate);
            commands::groundstate(a, &global)
        }
        Command::Profile(mut a) => {
            a.overlay(&file.profile);
            commands::profile(a, &global)
        }
        Command::Schedule(mut a) => {
            a.overlay(&file.schedule);
            commands::schedule(a, &global)
        }
        Command::Anneal(mut a) => {
            a.overlay(&file.anneal);
            commands::anneal(a, &global)
        }
        Command::Campaign(mut a) => {
            a.overlay(&file.campaign);
            commands::campaign(a, &global, workers)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprint!("error[config]: {e}");
            return ExitCode::from(Category::Config.code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let cat = Category::of(&err);
            eprintln!("error[{}]: {err:#}", cat.name());
            ExitCode::from(cat.code())
        }
    }
}
