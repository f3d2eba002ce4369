use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use swarmctl::commands::{DATASET_FILE, EPISODE_FILE, QDYN_FILE};
use swarmctl::{ExperimentConfig, ObserveMode, Overrides, EXIT_INPUT};

const PRECEDENCE: &str = "\
Settings are resolved as: command-line flags > --config file > built-in defaults.
Exit status: 0 success, 2 input or configuration error, 3 stuck, 4 step budget exceeded.";

#[derive(Parser)]
#[command(name = "swarmctl", version, about = "Collect, fit, navigate and replay acoustic swarm experiments", after_help = PRECEDENCE)]
struct Cli {
    /// Cap on worker threads for the parallel stages.
    #[arg(long, env = "SWARMCTL_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Global dynamics matrix [default: <out>/q_global.qdyn].
    #[arg(long)]
    q: Option<PathBuf>,
    /// `circle`, `letters:TEXT` or `polyline:x,y;x,y;...`.
    #[arg(long)]
    path: Option<String>,
    #[arg(long)]
    laps: Option<usize>,
    /// Local learning rate.
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight of the global matrix.
    #[arg(long)]
    beta: Option<f64>,
    /// Goal threshold on squared distance, cells².
    #[arg(long)]
    delta: Option<f64>,
    /// Run on the disturbed plant.
    #[arg(long)]
    disturb: bool,
    #[arg(long, value_enum)]
    observe: Option<ObserveMode>,
    /// Control step budget.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the grid-search sweep and write the dataset CSV.
    #[command(after_help = PRECEDENCE)]
    Collect {
        #[command(flatten)]
        common: Common,
        /// Print the combos without running anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Estimate resonances and fit the global dynamics matrix.
    #[command(after_help = PRECEDENCE)]
    Fit {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV [default: <out>/dataset.csv].
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Navigate a path and write the episode log and trajectory plot.
    #[command(after_help = PRECEDENCE)]
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the vision pipeline on a synthetic frame sequence.
    #[command(after_help = PRECEDENCE)]
    Vision {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Plot an episode log: trajectory and prediction errors.
    #[command(after_help = PRECEDENCE)]
    Replay {
        #[command(flatten)]
        common: Common,
        /// Episode log [default: <out>/episode.csv].
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

fn resolve(common: &Common, mut o: Overrides) -> Result<ExperimentConfig> {
    o.seed = common.seed;
    o.out = common.out.clone();
    ExperimentConfig::resolve(common.config.as_deref(), &o)
}

fn execute(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure the thread pool")?;
    }
    let stdout = &mut std::io::stdout();
    match cli.cmd {
        Cmd::Collect { common, dry_run } => {
            let cfg = resolve(&common, Overrides::default())?;
            swarmctl::cmd_collect(&cfg, dry_run, stdout)?;
            Ok(0)
        }
        Cmd::Fit { common, dataset } => {
            let cfg = resolve(&common, Overrides::default())?;
            let dataset = dataset.unwrap_or_else(|| cfg.out.join(DATASET_FILE));
            swarmctl::cmd_fit(&cfg, &dataset, stdout)?;
            Ok(0)
        }
        Cmd::Run { common, run } => {
            let o = Overrides {
                path: run.path,
                laps: run.laps,
                alpha: run.alpha,
                beta: run.beta,
                delta: run.delta,
                disturb: run.disturb,
                observe: run.observe,
                budget: run.budget,
                ..Default::default()
            };
            let cfg = resolve(&common, o)?;
            let q = run.q.unwrap_or_else(|| cfg.out.join(QDYN_FILE));
            let outcome = swarmctl::cmd_run(&cfg, &q, stdout)?;
            Ok(swarmctl::exit_code(outcome))
        }
        Cmd::Vision { common, frames } => {
            let cfg = resolve(&common, Overrides { frames, ..Default::default() })?;
            swarmctl::cmd_vision(&cfg, stdout)?;
            Ok(0)
        }
        Cmd::Replay { common, log } => {
            let cfg = resolve(&common, Overrides::default())?;
            let log = log.unwrap_or_else(|| cfg.out.join(EPISODE_FILE));
            swarmctl::cmd_replay(&cfg, &log, stdout)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
