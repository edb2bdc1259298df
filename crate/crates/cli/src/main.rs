//! `roomgen`: constraint programs in, room layouts, camera paths and QA tasks out.
//!
//! Exit codes: 0 success, 1 ran but missed its target, 2 bad input,
//! 3 I/O failure, 4 door inaccessible, 5 predictions do not match tasks.

mod commands;
mod config;
mod error;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "roomgen", version, about)]
struct Cli {
    /// TOML run configuration. Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize a layout for a constraint program.
    Generate {
        program: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Place parents first, then children, without cluster moves.
        #[arg(long)]
        baseline_hierarchical: bool,
    },
    /// Optimize, diagnose and revise the program until it converges.
    Refine {
        program: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        baseline_hierarchical: bool,
        /// `rule_based` or `external:<endpoint>` (`tcp://host:port` or a command line).
        #[arg(long)]
        refiner: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Plan a camera trajectory over a scene.
    Plan {
        scene: PathBuf,
        /// Camera height in meters (2.5 for bird's-eye, 1.0 for egocentric).
        #[arg(long)]
        height: Option<f64>,
        /// Comma-separated instance ids; all instances when omitted.
        #[arg(long)]
        targets: Option<String>,
    },
    /// Render the top-down label map of a scene.
    Bev {
        scene: PathBuf,
        #[arg(long, default_value_t = roomgen::geometry::grid::DEFAULT_BEV_RESOLUTION)]
        resolution: f64,
    },
    /// Print scene metrics, optionally against a program.
    Metrics {
        scene: PathBuf,
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Generate QA tasks from a scene and its trajectory.
    Taskgen { scene: PathBuf, trajectory: PathBuf },
    /// Score predictions (JSONL of {"id", "answer"}) against tasks.
    Score { tasks: PathBuf, predictions: PathBuf },
    /// Run a complexity sweep described by the config's [sweep] table.
    Sweep {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        baseline_hierarchical: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn merge(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.out.clone_from(&cli.out);
    }
    let mut set_common = |program: &Option<PathBuf>, catalog: &Option<PathBuf>, hier: bool| {
        if program.is_some() {
            cfg.program.clone_from(program);
        }
        if catalog.is_some() {
            cfg.catalog.clone_from(catalog);
        }
        cfg.baseline_hierarchical |= hier;
    };
    match &cli.command {
        Command::Generate { program, catalog, baseline_hierarchical } => set_common(program, catalog, *baseline_hierarchical),
        Command::Refine { program, catalog, baseline_hierarchical, refiner, budget } => {
            set_common(program, catalog, *baseline_hierarchical);
            if refiner.is_some() {
                cfg.refiner.clone_from(refiner);
            }
            if budget.is_some() {
                cfg.budget = *budget;
            }
        }
        Command::Metrics { program, catalog, .. } => set_common(program, catalog, false),
        Command::Sweep { catalog, baseline_hierarchical, workers } => {
            set_common(&None, catalog, *baseline_hierarchical);
            if let Some(w) = workers {
                cfg.sweep.workers = *w;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

fn inputs<'a>(cli: &'a Cli, cfg: &'a RunConfig) -> Vec<&'a Path> {
    let mut v: Vec<&Path> = Vec::new();
    match &cli.command {
        Command::Generate { .. } | Command::Refine { .. } => v.extend(cfg.program.as_deref()),
        Command::Metrics { scene, .. } => {
            v.push(scene);
            v.extend(cfg.program.as_deref());
        }
        Command::Plan { scene, .. } | Command::Bev { scene, .. } => v.push(scene),
        Command::Taskgen { scene, trajectory } => v.extend([scene.as_path(), trajectory.as_path()]),
        Command::Score { tasks, predictions } => v.extend([tasks.as_path(), predictions.as_path()]),
        Command::Sweep { .. } => {}
    }
    v.extend(cfg.catalog.as_deref());
    v
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = merge(cli)?;
    commands::require_files(inputs(cli, &cfg))?;
    match &cli.command {
        Command::Generate { .. } => commands::generate(&cfg),
        Command::Refine { .. } => commands::refine(&cfg),
        Command::Plan { scene, height, targets } => commands::plan(&cfg, scene, *height, targets.as_deref()),
        Command::Bev { scene, resolution } => commands::bev(&cfg, scene, *resolution),
        Command::Metrics { scene, .. } => commands::metrics(&cfg, scene),
        Command::Taskgen { scene, trajectory } => commands::taskgen(&cfg, scene, trajectory),
        Command::Score { tasks, predictions } => commands::score(tasks, predictions),
        Command::Sweep { .. } => {
            let catalog = commands::load_catalog(&cfg)?;
            let out = sweep::sweep(&cfg, &catalog)?;
            eprintln!("{} cell(s) generated", out.regenerated);
            if out.all_ok {
                Ok(out.summary)
            } else {
                print!("{}", out.summary);
                Err(CliError::Unsatisfied("some sweep cells did not finish cleanly".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
