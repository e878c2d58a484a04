use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pddm_harness::ablate::{load_grid, run_grid};
use pddm_harness::output::{ModelSource, RunManifest, CHECKPOINT, MANIFEST};
use pddm_harness::plot::export_plot_data;
use pddm_harness::run::{eval, rerun, train};
use pddm_harness::{load_config, HarnessError, Result, RunConfig};

#[derive(Parser)]
#[command(name = "pddm", version, about = "Model-based RL with ensemble dynamics models and sampling MPC")]
struct Cli {
    /// Where run directories go when --out is not given.
    #[arg(long, global = true, env = "PDDM_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a dynamics ensemble from scratch with MPC data collection.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a planner with a trained checkpoint or the true dynamics.
    Eval {
        /// Run config; defaults to the config of --run.
        #[arg(long, required_unless_present = "run")]
        config: Option<PathBuf>,
        /// A finished training run: supplies config and checkpoint.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, conflicts_with = "oracle")]
        checkpoint: Option<PathBuf>,
        /// Plan with the environment's own dynamics instead of a model.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        episodes: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every (value, seed) cell of a one-axis ablation grid.
    Ablate {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cells run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        force: bool,
    },
    /// Aggregate a run into a learning curve, or an ablation into per-value rows.
    ExportPlotData {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing run directory.
    #[arg(long)]
    force: bool,
}

fn with_seed(mut cfg: RunConfig, seed: Option<u64>) -> RunConfig {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg
}

fn planner_name(cfg: &RunConfig) -> String {
    cfg.planner.kind.clone().unwrap_or_else(|| "pddm".into())
}

fn execute(cli: Cli) -> Result<()> {
    let root = &cli.output_root;
    match cli.command {
        Cmd::Train { config, common } => {
            let cfg = with_seed(load_config(&config)?, common.seed);
            let out = common
                .out
                .unwrap_or_else(|| root.join(format!("train-{}-{}-seed{}", cfg.env, planner_name(&cfg), cfg.seed)));
            let report = train(&cfg, &out, common.force)?;
            let last = report.iterations.last().expect("at least one iteration");
            println!(
                "trained {} iterations, {} env steps, last mean return {:.4}, success {:.2}",
                report.iterations.len(),
                report.env_steps,
                last.mean_return,
                last.success_rate
            );
            if let Some(ev) = &report.evaluation {
                println!("eval success {:.3} mean return {:.4}", ev.success_rate, ev.mean_return);
            }
            println!("{}", report.dir.display());
        }
        Cmd::Eval { config, run, checkpoint, oracle, episodes, common } => {
            let cfg = match (&config, &run) {
                (Some(c), _) => load_config(c)?,
                (None, Some(r)) => RunManifest::load(&r.join(MANIFEST))?.config,
                (None, None) => unreachable!("clap requires --config or --run"),
            };
            let cfg = with_seed(cfg, common.seed);
            let model = match (oracle, checkpoint, &run) {
                (true, _, _) => ModelSource::Oracle,
                (false, Some(p), _) => ModelSource::Checkpoint { path: p },
                (false, None, Some(r)) => ModelSource::Checkpoint { path: r.join(CHECKPOINT) },
                (false, None, None) => {
                    return Err(HarnessError::Config("eval needs --checkpoint, --run or --oracle".into()))
                }
            };
            let out = common
                .out
                .unwrap_or_else(|| root.join(format!("eval-{}-{}-seed{}", cfg.env, model.label(), cfg.seed)));
            let report = eval(&cfg, &model, episodes, &out, common.force)?;
            let ev = &report.evaluation;
            println!(
                "{} episodes: success {:.3} (95% CI {:.3}-{:.3}), mean return {:.4} ± {:.4}",
                ev.episodes.len(),
                ev.success_rate,
                ev.success_ci95.0,
                ev.success_ci95.1,
                ev.mean_return,
                ev.std_return
            );
            println!("{}", report.dir.display());
        }
        Cmd::Ablate { grid, out, jobs, force } => {
            let g = load_grid(&grid)?;
            let out = out.unwrap_or_else(|| root.join(format!("ablate-{}", g.axis.as_str())));
            let results = run_grid(&g, &out, jobs, force)?;
            let failed: Vec<_> = results.iter().filter(|r| r.outcome.is_err()).collect();
            println!("{} cells, {} failed; summary in {}", results.len(), failed.len(), out.display());
            if !failed.is_empty() {
                for r in &failed {
                    eprintln!("cell {} seed {}: {}", r.value, r.seed, r.outcome.as_ref().unwrap_err());
                }
                return Err(HarnessError::Runtime(format!("{} of {} ablation cells failed", failed.len(), results.len())));
            }
        }
        Cmd::ExportPlotData { run, out } => {
            let path = export_plot_data(&run, out.as_deref())?;
            println!("{}", path.display());
        }
        Cmd::Rerun { manifest, out, force } => {
            let name = manifest
                .parent()
                .and_then(Path::file_name)
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            let out = out.unwrap_or_else(|| root.join(format!("rerun-{name}")));
            let dir = rerun(&manifest, &out, force)?;
            println!("{}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
