//! `train`, `eval` and manifest reruns.

use std::path::{Path, PathBuf};

use pddm_core::agent::{evaluate_policy, run_experiment_with, ExperimentObserver, IterationStats};
use pddm_core::dynamics::{load_checkpoint_for, save_checkpoint};
use pddm_core::env::{oracle_model, Environment};
use pddm_core::{EpisodeLog, ModelEnsemble, Planner, PolicyEvaluation};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::output::*;

const EPISODE_HEADER: [&str; 7] = ["iteration", "episode", "length", "return", "success", "failed", "env_steps"];
const ITERATION_HEADER: [&str; 7] =
    ["iteration", "dataset_size", "env_steps", "mean_return", "success_rate", "pre_train_mse", "final_train_loss"];
const LOSS_HEADER: [&str; 4] = ["iteration", "member", "epoch", "loss"];
const METRICS_HEADER: [&str; 13] = [
    "env",
    "planner",
    "model",
    "episodes",
    "steps",
    "successes",
    "success_rate",
    "ci95_low",
    "ci95_high",
    "mean_return",
    "std_return",
    "mean_length",
    "seed",
];
const EVAL_EPISODE_HEADER: [&str; 5] = ["episode", "length", "return", "success", "failed"];

/// What a finished training run produced.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub dir: PathBuf,
    pub ensemble: ModelEnsemble,
    pub episodes: Vec<EpisodeLog>,
    pub iterations: Vec<IterationStats<f64>>,
    pub env_steps: usize,
    pub evaluation: Option<PolicyEvaluation>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub dir: PathBuf,
    pub evaluation: PolicyEvaluation,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Streams per-episode and per-iteration rows while the loop runs, so a
/// crashed run still leaves its progress on disk.
struct CsvObserver {
    episodes: CsvSink,
    iterations: CsvSink,
    losses: CsvSink,
    env_steps: usize,
    error: Option<HarnessError>,
}

impl CsvObserver {
    fn record(&mut self, r: Result<()>) {
        if let (Err(e), None) = (r, &self.error) {
            self.error = Some(e);
        }
    }
}

impl ExperimentObserver<f64> for CsvObserver {
    fn on_episode(&mut self, log: &EpisodeLog) {
        self.env_steps += log.len();
        let row = [
            log.iteration.to_string(),
            log.episode.to_string(),
            log.len().to_string(),
            num(log.total_return),
            u8::from(log.success).to_string(),
            u8::from(log.failed).to_string(),
            self.env_steps.to_string(),
        ];
        let r = self.episodes.row(row);
        self.record(r);
    }

    fn on_iteration(&mut self, s: &IterationStats<f64>) {
        let last = s.epoch_losses.last().map(|l| mean(l)).unwrap_or(f64::NAN);
        let row = [
            s.iteration.to_string(),
            s.dataset_size.to_string(),
            s.env_steps.to_string(),
            num(s.mean_return),
            num(s.success_rate),
            num(mean(&s.pre_train_loss)),
            num(last),
        ];
        let mut r = self.iterations.row(row);
        for (m, &pre) in s.pre_train_loss.iter().enumerate() {
            r = r.and_then(|_| self.losses.row([s.iteration.to_string(), m.to_string(), "0".into(), num(pre)]));
        }
        for (e, losses) in s.epoch_losses.iter().enumerate() {
            for (m, &l) in losses.iter().enumerate() {
                r = r.and_then(|_| {
                    self.losses.row([s.iteration.to_string(), m.to_string(), (e + 1).to_string(), num(l)])
                });
            }
        }
        let r = r
            .and_then(|_| self.episodes.flush())
            .and_then(|_| self.iterations.flush())
            .and_then(|_| self.losses.flush());
        self.record(r);
    }
}

fn write_evaluation(
    dir: &RunDir,
    cfg: &RunConfig,
    model: &str,
    steps: usize,
    eval: &PolicyEvaluation,
) -> Result<()> {
    let mut metrics = dir.csv(METRICS_CSV, &METRICS_HEADER)?;
    let successes = eval.episodes.iter().filter(|e| e.success).count();
    metrics.row([
        cfg.env.clone(),
        cfg.planner_kind()?.as_str().to_string(),
        model.to_string(),
        eval.episodes.len().to_string(),
        steps.to_string(),
        successes.to_string(),
        num(eval.success_rate),
        num(eval.success_ci95.0),
        num(eval.success_ci95.1),
        num(eval.mean_return),
        num(eval.std_return),
        num(eval.mean_length),
        cfg.seed.to_string(),
    ])?;
    metrics.flush()?;
    let mut rows = dir.csv(EVAL_EPISODES_CSV, &EVAL_EPISODE_HEADER)?;
    for (i, e) in eval.episodes.iter().enumerate() {
        rows.row([
            i.to_string(),
            e.len().to_string(),
            num(e.total_return),
            u8::from(e.success).to_string(),
            u8::from(e.failed).to_string(),
        ])?;
    }
    rows.flush()
}

/// Runs `body` inside a fresh run directory, maintaining the manifest and the
/// INCOMPLETE marker around it.
fn in_run_dir<T>(
    out: &Path,
    force: bool,
    mut manifest: RunManifest,
    body: impl FnOnce(&RunDir) -> Result<(T, usize)>,
) -> Result<T> {
    let dir = RunDir::create(out, force)?;
    dir.write_manifest(&manifest)?;
    match body(&dir) {
        Ok((value, env_steps)) => {
            let end = unix_now();
            manifest.finished_at_unix = Some(end);
            manifest.wall_clock_seconds = Some(end - manifest.started_at_unix);
            manifest.env_steps = Some(env_steps);
            dir.write_manifest(&manifest)?;
            dir.mark_complete()?;
            Ok(value)
        }
        Err(e) => {
            dir.mark_failed(&e);
            Err(e)
        }
    }
}

fn manifest_for(command: Command, cfg: &RunConfig, out: &Path) -> RunManifest {
    RunManifest {
        command,
        code_version: CODE_VERSION.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        eval_model: None,
        eval_episodes: None,
        output_dir: out.to_path_buf(),
        started_at_unix: unix_now(),
        finished_at_unix: None,
        wall_clock_seconds: None,
        env_steps: None,
    }
}

/// Trains from scratch, writes CSVs, the final checkpoint and, when the
/// config has an `[eval]` section, evaluation metrics.
pub fn train(cfg: &RunConfig, out: &Path, force: bool) -> Result<TrainReport> {
    let cfg = cfg.resolved()?;
    let xcfg = cfg.experiment_config()?;
    let env = cfg.build_env()?;
    xcfg.planner.validate_for(env.dim_a()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let eval_settings = cfg.eval_settings()?;
    let manifest = manifest_for(Command::Train, &cfg, out);
    in_run_dir(out, force, manifest, |dir| {
        let mut obs = CsvObserver {
            episodes: dir.csv(EPISODES_CSV, &EPISODE_HEADER)?,
            iterations: dir.csv(ITERATIONS_CSV, &ITERATION_HEADER)?,
            losses: dir.csv(MODEL_LOSS_CSV, &LOSS_HEADER)?,
            env_steps: 0,
            error: None,
        };
        let outcome = run_experiment_with(env.as_ref(), &xcfg, &mut obs)?;
        if let Some(e) = obs.error.take() {
            return Err(e);
        }
        save_checkpoint(&outcome.ensemble, dir.file(CHECKPOINT))?;
        let mut env_steps = obs.env_steps;
        let evaluation = match eval_settings {
            Some(s) if s.episodes > 0 => {
                let planner = Planner::new(xcfg.planner.clone())?;
                let ev = evaluate_policy(env.as_ref(), &outcome.ensemble, &planner, s.episodes, s.steps, cfg.seed)?;
                write_evaluation(dir, &cfg, "trained", s.steps, &ev)?;
                env_steps += ev.episodes.iter().map(|e| e.len()).sum::<usize>();
                Some(ev)
            }
            _ => None,
        };
        let report = TrainReport {
            dir: dir.path.clone(),
            ensemble: outcome.ensemble,
            episodes: outcome.episodes,
            iterations: outcome.iterations,
            env_steps: obs.env_steps,
            evaluation,
        };
        Ok((report, env_steps))
    })
}

/// Evaluates the configured planner with a trained checkpoint or the
/// environment's own dynamics. `episodes` overrides the config's `[eval]`.
pub fn eval(cfg: &RunConfig, model: &ModelSource, episodes: Option<usize>, out: &Path, force: bool) -> Result<EvalReport> {
    let cfg = cfg.resolved()?;
    let env = cfg.build_env()?;
    let planner_cfg = cfg.planner_config()?;
    planner_cfg.validate_for(env.dim_a()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let settings = cfg.eval_settings()?;
    let episodes = episodes.or(settings.map(|s| s.episodes)).unwrap_or(20);
    if episodes == 0 {
        return Err(HarnessError::Config("evaluation needs at least one episode".into()));
    }
    let steps = match settings {
        Some(s) => s.steps,
        None => cfg.experiment_config()?.steps,
    };
    let ensemble = match model {
        ModelSource::Oracle => None,
        ModelSource::Checkpoint { path } => Some(
            load_checkpoint_for::<f64>(path, env.dim_s(), env.dim_a())
                .map_err(|e| HarnessError::Config(format!("checkpoint {}: {e}", path.display())))?,
        ),
    };
    let planner = Planner::new(planner_cfg)?;
    let mut manifest = manifest_for(Command::Eval, &cfg, out);
    manifest.eval_model = Some(model.clone());
    manifest.eval_episodes = Some(episodes);
    in_run_dir(out, force, manifest, |dir| {
        let env_ref: &dyn Environment<f64> = env.as_ref();
        let ev = match &ensemble {
            Some(ens) => evaluate_policy(env_ref, ens, &planner, episodes, steps, cfg.seed)?,
            None => evaluate_policy(env_ref, &oracle_model(env_ref), &planner, episodes, steps, cfg.seed)?,
        };
        write_evaluation(dir, &cfg, model.label(), steps, &ev)?;
        let used = ev.episodes.iter().map(|e| e.len()).sum();
        Ok((EvalReport { dir: dir.path.clone(), evaluation: ev }, used))
    })
}

/// Repeats the run recorded in `manifest` into `out`.
pub fn rerun(manifest: &Path, out: &Path, force: bool) -> Result<PathBuf> {
    let m = RunManifest::load(manifest)?;
    if m.config.seed != m.seed {
        return Err(HarnessError::Config(format!("{}: seed disagrees with config", manifest.display())));
    }
    match m.command {
        Command::Train => train(&m.config, out, force).map(|r| r.dir),
        Command::Eval => {
            let model = m
                .eval_model
                .ok_or_else(|| HarnessError::Config(format!("{}: eval manifest without a model", manifest.display())))?;
            eval(&m.config, &model, m.eval_episodes, out, force).map(|r| r.dir)
        }
    }
}
