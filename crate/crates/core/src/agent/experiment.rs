use rand::RngCore;

use super::episode::{run_episode, EpisodeLog};
use super::{stream_rng, Stream};
use crate::dynamics::{
    init_ensemble, refit_normalization, ModelEnsemble, TransitionDataset, TransitionSource,
};
use crate::env::Environment;
use crate::error::{PddmError, Result};
use crate::planners::{Planner, PlannerConfig};
use crate::scalar::Real;

/// Outer-loop parameters. Defaults follow the valve-turning row
/// (`R = 20, T = 200, E = 40, M = 3`) with the 2 x 500 network.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Outer iterations `I`.
    pub iterations: usize,
    /// Rollouts per iteration `R`.
    pub rollouts: usize,
    /// Max steps per rollout `T`.
    pub steps: usize,
    /// Training epochs per iteration `E`.
    pub epochs: usize,
    pub planner: PlannerConfig,
    pub hidden: Vec<usize>,
    /// Ensemble size `M`.
    pub ensemble_size: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Keep weights across iterations; otherwise reinitialize before each fit.
    pub warmstart_weights: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            rollouts: 20,
            steps: 200,
            epochs: 40,
            planner: PlannerConfig::default(),
            hidden: vec![500, 500],
            ensemble_size: 3,
            batch_size: 500,
            learning_rate: 0.001,
            seed: 0,
            warmstart_weights: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("iterations", self.iterations),
            ("rollouts", self.rollouts),
            ("steps", self.steps),
            ("epochs", self.epochs),
            ("ensemble_size", self.ensemble_size),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(PddmError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.hidden.contains(&0) {
            return Err(PddmError::InvalidArchitecture(format!("zero-width layer in {:?}", self.hidden)));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(PddmError::InvalidConfig(format!("learning_rate={}", self.learning_rate)));
        }
        self.planner.validate()
    }
}

/// Training summary for one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats<F> {
    pub iteration: usize,
    pub dataset_size: usize,
    /// Environment steps taken so far in the whole run.
    pub env_steps: usize,
    /// Per-member MSE on the dataset before this iteration's training.
    pub pre_train_loss: Vec<F>,
    /// `epochs x members` epoch-mean training losses.
    pub epoch_losses: Vec<Vec<F>>,
    pub mean_return: f64,
    pub success_rate: f64,
}

/// Receives progress as the loop runs.
pub trait ExperimentObserver<F> {
    fn on_episode(&mut self, _log: &EpisodeLog<F>) {}
    fn on_iteration(&mut self, _stats: &IterationStats<F>) {}
}

impl<F> ExperimentObserver<F> for () {}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome<F> {
    pub ensemble: ModelEnsemble<F>,
    pub episodes: Vec<EpisodeLog<F>>,
    pub dataset: TransitionDataset<F>,
    pub iterations: Vec<IterationStats<F>>,
    /// Number of planner invocations; equals the number of environment steps.
    pub planner_calls: usize,
}

pub fn run_experiment<F: Real>(env: &dyn Environment<F>, cfg: &ExperimentConfig) -> Result<ExperimentOutcome<F>> {
    run_experiment_with(env, cfg, &mut ())
}

/// Alternates MPC data collection with the current ensemble and retraining on
/// everything collected so far.
///
/// Iteration 0 plans with the randomly initialized ensemble. After each
/// iteration's rollouts the normalization statistics are refit to the full
/// dataset and held fixed while every member trains for `epochs` passes; the
/// next iteration plans with those statistics.
pub fn run_experiment_with<F: Real>(
    env: &dyn Environment<F>,
    cfg: &ExperimentConfig,
    observer: &mut dyn ExperimentObserver<F>,
) -> Result<ExperimentOutcome<F>> {
    cfg.validate()?;
    cfg.planner.validate_for(env.dim_a())?;
    let (dim_s, dim_a) = (env.dim_s(), env.dim_a());
    let lr = F::lit(cfg.learning_rate);
    let mut init_rng = stream_rng(cfg.seed, Stream::ModelInit);
    let mut ensemble = init_ensemble(dim_s, dim_a, &cfg.hidden, cfg.ensemble_size, init_rng.next_u64(), lr)?;
    let mut dataset = TransitionDataset::new(dim_s, dim_a);
    let mut reset_rng = stream_rng(cfg.seed, Stream::Resets);
    let mut plan_rng = stream_rng(cfg.seed, Stream::Planning);
    let mut train_rng = stream_rng(cfg.seed, Stream::Training);
    let planner = Planner::new(cfg.planner.clone())?;
    let mut episodes = Vec::with_capacity(cfg.iterations * cfg.rollouts);
    let mut iterations = Vec::with_capacity(cfg.iterations);
    let mut planner_calls = 0;

    for iteration in 0..cfg.iterations {
        let first_episode = episodes.len();
        for _ in 0..cfg.rollouts {
            let episode = episodes.len();
            let log = run_episode(
                env,
                &ensemble,
                &planner,
                cfg.steps,
                reset_rng.next_u64(),
                &mut plan_rng,
                iteration,
                episode,
            )?;
            planner_calls += log.len();
            let source = TransitionSource { iteration, episode };
            let next_states = log.steps.iter().skip(1).map(|s| &s.state).chain(std::iter::once(&log.final_state));
            for (step, next) in log.steps.iter().zip(next_states) {
                dataset.push(&step.state, &step.action, next, source)?;
            }
            observer.on_episode(&log);
            episodes.push(log);
        }

        ensemble.stats = refit_normalization(&dataset)?;
        if !cfg.warmstart_weights {
            ensemble.reinitialize(init_rng.next_u64())?;
        }
        let pre_train_loss = ensemble.dataset_mse(&dataset)?;
        let epoch_losses = (0..cfg.epochs)
            .map(|_| ensemble.train_epoch(&dataset, cfg.batch_size, &mut train_rng))
            .collect::<Result<Vec<_>>>()?;

        let batch = &episodes[first_episode..];
        let stats = IterationStats {
            iteration,
            dataset_size: dataset.len(),
            env_steps: episodes.iter().map(EpisodeLog::len).sum(),
            pre_train_loss,
            epoch_losses,
            mean_return: batch.iter().map(|l| l.total_return.as_f64()).sum::<f64>() / batch.len() as f64,
            success_rate: batch.iter().filter(|l| l.success).count() as f64 / batch.len() as f64,
        };
        observer.on_iteration(&stats);
        iterations.push(stats);
    }

    Ok(ExperimentOutcome { ensemble, episodes, dataset, iterations, planner_calls })
}
