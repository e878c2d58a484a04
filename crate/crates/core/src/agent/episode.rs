use ndarray::Array1;
use rand::{Rng, RngCore};

use super::{stream_rng, Stream};
use crate::dynamics::DynamicsModel;
use crate::env::{EnvRunner, Environment};
use crate::error::{PddmError, Result};
use crate::planners::{ActionSequence, Planner};
use crate::scalar::Real;

/// One environment step as executed.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<F> {
    /// State the action was chosen in.
    pub state: Vec<F>,
    pub action: Vec<F>,
    pub reward: F,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog<F> {
    pub iteration: usize,
    pub episode: usize,
    pub steps: Vec<StepRecord<F>>,
    pub final_state: Vec<F>,
    pub total_return: F,
    pub success: bool,
    pub failed: bool,
}

impl<F: Real> EpisodeLog<F> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Plans from `state` and returns the action to execute plus the next warm start.
pub fn mpc_step<F, M, R>(
    state: &[F],
    model: &M,
    env: &dyn Environment<F>,
    planner: &Planner,
    warm_start: Option<&ActionSequence<F>>,
    rng: &mut R,
) -> Result<(Array1<F>, ActionSequence<F>)>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
    R: Rng + ?Sized,
{
    let result = planner.plan(model, env, state, warm_start, rng)?;
    Ok((result.action, result.warm_start))
}

/// Runs one MPC episode: replan, execute the first action, repeat until done.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<F, M, R>(
    env: &dyn Environment<F>,
    model: &M,
    planner: &Planner,
    max_steps: usize,
    reset_seed: u64,
    rng: &mut R,
    iteration: usize,
    episode: usize,
) -> Result<EpisodeLog<F>>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
    R: Rng + ?Sized,
{
    let mut runner = EnvRunner::new(env, max_steps);
    runner.reset(reset_seed);
    let mut warm: Option<ActionSequence<F>> = None;
    let mut steps = Vec::with_capacity(max_steps);
    let mut flags = Vec::with_capacity(max_steps);
    let mut total = F::zero();
    let mut failed = false;
    while steps.len() < max_steps {
        let state = runner.state().to_vec();
        let (action, next_warm) = mpc_step(&state, model, env, planner, warm.as_ref(), rng)?;
        let action = action.to_vec();
        let outcome = runner.step(&action)?;
        total += outcome.reward;
        flags.push(env.success(&outcome.state));
        failed = outcome.failed;
        steps.push(StepRecord { state, action, reward: outcome.reward, done: outcome.done });
        warm = Some(next_warm);
        if outcome.done {
            break;
        }
    }
    Ok(EpisodeLog {
        iteration,
        episode,
        steps,
        final_state: runner.state().to_vec(),
        total_return: total,
        success: env.success_rule().judge(&flags),
        failed,
    })
}

/// Aggregate statistics of evaluation episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation<F> {
    pub episodes: Vec<EpisodeLog<F>>,
    pub success_rate: f64,
    /// Wilson score 95% interval for the success rate.
    pub success_ci95: (f64, f64),
    pub mean_return: f64,
    pub std_return: f64,
    pub mean_length: f64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Runs `episodes` MPC episodes without collecting data or training.
///
/// Reset seeds and planner noise come from the evaluation stream of `seed`,
/// independent of the training streams.
pub fn evaluate_policy<F, M>(
    env: &dyn Environment<F>,
    model: &M,
    planner: &Planner,
    episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<PolicyEvaluation<F>>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
{
    if episodes == 0 {
        return Err(PddmError::InvalidConfig("evaluation needs at least one episode".into()));
    }
    if max_steps == 0 {
        return Err(PddmError::InvalidConfig("evaluation episodes need at least one step".into()));
    }
    let mut rng = stream_rng(seed, Stream::Evaluation);
    let logs = (0..episodes)
        .map(|i| {
            let reset_seed = rng.next_u64();
            run_episode(env, model, planner, max_steps, reset_seed, &mut rng, 0, i)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = logs.len() as f64;
    let returns: Vec<f64> = logs.iter().map(|l| l.total_return.as_f64()).collect();
    let mean_return = returns.iter().sum::<f64>() / n;
    let std_return = (returns.iter().map(|r| (r - mean_return).powi(2)).sum::<f64>() / n).sqrt();
    let successes = logs.iter().filter(|l| l.success).count();
    Ok(PolicyEvaluation {
        success_rate: successes as f64 / n,
        success_ci95: wilson_interval(successes, logs.len()),
        mean_return,
        std_return,
        mean_length: logs.iter().map(|l| l.len() as f64).sum::<f64>() / n,
        episodes: logs,
    })
}
