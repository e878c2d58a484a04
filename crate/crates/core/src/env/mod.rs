//! Analytic desk-scale control tasks with pure reward functions.

mod cartpole;
mod oracle;
mod pendulum;
mod reacher;
mod registry;
mod valve;

pub use cartpole::Cartpole;
pub use oracle::{oracle_model, OracleModel};
pub use pendulum::Pendulum;
pub use reacher::Reacher2;
pub use registry::{make_env, ENV_NAMES};
pub use valve::ToyValve;

use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Task-side view used by planners to score predicted rollouts.
pub trait Objective<F: Real>: Sync {
    /// Per-step reward; depends only on its arguments.
    fn reward(&self, s: &[F], a: &[F]) -> F;

    fn failure(&self, _s: &[F]) -> bool {
        false
    }

    /// Added once when a rollout enters a failure state.
    fn failure_penalty(&self) -> F {
        F::zero()
    }
}

/// How a whole episode is judged from its per-step [`Environment::success`] flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuccessRule {
    /// Success held for this many consecutive states at some point.
    Hold(usize),
    /// Success at the last state of the episode.
    Final,
}

impl SuccessRule {
    pub fn judge(self, flags: &[bool]) -> bool {
        match self {
            SuccessRule::Final => flags.last().copied().unwrap_or(false),
            SuccessRule::Hold(n) => {
                let mut run = 0;
                for &f in flags {
                    run = if f { run + 1 } else { 0 };
                    if run >= n.max(1) {
                        return true;
                    }
                }
                false
            }
        }
    }
}

/// Deterministic environment with closed-form dynamics.
///
/// `transition` is stateless, which is what lets [`OracleModel`] wrap it and
/// lets rollouts be replayed from any saved state.
pub trait Environment<F: Real>: Objective<F> + Send {
    fn name(&self) -> &'static str;
    fn dim_s(&self) -> usize;
    fn dim_a(&self) -> usize;
    /// Control period in seconds.
    fn dt(&self) -> F;
    /// Start state for an episode.
    fn initial_state(&self, seed: u64) -> Vec<F>;
    /// One control period of dynamics from `s` under `a`.
    fn transition(&self, s: &[F], a: &[F]) -> Vec<F>;
    fn success(&self, s: &[F]) -> bool;
    fn success_rule(&self) -> SuccessRule;
    /// Sets a named physical constant; unknown names are errors.
    fn set_param(&mut self, name: &str, value: f64) -> Result<()>;
    /// Names and current values of every tunable constant.
    fn params(&self) -> Vec<(&'static str, f64)>;
}

/// Result of one [`EnvRunner::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<F> {
    pub state: Vec<F>,
    pub reward: F,
    pub done: bool,
    pub failed: bool,
}

/// Runs episodes of an environment with a step budget.
pub struct EnvRunner<'a, F: Real> {
    env: &'a dyn Environment<F>,
    state: Vec<F>,
    steps: usize,
    max_steps: usize,
}

impl<'a, F: Real> EnvRunner<'a, F> {
    pub fn new(env: &'a dyn Environment<F>, max_steps: usize) -> Self {
        Self { env, state: vec![F::zero(); env.dim_s()], steps: 0, max_steps }
    }

    pub fn reset(&mut self, seed: u64) -> &[F] {
        self.state = self.env.initial_state(seed);
        self.steps = 0;
        &self.state
    }

    /// Starts an episode from an explicit state.
    pub fn reset_to(&mut self, state: Vec<F>) {
        self.state = state;
        self.steps = 0;
    }

    pub fn state(&self) -> &[F] {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Applies `a` (must lie in `[-1, 1]`). The reward is `r(s, a)` for the
    /// pre-step state, plus the failure penalty if `s'` is a failure state.
    pub fn step(&mut self, a: &[F]) -> Result<StepOutcome<F>> {
        if a.len() != self.env.dim_a() {
            return Err(PddmError::DimensionMismatch(format!(
                "action has {} components, environment expects {}",
                a.len(),
                self.env.dim_a()
            )));
        }
        if let Some((index, &v)) = a.iter().enumerate().find(|(_, v)| v.is_nan() || v.abs() > F::one()) {
            return Err(PddmError::ActionOutOfRange { index, value: v.as_f64() });
        }
        let mut reward = self.env.reward(&self.state, a);
        let next = self.env.transition(&self.state, a);
        self.steps += 1;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(PddmError::EnvDiverged {
                step: self.steps,
                state: next.iter().map(|v| v.as_f64()).collect(),
            });
        }
        let failed = self.env.failure(&next);
        if failed {
            reward += self.env.failure_penalty();
        }
        self.state = next.clone();
        Ok(StepOutcome { state: next, reward, done: failed || self.steps >= self.max_steps, failed })
    }
}

/// Projects `(sin, cos)` back onto the unit circle when it has drifted off.
pub(crate) fn unit_angle<F: Real>(s: F, c: F) -> (F, F) {
    let r = s.hypot(c);
    if r == F::zero() {
        return (F::zero(), F::one());
    }
    if (r - F::one()).abs() > F::lit(1e-12) {
        (s / r, c / r)
    } else {
        (s, c)
    }
}

/// Advances an angle stored as `(sin, cos)` by `delta` radians.
pub(crate) fn rotate<F: Real>(s: F, c: F, delta: F) -> (F, F) {
    if delta == F::zero() {
        return (s, c);
    }
    let (sd, cd) = delta.sin_cos();
    (s * cd + c * sd, c * cd - s * sd)
}

pub(crate) fn unknown_param(env: &str, param: &str) -> PddmError {
    PddmError::UnknownEnvParameter { env: env.into(), param: param.into() }
}

pub(crate) fn finite<F: Real>(name: &str, value: f64) -> Result<F> {
    if value.is_finite() {
        Ok(F::lit(value))
    } else {
        Err(PddmError::InvalidConfig(format!("environment parameter {name}={value} must be finite")))
    }
}

/// Masses, lengths, inertias and time steps.
pub(crate) fn positive<F: Real>(name: &str, value: f64) -> Result<F> {
    if value > 0.0 && value.is_finite() {
        Ok(F::lit(value))
    } else {
        Err(PddmError::InvalidConfig(format!("environment parameter {name}={value} must be positive")))
    }
}

pub(crate) fn substeps(value: f64) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value <= 1e6 {
        Ok(value as usize)
    } else {
        Err(PddmError::InvalidConfig(format!("substeps={value} must be a positive integer")))
    }
}
