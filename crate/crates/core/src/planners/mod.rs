//! Gradient-free trajectory optimizers over a predictive model.

pub mod cem;
pub mod config;
pub mod evaluate;
pub mod noise;
pub mod reward_weighted;
pub mod shooting;

use ndarray::{s, Array1, Array2, Array3, ArrayView2};
use rand::Rng;

use crate::dynamics::DynamicsModel;
use crate::env::Objective;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

pub use cem::{cem_plan, cem_update, sample_gaussian_candidates, select_elites, CemState};
pub use config::{PlannerConfig, PlannerKind};
pub use evaluate::{evaluate_candidates, Evaluation, INVALID_RETURN};
pub use noise::{filter_noise, sample_filtered_noise};
pub use reward_weighted::{pddm_plan, reward_weighted_update};
pub use shooting::random_shooting;

/// An `H x dim_a` action plan with every entry in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence<F>(Array2<F>);

impl<F: Real> ActionSequence<F> {
    /// Clamps every entry into `[-1, 1]`.
    pub fn clamped(mut actions: Array2<F>) -> Self {
        actions.mapv_inplace(clamp_unit);
        Self(actions)
    }

    pub fn zeros(horizon: usize, dim_a: usize) -> Self {
        Self(Array2::zeros((horizon, dim_a)))
    }

    pub fn horizon(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, F> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<F> {
        self.0
    }

    /// Drops the first step and pads the end with a zero action.
    pub fn shifted(&self) -> Self {
        let (h, da) = self.0.dim();
        let mut out = Array2::zeros((h, da));
        if h > 1 {
            out.slice_mut(s![..h - 1, ..]).assign(&self.0.slice(s![1.., ..]));
        }
        Self(out)
    }
}

/// `N` candidate sequences (`N x H x dim_a`) and their predicted returns.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBatch<F> {
    pub actions: Array3<F>,
    pub returns: Vec<F>,
}

impl<F: Real> CandidateBatch<F> {
    pub fn new(actions: Array3<F>, returns: Vec<F>) -> Result<Self> {
        if actions.dim().0 != returns.len() {
            return Err(PddmError::DimensionMismatch(format!(
                "{} candidates with {} returns",
                actions.dim().0,
                returns.len()
            )));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(PddmError::NonFinite("candidate returns".into()));
        }
        Ok(Self { actions, returns })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// What a planner hands back to the control loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult<F> {
    /// First action of `plan`, to execute now.
    pub action: Array1<F>,
    /// Full refined mean sequence.
    pub plan: ActionSequence<F>,
    /// Highest predicted return among the evaluated candidates.
    pub best_return: F,
    /// Std of the per-member returns of that best candidate.
    pub return_spread: F,
    /// Warm start for the next control step (zeros for memoryless planners).
    pub warm_start: ActionSequence<F>,
    /// The last batch of candidates the planner scored.
    pub candidates: CandidateBatch<F>,
}

impl<F: Real> PlanResult<F> {
    fn from_plan(
        plan: ActionSequence<F>,
        actions: Array3<F>,
        eval: Evaluation<F>,
        warm_start: ActionSequence<F>,
    ) -> Self {
        let best = argmax(&eval.returns);
        Self {
            action: plan.view().row(0).to_owned(),
            best_return: eval.returns[best],
            return_spread: eval.spread(best),
            plan,
            warm_start,
            candidates: CandidateBatch { actions, returns: eval.returns },
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<F: Real>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[inline]
pub(crate) fn clamp_unit<F: Real>(x: F) -> F {
    x.max(-F::one()).min(F::one())
}

/// A configured planner. Holds no state between calls; the warm-start mean is
/// owned by the caller.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Planner {
    pub config: PlannerConfig,
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn plan<F, M, O, R>(
        &self,
        model: &M,
        objective: &O,
        s0: &[F],
        warm_start: Option<&ActionSequence<F>>,
        rng: &mut R,
    ) -> Result<PlanResult<F>>
    where
        F: Real,
        M: DynamicsModel<F> + ?Sized,
        O: Objective<F> + ?Sized,
        R: Rng + ?Sized,
    {
        match self.config.kind {
            PlannerKind::RandomShooting => random_shooting(model, objective, s0, &self.config, rng),
            PlannerKind::Cem => cem_plan(model, objective, s0, &self.config, rng),
            PlannerKind::Pddm => pddm_plan(model, objective, s0, &self.config, warm_start, rng),
        }
    }
}
