use ndarray::{Array2, Array3, ArrayView3, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::evaluate::{evaluate_candidates, Evaluation};
use super::{clamp_unit, ActionSequence, PlanResult, PlannerConfig};
use crate::dynamics::DynamicsModel;
use crate::env::Objective;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Lower bound applied to CEM sampling variances after each update.
pub const VARIANCE_FLOOR: f64 = 1e-10;

/// Per-step Gaussian sampling distribution refined by CEM.
#[derive(Debug, Clone, PartialEq)]
pub struct CemState<F> {
    /// `H x dim_a` means.
    pub mean: Array2<F>,
    /// `H x dim_a` variances.
    pub var: Array2<F>,
}

/// Indices of the `j` highest returns, best first; equal returns keep index order.
pub fn select_elites<F: Real>(returns: &[F], j: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..returns.len()).collect();
    order.sort_by(|&a, &b| returns[b].partial_cmp(&returns[a]).unwrap_or(std::cmp::Ordering::Equal));
    order.truncate(j);
    order
}

/// Blends the elite mean and (population) variance into `state` with weight `alpha`.
pub fn cem_update<F: Real>(state: &CemState<F>, actions: ArrayView3<F>, elites: &[usize], alpha: F) -> Result<CemState<F>> {
    if elites.is_empty() {
        return Err(PddmError::InvalidConfig("CEM needs at least one elite".into()));
    }
    let (_, h, da) = actions.dim();
    if state.mean.dim() != (h, da) || state.var.dim() != (h, da) {
        return Err(PddmError::DimensionMismatch(format!(
            "CEM state {:?} vs candidates {:?}",
            state.mean.dim(),
            (h, da)
        )));
    }
    let elite_actions = actions.select(Axis(0), elites);
    let count = F::from_usize(elites.len()).expect("elite count as float");
    let elite_mean = elite_actions.sum_axis(Axis(0)) / count;
    let mut elite_var = Array2::<F>::zeros((h, da));
    for e in elite_actions.outer_iter() {
        let d = &e - &elite_mean;
        elite_var += &(&d * &d);
    }
    elite_var /= count;
    let keep = F::one() - alpha;
    let mean = &elite_mean * alpha + &state.mean * keep;
    let floor = F::lit(VARIANCE_FLOOR);
    let var = (&elite_var * alpha + &state.var * keep).mapv(|v| v.max(floor));
    Ok(CemState { mean, var })
}

/// `n` clamped draws from `Normal(mean, var)`, drawn candidate-major, then time,
/// then action dimension.
pub fn sample_gaussian_candidates<F: Real, R: Rng + ?Sized>(state: &CemState<F>, n: usize, rng: &mut R) -> Array3<F> {
    let (h, da) = state.mean.dim();
    let std = state.var.mapv(|v| v.sqrt());
    let mut actions = Array3::zeros((n, h, da));
    for ((_, t, d), v) in actions.indexed_iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = clamp_unit(state.mean[[t, d]] + std[[t, d]] * F::lit(z));
    }
    actions
}

/// Iterative Gaussian refinement toward the top-`J` candidates.
///
/// Starts from mean 0 and variance `sample_std^2`, samples clamped candidates
/// each iteration, and returns the final mean as the plan.
pub fn cem_plan<F, M, O, R>(model: &M, objective: &O, s0: &[F], cfg: &PlannerConfig, rng: &mut R) -> Result<PlanResult<F>>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
    O: Objective<F> + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let da = model.dim_a();
    let (h, n) = (cfg.horizon, cfg.candidates);
    let mut var = Array2::zeros((h, da));
    for ((_, d), v) in var.indexed_iter_mut() {
        let sd = cfg.std_for(d)?;
        *v = F::lit(sd * sd);
    }
    let mut state = CemState { mean: Array2::zeros((h, da)), var };
    let alpha = F::lit(cfg.alpha);
    let mut last: Option<(Array3<F>, Evaluation<F>)> = None;
    for _ in 0..cfg.cem_iters {
        let actions = sample_gaussian_candidates(&state, n, rng);
        let eval = evaluate_candidates(model, objective, s0, actions.view())?;
        let elites = select_elites(&eval.returns, cfg.elites);
        state = cem_update(&state, actions.view(), &elites, alpha)?;
        last = Some((actions, eval));
    }
    let (actions, eval) = last.expect("cem_iters >= 1");
    let plan = ActionSequence::clamped(state.mean);
    Ok(PlanResult::from_plan(plan, actions, eval, ActionSequence::zeros(h, da)))
}
