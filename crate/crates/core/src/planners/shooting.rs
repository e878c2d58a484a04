use ndarray::Array3;
use rand::Rng;

use super::evaluate::evaluate_candidates;
use super::{argmax, ActionSequence, PlanResult, PlannerConfig};
use crate::dynamics::DynamicsModel;
use crate::env::Objective;
use crate::error::Result;
use crate::scalar::Real;

/// `N` i.i.d. uniform sequences in `[-1, 1]`; keeps the best-scoring one.
pub fn random_shooting<F, M, O, R>(
    model: &M,
    objective: &O,
    s0: &[F],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult<F>>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
    O: Objective<F> + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let da = model.dim_a();
    let mut actions = Array3::zeros((cfg.candidates, cfg.horizon, da));
    for v in actions.iter_mut() {
        *v = F::lit(rng.random_range(-1.0..=1.0));
    }
    let eval = evaluate_candidates(model, objective, s0, actions.view())?;
    let best = argmax(&eval.returns);
    let plan = ActionSequence::clamped(actions.index_axis(ndarray::Axis(0), best).to_owned());
    Ok(PlanResult::from_plan(plan, actions, eval, ActionSequence::zeros(cfg.horizon, da)))
}
