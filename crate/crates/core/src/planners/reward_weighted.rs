use ndarray::{Array2, ArrayView3, Axis};
use rand::Rng;

use super::evaluate::evaluate_candidates;
use super::noise::sample_filtered_noise;
use super::{clamp_unit, ActionSequence, PlanResult, PlannerConfig};
use crate::dynamics::DynamicsModel;
use crate::env::Objective;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Softmax-weighted mean of the candidate sequences:
/// `mu_t = sum_k exp(gamma R_k) a_t^k / sum_j exp(gamma R_j)`.
///
/// The largest `gamma * R` is subtracted before exponentiating.
pub fn reward_weighted_update<F: Real>(actions: ArrayView3<F>, returns: &[F], gamma: F) -> Result<Array2<F>> {
    let (n, h, da) = actions.dim();
    if n == 0 || n != returns.len() {
        return Err(PddmError::DimensionMismatch(format!("{n} candidates with {} returns", returns.len())));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(PddmError::NonFinite("candidate returns".into()));
    }
    let scaled: Vec<F> = returns.iter().map(|&r| gamma * r).collect();
    let top = scaled.iter().copied().fold(F::neg_infinity(), F::max);
    let weights: Vec<F> = scaled.iter().map(|&v| (v - top).exp()).collect();
    let total: F = weights.iter().copied().sum();
    let mut mean = Array2::zeros((h, da));
    for (w, a) in weights.iter().zip(actions.axis_iter(Axis(0))) {
        if *w != F::zero() {
            mean.scaled_add(*w, &a);
        }
    }
    Ok(mean / total)
}

/// Filtered-noise sampling around the warm-started mean followed by one
/// reward-weighted update.
///
/// Candidates are `clamp(mu + n)` with `n` from [`sample_filtered_noise`]
/// (no noise carried over between calls). The first action of the updated
/// mean is returned, and the mean shifted by one step is the next warm start.
pub fn pddm_plan<F, M, O, R>(
    model: &M,
    objective: &O,
    s0: &[F],
    cfg: &PlannerConfig,
    warm_start: Option<&ActionSequence<F>>,
    rng: &mut R,
) -> Result<PlanResult<F>>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
    O: Objective<F> + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate_for(model.dim_a())?;
    let (h, da) = (cfg.horizon, model.dim_a());
    let mean = match warm_start {
        Some(w) if w.view().dim() == (h, da) => w.view().to_owned(),
        Some(w) => {
            return Err(PddmError::DimensionMismatch(format!(
                "warm start {:?}, planner expects ({h}, {da})",
                w.view().dim()
            )))
        }
        None => Array2::zeros((h, da)),
    };
    let mut actions = sample_filtered_noise::<F, R>(cfg, da, rng, None)?;
    for mut cand in actions.axis_iter_mut(Axis(0)) {
        cand += &mean;
        cand.mapv_inplace(clamp_unit);
    }
    let eval = evaluate_candidates(model, objective, s0, actions.view())?;
    let updated = reward_weighted_update(actions.view(), &eval.returns, F::lit(cfg.gamma))?;
    let plan = ActionSequence::clamped(updated);
    let warm = plan.shifted();
    Ok(PlanResult::from_plan(plan, actions, eval, warm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn three_candidate_hand_value() {
        let actions = Array3::from_shape_vec((3, 1, 1), vec![0.0, 1.0, 2.0]).unwrap();
        let mu = reward_weighted_update(actions.view(), &[1.0, 2.0, 3.0], 1.0).unwrap();
        let e = std::f64::consts::E;
        let expected = (e.powi(2) + 2.0 * e.powi(3)) / (e + e.powi(2) + e.powi(3));
        assert!((mu[[0, 0]] - expected).abs() < 1e-15);
        assert!((mu[[0, 0]] - 1.575_210_382_604_441_5).abs() < 1e-14);
    }

    #[test]
    fn single_candidate_is_returned_exactly() {
        let actions = Array3::from_shape_vec((1, 2, 1), vec![0.3, -0.7]).unwrap();
        let mu = reward_weighted_update(actions.view(), &[-42.0], 20.0).unwrap();
        assert_eq!(mu.into_raw_vec_and_offset().0, vec![0.3, -0.7]);
    }

    #[test]
    fn rejects_bad_returns() {
        let actions = Array3::<f64>::zeros((2, 1, 1));
        assert!(reward_weighted_update(actions.view(), &[1.0], 1.0).is_err());
        assert!(reward_weighted_update(actions.view(), &[1.0, f64::INFINITY], 1.0).is_err());
    }
}
