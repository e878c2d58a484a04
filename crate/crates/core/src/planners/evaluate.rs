use ndarray::{s, Array2, ArrayView3, Axis};
use rayon::prelude::*;

use crate::dynamics::DynamicsModel;
use crate::env::Objective;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Score given to a candidate whose predicted rollout went non-finite.
pub const INVALID_RETURN: f64 = -1e30;

/// Rows per evaluation task; fixed so results do not depend on the thread count.
const CHUNK: usize = 64;

/// Predicted returns of a candidate batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<F> {
    /// Ensemble-mean return per candidate.
    pub returns: Vec<F>,
    /// `members x candidates` per-member returns.
    pub member_returns: Array2<F>,
}

impl<F: Real> Evaluation<F> {
    /// Standard deviation of the member returns of candidate `k`.
    pub fn spread(&self, k: usize) -> F {
        let col = self.member_returns.column(k);
        let m = F::from_usize(col.len()).expect("member count as float");
        let mean = col.sum() / m;
        (col.iter().map(|&r| (r - mean) * (r - mean)).sum::<F>() / m).sqrt()
    }
}

/// Rolls every candidate through every model member and averages the returns.
///
/// `actions` is `N x H x dim_a`. The return of a rollout is `sum_t r(s_t, a_t)`
/// over `t = 0..H` with `s_0 = s0`. When a predicted state satisfies the
/// failure predicate the penalty is added once and the state is held for the
/// remaining steps. A non-finite prediction scores [`INVALID_RETURN`].
pub fn evaluate_candidates<F, M, O>(model: &M, objective: &O, s0: &[F], actions: ArrayView3<F>) -> Result<Evaluation<F>>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
    O: Objective<F> + ?Sized,
{
    let (n, _h, da) = actions.dim();
    if s0.len() != model.dim_s() || da != model.dim_a() {
        return Err(PddmError::DimensionMismatch(format!(
            "state {} / action {} for model (s={}, a={})",
            s0.len(),
            da,
            model.dim_s(),
            model.dim_a()
        )));
    }
    if s0.iter().any(|v| !v.is_finite()) {
        return Err(PddmError::NonFinite("planning start state".into()));
    }
    let members = model.num_members();
    let tasks: Vec<(usize, usize)> = (0..members)
        .flat_map(|m| (0..n).step_by(CHUNK).map(move |start| (m, start)))
        .collect();
    let chunks: Vec<Vec<F>> = tasks
        .par_iter()
        .map(|&(m, start)| {
            let end = (start + CHUNK).min(n);
            rollout_chunk(model, objective, m, s0, actions.slice(s![start..end, .., ..]))
        })
        .collect();
    let mut member_returns = Array2::zeros((members, n));
    for (&(m, start), chunk) in tasks.iter().zip(&chunks) {
        for (i, &r) in chunk.iter().enumerate() {
            member_returns[[m, start + i]] = r;
        }
    }
    let invalid = F::lit(INVALID_RETURN);
    let count = F::from_usize(members).expect("member count as float");
    let returns = member_returns
        .axis_iter(Axis(1))
        .map(|col| if col.iter().any(|&r| r <= invalid) { invalid } else { col.sum() / count })
        .collect();
    Ok(Evaluation { returns, member_returns })
}

fn rollout_chunk<F, M, O>(model: &M, objective: &O, member: usize, s0: &[F], actions: ArrayView3<F>) -> Vec<F>
where
    F: Real,
    M: DynamicsModel<F> + ?Sized,
    O: Objective<F> + ?Sized,
{
    let (n, h, _) = actions.dim();
    let invalid = F::lit(INVALID_RETURN);
    let mut states = Array2::from_shape_fn((n, s0.len()), |(_, j)| s0[j]);
    let mut returns = vec![F::zero(); n];
    let mut frozen = vec![false; n];
    let mut broken = vec![false; n];
    for t in 0..h {
        let a_t = actions.index_axis(Axis(1), t).to_owned();
        for k in 0..n {
            if broken[k] {
                continue;
            }
            let r = objective.reward(
                states.row(k).as_slice().expect("row-major states"),
                a_t.row(k).as_slice().expect("row-major actions"),
            );
            if r.is_finite() {
                returns[k] += r;
            } else {
                broken[k] = true;
            }
        }
        let next = model.predict_next_batch(member, states.view(), a_t.view());
        for k in 0..n {
            if frozen[k] || broken[k] {
                continue;
            }
            let row = next.row(k);
            if row.iter().any(|v| !v.is_finite()) {
                broken[k] = true;
                continue;
            }
            states.row_mut(k).assign(&row);
            if objective.failure(states.row(k).as_slice().expect("row-major states")) {
                returns[k] += objective.failure_penalty();
                frozen[k] = true;
            }
        }
    }
    for k in 0..n {
        if broken[k] || !returns[k].is_finite() {
            returns[k] = invalid;
        }
    }
    returns
}
