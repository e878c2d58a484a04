use ndarray::{Array2, Array3, ArrayView2, ArrayView3};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::PlannerConfig;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Applies `n_t = beta * u_t + (1 - beta) * n_{t-1}` along the horizon axis of a
/// `N x H x dim_a` tensor. `n_prev` (`N x dim_a`) is `n_{-1}`; `None` means zeros.
pub fn filter_noise<F: Real>(u: ArrayView3<F>, beta: F, n_prev: Option<ArrayView2<F>>) -> Result<Array3<F>> {
    let (n, h, da) = u.dim();
    let mut prev = match n_prev {
        Some(p) if p.dim() == (n, da) => p.to_owned(),
        Some(p) => {
            return Err(PddmError::DimensionMismatch(format!(
                "carryover noise {:?}, expected ({n}, {da})",
                p.dim()
            )))
        }
        None => Array2::zeros((n, da)),
    };
    let keep = F::one() - beta;
    let mut out = Array3::zeros((n, h, da));
    for i in 0..n {
        for t in 0..h {
            for d in 0..da {
                let v = beta * u[[i, t, d]] + keep * prev[[i, d]];
                out[[i, t, d]] = v;
                prev[[i, d]] = v;
            }
        }
    }
    Ok(out)
}

/// Draws `u ~ Normal(0, diag(sample_std^2))` of shape `N x H x dim_a` and filters it.
///
/// Draw order is candidate-major, then time, then action dimension.
pub fn sample_filtered_noise<F: Real, R: Rng + ?Sized>(
    cfg: &PlannerConfig,
    dim_a: usize,
    rng: &mut R,
    n_prev: Option<ArrayView2<F>>,
) -> Result<Array3<F>> {
    let stds = (0..dim_a).map(|d| cfg.std_for(d)).collect::<Result<Vec<_>>>()?;
    let mut u = Array3::zeros((cfg.candidates, cfg.horizon, dim_a));
    for ((_, _, d), v) in u.indexed_iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = F::lit(z * stds[d]);
    }
    filter_noise(u.view(), F::lit(cfg.beta), n_prev)
}
