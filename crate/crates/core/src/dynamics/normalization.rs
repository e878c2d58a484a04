use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::dataset::TransitionDataset;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Floor applied to every standard deviation so constant columns never divide by zero.
pub const EPSILON_STD: f64 = 1e-8;

/// Per-dimension mean/std of states, actions and state deltas.
///
/// Network inputs are `[(s - state_mean) / state_std, (a - action_mean) / action_std]`
/// and network outputs are deltas in units of `delta_std` around `delta_mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats<F> {
    pub state_mean: Array1<F>,
    pub state_std: Array1<F>,
    pub action_mean: Array1<F>,
    pub action_std: Array1<F>,
    pub delta_mean: Array1<F>,
    pub delta_std: Array1<F>,
}

impl<F: Real> NormalizationStats<F> {
    /// Zero means and unit stds: normalization is the identity.
    pub fn identity(dim_s: usize, dim_a: usize) -> Self {
        Self {
            state_mean: Array1::zeros(dim_s),
            state_std: Array1::ones(dim_s),
            action_mean: Array1::zeros(dim_a),
            action_std: Array1::ones(dim_a),
            delta_mean: Array1::zeros(dim_s),
            delta_std: Array1::ones(dim_s),
        }
    }

    pub fn dim_s(&self) -> usize {
        self.state_mean.len()
    }

    pub fn dim_a(&self) -> usize {
        self.action_mean.len()
    }

    /// Population mean/std over every stored transition, stds floored at [`EPSILON_STD`].
    pub fn fit(dataset: &TransitionDataset<F>) -> Result<Self> {
        if dataset.is_empty() {
            return Err(PddmError::EmptyDataset);
        }
        let states = dataset.states();
        let deltas = &dataset.next_states() - &states;
        let (state_mean, state_std) = column_stats(states);
        let (action_mean, action_std) = column_stats(dataset.actions());
        let (delta_mean, delta_std) = column_stats(deltas.view());
        Ok(Self { state_mean, state_std, action_mean, action_std, delta_mean, delta_std })
    }

    /// Builds the normalized network input matrix `B x (dim_s + dim_a)`.
    pub fn normalize_inputs(&self, states: ArrayView2<F>, actions: ArrayView2<F>) -> Array2<F> {
        let (b, ds, da) = (states.nrows(), self.dim_s(), self.dim_a());
        let mut x = Array2::zeros((b, ds + da));
        for ((mut row, s), a) in x.outer_iter_mut().zip(states.outer_iter()).zip(actions.outer_iter()) {
            for j in 0..ds {
                row[j] = (s[j] - self.state_mean[j]) / self.state_std[j];
            }
            for j in 0..da {
                row[ds + j] = (a[j] - self.action_mean[j]) / self.action_std[j];
            }
        }
        x
    }

    pub fn normalize_state(&self, s: ArrayView1<F>) -> Array1<F> {
        (&s - &self.state_mean) / &self.state_std
    }

    pub fn denormalize_state(&self, z: ArrayView1<F>) -> Array1<F> {
        &z * &self.state_std + &self.state_mean
    }

    pub fn normalize_action(&self, a: ArrayView1<F>) -> Array1<F> {
        (&a - &self.action_mean) / &self.action_std
    }

    pub fn denormalize_action(&self, z: ArrayView1<F>) -> Array1<F> {
        &z * &self.action_std + &self.action_mean
    }

    /// Normalizes a batch of raw deltas `s' - s` (rows are samples).
    pub fn normalize_deltas(&self, deltas: ArrayView2<F>) -> Array2<F> {
        (&deltas - &self.delta_mean) / &self.delta_std
    }

    /// Maps normalized network outputs back to raw deltas (rows are samples).
    pub fn denormalize_deltas(&self, z: ArrayView2<F>) -> Array2<F> {
        &z * &self.delta_std + &self.delta_mean
    }

    /// All values flattened in field order; used by the checkpoint writer.
    pub fn vectors(&self) -> [&Array1<F>; 6] {
        [
            &self.state_mean,
            &self.state_std,
            &self.action_mean,
            &self.action_std,
            &self.delta_mean,
            &self.delta_std,
        ]
    }
}

/// Fits normalization statistics to the whole dataset.
pub fn refit_normalization<F: Real>(dataset: &TransitionDataset<F>) -> Result<NormalizationStats<F>> {
    NormalizationStats::fit(dataset)
}

fn column_stats<F: Real>(x: ArrayView2<F>) -> (Array1<F>, Array1<F>) {
    let n = F::from_usize(x.nrows()).expect("row count as float");
    let mean = x.sum_axis(Axis(0)) / n;
    let floor = F::lit(EPSILON_STD);
    let mut var = Array1::zeros(x.ncols());
    for row in x.outer_iter() {
        for ((v, &xi), &m) in var.iter_mut().zip(row).zip(&mean) {
            let d: F = xi - m;
            *v += d * d;
        }
    }
    let std = var.mapv(|v: F| (v / n).sqrt().max(floor));
    (mean, std)
}
