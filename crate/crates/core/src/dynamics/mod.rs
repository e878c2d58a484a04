//! Ensemble neural dynamics models: networks, optimizer, data, normalization and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod dataset;
pub mod ensemble;
pub mod mlp;
pub mod normalization;

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint};
pub use dataset::{CapacityPolicy, TransitionDataset, TransitionSource};
pub use ensemble::{forward, init_ensemble, predict_next, predict_next_batch, EnsembleMember, ModelEnsemble};
pub use mlp::{Activation, Layer, MlpParams};
pub use normalization::{refit_normalization, NormalizationStats, EPSILON_STD};

/// Anything the planners can roll candidate action sequences through.
///
/// A learned ensemble exposes one predictor per member; the analytic oracle exposes one.
pub trait DynamicsModel<F: Real>: Sync {
    fn dim_s(&self) -> usize;
    fn dim_a(&self) -> usize;
    fn num_members(&self) -> usize;
    /// Next states for a batch of `(state, action)` rows. May contain non-finite values.
    fn predict_next_batch(&self, member: usize, states: ArrayView2<F>, actions: ArrayView2<F>) -> Array2<F>;
}
