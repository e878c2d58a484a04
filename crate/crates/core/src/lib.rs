//! Model-based reinforcement learning with ensembles of neural dynamics models
//! and sampling-based model-predictive control.
//!
//! * [`dynamics`]: MLP ensembles predicting normalized state deltas, trained with Adam.
//! * [`planners`]: random shooting, CEM, and filtered reward-weighted refinement.
//! * [`agent`]: the collect / refit / retrain loop and policy evaluation.
//! * [`env`]: analytic pendulum, cart-pole, two-link reacher and valve tasks.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the harness uses.

pub mod agent;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod planners;
pub mod scalar;

pub use error::{PddmError, Result};
pub use scalar::Real;

pub type ModelEnsemble = dynamics::ModelEnsemble<f64>;
pub type MlpParams = dynamics::MlpParams<f64>;
pub type NormalizationStats = dynamics::NormalizationStats<f64>;
pub type TransitionDataset = dynamics::TransitionDataset<f64>;
pub type AdamState = dynamics::AdamState<f64>;
pub type ActionSequence = planners::ActionSequence<f64>;
pub type CandidateBatch = planners::CandidateBatch<f64>;
pub type PlanResult = planners::PlanResult<f64>;
pub type EpisodeLog = agent::EpisodeLog<f64>;
pub type ExperimentOutcome = agent::ExperimentOutcome<f64>;
pub type PolicyEvaluation = agent::PolicyEvaluation<f64>;
pub type Environment = dyn env::Environment<f64>;

pub use agent::ExperimentConfig;
pub use planners::{Planner, PlannerConfig, PlannerKind};
