//! The outer learning loop: collect MPC rollouts, refit, retrain, repeat.

mod episode;
mod experiment;

pub use episode::{evaluate_policy, mpc_step, run_episode, wilson_interval, EpisodeLog, PolicyEvaluation, StepRecord};
pub use experiment::{
    run_experiment, run_experiment_with, ExperimentConfig, ExperimentObserver, ExperimentOutcome, IterationStats,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ModelInit = 1,
    Resets = 2,
    Planning = 3,
    Training = 4,
    Evaluation = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
