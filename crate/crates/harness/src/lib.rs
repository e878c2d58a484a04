//! Command-line harness around `pddm-core`: TOML run configs, run directories
//! with manifests and CSV logs, ablation grids and plot-data export.

pub mod ablate;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{load_config, parse_config, RunConfig};
pub use error::{HarnessError, Result};
