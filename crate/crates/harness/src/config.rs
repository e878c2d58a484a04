//! Run configuration files.
//!
//! ```toml
//! env = "toy_valve"
//! seed = 0
//! preset = "valve_turning"   # which hyperparameter row fills the defaults
//!
//! [env_params]
//! friction = 0.3
//!
//! [experiment]
//! I = 8
//! R = 10
//! T = 40
//! E = 20
//!
//! [model]
//! hidden = [64, 64]
//! M = 3
//!
//! [planner]
//! kind = "pddm"
//! H = 7          # required
//!
//! [eval]
//! episodes = 20
//! ```
//!
//! Unknown keys are rejected. Anything left out comes from the preset row;
//! [`RunConfig::resolved`] returns the fully spelled-out form recorded in run
//! manifests.

use std::collections::BTreeMap;
use std::path::Path;

use pddm_core::env::make_env;
use pddm_core::{ExperimentConfig, PlannerConfig, PlannerKind};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Per-task hyperparameter rows (`R, T, N, gamma, beta, M, E`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    ValveTurning,
    InHandReorientation,
    Handwriting,
    BaodingBalls,
}

struct Row {
    rollouts: usize,
    steps: usize,
    candidates: usize,
    gamma: f64,
    beta: f64,
    members: usize,
    epochs: usize,
}

impl Preset {
    fn row(self) -> Row {
        let (rollouts, steps, candidates, gamma, beta) = match self {
            Preset::ValveTurning => (20, 200, 200, 10.0, 0.6),
            Preset::InHandReorientation => (30, 100, 700, 50.0, 0.7),
            Preset::Handwriting => (40, 100, 700, 0.5, 0.5),
            Preset::BaodingBalls => (30, 100, 700, 20.0, 0.7),
        };
        Row { rollouts, steps, candidates, gamma, beta, members: 3, epochs: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub rollouts: Option<usize>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmstart_weights: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(rename = "H")]
    pub horizon: usize,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub elites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cem_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_std: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodes: Option<usize>,
    /// Episode length; defaults to the training `T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub env_params: BTreeMap<String, f64>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub model: ModelSection,
    pub planner: PlannerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalSection>,
}

/// Evaluation episodes run after training (or by `eval`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub episodes: usize,
    pub steps: usize,
}

const DEFAULT_ITERATIONS: usize = 10;
const DEFAULT_EVAL_EPISODES: usize = 20;

/// Parses TOML text; errors carry the dotted path of the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| HarnessError::Config(e.to_string().trim().to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| config_error(&e))?;
    cfg.experiment_config()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Formats a path-tracked serde error so a missing key reads `planner.H`.
pub(crate) fn config_error(e: &serde_path_to_error::Error<toml::de::Error>) -> HarnessError {
    let path = e.path().to_string();
    let msg = e.inner().message().trim();
    let field = msg
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    match field {
        Some(f) if path == "." => HarnessError::Config(format!("missing required field `{f}`")),
        Some(f) => HarnessError::Config(format!("missing required field `{path}.{f}`")),
        None if path == "." => HarnessError::Config(msg.to_string()),
        None => HarnessError::Config(format!("`{path}`: {msg}")),
    }
}

impl RunConfig {
    pub fn planner_kind(&self) -> Result<PlannerKind> {
        match &self.planner.kind {
            None => Ok(PlannerKind::default()),
            Some(k) => k.parse().map_err(|_| {
                HarnessError::Config(format!(
                    "`planner.kind`: unknown controller `{k}` (expected one of {})",
                    PlannerKind::ALL.map(|k| k.as_str()).join(", ")
                ))
            }),
        }
    }

    pub fn planner_config(&self) -> Result<PlannerConfig> {
        let row = self.preset.row();
        let base = PlannerConfig::default();
        let p = &self.planner;
        let cfg = PlannerConfig {
            kind: self.planner_kind()?,
            horizon: p.horizon,
            candidates: p.candidates.unwrap_or(row.candidates),
            gamma: p.gamma.unwrap_or(row.gamma),
            beta: p.beta.unwrap_or(row.beta),
            elites: p.elites.unwrap_or(base.elites),
            alpha: p.alpha.unwrap_or(base.alpha),
            cem_iters: p.cem_iters.unwrap_or(base.cem_iters),
            sample_std: p.sample_std.clone().unwrap_or(base.sample_std),
        };
        cfg.validate().map_err(|e| HarnessError::Config(format!("[planner] {e}")))?;
        Ok(cfg)
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let row = self.preset.row();
        let base = ExperimentConfig::default();
        let (x, m) = (&self.experiment, &self.model);
        let cfg = ExperimentConfig {
            iterations: x.iterations.unwrap_or(DEFAULT_ITERATIONS),
            rollouts: x.rollouts.unwrap_or(row.rollouts),
            steps: x.steps.unwrap_or(row.steps),
            epochs: x.epochs.unwrap_or(row.epochs),
            planner: self.planner_config()?,
            hidden: m.hidden.clone().unwrap_or(base.hidden),
            ensemble_size: m.ensemble_size.unwrap_or(row.members),
            batch_size: m.batch_size.unwrap_or(base.batch_size),
            learning_rate: m.learning_rate.unwrap_or(base.learning_rate),
            seed: self.seed,
            warmstart_weights: x.warmstart_weights.unwrap_or(base.warmstart_weights),
        };
        cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn eval_settings(&self) -> Result<Option<EvalSettings>> {
        let Some(e) = &self.eval else { return Ok(None) };
        let episodes = e.episodes.unwrap_or(DEFAULT_EVAL_EPISODES);
        let steps = match e.steps {
            Some(s) => s,
            None => self.experiment_config()?.steps,
        };
        if steps == 0 {
            return Err(HarnessError::Config("`eval.steps` must be at least 1".into()));
        }
        Ok(Some(EvalSettings { episodes, steps }))
    }

    pub fn env_overrides(&self) -> Vec<(String, f64)> {
        self.env_params.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    pub fn build_env(&self) -> Result<Box<pddm_core::Environment>> {
        make_env(&self.env, &self.env_overrides()).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Every default spelled out, so the snapshot does not depend on this
    /// crate's defaults.
    pub fn resolved(&self) -> Result<RunConfig> {
        let x = self.experiment_config()?;
        let p = &x.planner;
        let eval = self.eval_settings()?;
        Ok(RunConfig {
            env: self.env.clone(),
            seed: self.seed,
            preset: self.preset,
            env_params: self.env_params.clone(),
            experiment: ExperimentSection {
                iterations: Some(x.iterations),
                rollouts: Some(x.rollouts),
                steps: Some(x.steps),
                epochs: Some(x.epochs),
                warmstart_weights: Some(x.warmstart_weights),
            },
            model: ModelSection {
                hidden: Some(x.hidden.clone()),
                ensemble_size: Some(x.ensemble_size),
                batch_size: Some(x.batch_size),
                learning_rate: Some(x.learning_rate),
            },
            planner: PlannerSection {
                kind: Some(p.kind.as_str().to_string()),
                horizon: p.horizon,
                candidates: Some(p.candidates),
                gamma: Some(p.gamma),
                beta: Some(p.beta),
                elites: Some(p.elites),
                alpha: Some(p.alpha),
                cem_iters: Some(p.cem_iters),
                sample_std: Some(p.sample_std.clone()),
            },
            eval: eval.map(|e| EvalSection { episodes: Some(e.episodes), steps: Some(e.steps) }),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}
