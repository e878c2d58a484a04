use std::fmt;
use std::str::FromStr;

use crate::error::{PddmError, Result};

/// Which trajectory optimizer to run at each control step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PlannerKind {
    RandomShooting,
    Cem,
    #[default]
    Pddm,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::RandomShooting, PlannerKind::Cem, PlannerKind::Pddm];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::RandomShooting => "random_shooting",
            PlannerKind::Cem => "cem",
            PlannerKind::Pddm => "pddm",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = PddmError;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PddmError::InvalidConfig(format!("unknown planner kind `{s}`")))
    }
}

/// Knobs shared by all sampling planners. Defaults follow the valve-turning row
/// of the reference hyperparameters (`H = 7, N = 200, gamma = 10, beta = 0.6`).
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    /// Planning horizon `H` in steps.
    pub horizon: usize,
    /// Candidate sequences `N` per sampling round.
    pub candidates: usize,
    /// Reward-weighting factor for the softmax mean update.
    pub gamma: f64,
    /// Noise filtering coefficient in `(0, 1]`; 1 means white noise.
    pub beta: f64,
    /// CEM elite count `J`.
    pub elites: usize,
    /// CEM smoothing: weight on the elite statistics.
    pub alpha: f64,
    pub cem_iters: usize,
    /// Sampling standard deviation, one entry per action dimension or a single
    /// entry applied to all of them.
    pub sample_std: Vec<f64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            kind: PlannerKind::Pddm,
            horizon: 7,
            candidates: 200,
            gamma: 10.0,
            beta: 0.6,
            elites: 20,
            alpha: 0.9,
            cem_iters: 3,
            sample_std: vec![0.4],
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PddmError::InvalidConfig(msg));
        if self.horizon < 1 {
            return bad("planner horizon H must be at least 1".into());
        }
        if self.candidates < 1 {
            return bad("planner candidate count N must be at least 1".into());
        }
        // J only matters to CEM; other planners ignore it.
        if self.kind == PlannerKind::Cem && (self.elites < 1 || self.elites > self.candidates) {
            return bad(format!("elite count J={} must lie in [1, N={}]", self.elites, self.candidates));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta={} must lie in (0, 1]", self.beta));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma={} must be finite and >= 0", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha={} must lie in [0, 1]", self.alpha));
        }
        if self.cem_iters < 1 {
            return bad("cem_iters must be at least 1".into());
        }
        if self.sample_std.is_empty() || self.sample_std.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad(format!("sample_std {:?} must be non-empty and > 0", self.sample_std));
        }
        Ok(())
    }

    /// Sampling std for action dimension `d`.
    pub fn std_for(&self, d: usize) -> Result<f64> {
        match self.sample_std.len() {
            1 => Ok(self.sample_std[0]),
            _ => self.sample_std.get(d).copied().ok_or_else(|| {
                PddmError::DimensionMismatch(format!(
                    "sample_std has {} entries, action dimension {d} requested",
                    self.sample_std.len()
                ))
            }),
        }
    }

    /// Checks per-dimension `sample_std` against the action size.
    pub fn validate_for(&self, dim_a: usize) -> Result<()> {
        self.validate()?;
        if self.sample_std.len() != 1 && self.sample_std.len() != dim_a {
            return Err(PddmError::DimensionMismatch(format!(
                "sample_std has {} entries for {dim_a} action dimensions",
                self.sample_std.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PlannerConfig::default().validate().unwrap();
    }

    #[test]
    fn baoding_row_is_valid() {
        let cfg = PlannerConfig { horizon: 7, candidates: 700, gamma: 20.0, beta: 0.7, ..Default::default() };
        cfg.validate().unwrap();
    }

    #[test]
    fn invariants_enforced() {
        let base = PlannerConfig::default();
        for cfg in [
            PlannerConfig { horizon: 0, ..base.clone() },
            PlannerConfig { candidates: 0, ..base.clone() },
            PlannerConfig { kind: PlannerKind::Cem, elites: 0, ..base.clone() },
            PlannerConfig { kind: PlannerKind::Cem, elites: 201, ..base.clone() },
            PlannerConfig { beta: 0.0, ..base.clone() },
            PlannerConfig { beta: 1.5, ..base.clone() },
            PlannerConfig { gamma: -1.0, ..base.clone() },
            PlannerConfig { alpha: 1.1, ..base.clone() },
            PlannerConfig { cem_iters: 0, ..base.clone() },
            PlannerConfig { sample_std: vec![0.0], ..base.clone() },
            PlannerConfig { sample_std: vec![], ..base.clone() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(PlannerConfig { elites: 201, ..base.clone() }.validate().is_ok());
        let two = PlannerConfig { sample_std: vec![0.1, 0.2], ..base };
        assert!(two.validate_for(2).is_ok());
        assert!(two.validate_for(3).is_err());
        assert_eq!(two.std_for(1).unwrap(), 0.2);
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in PlannerKind::ALL {
            assert_eq!(k.as_str().parse::<PlannerKind>().unwrap(), k);
        }
        assert!("mppi".parse::<PlannerKind>().is_err());
    }
}
