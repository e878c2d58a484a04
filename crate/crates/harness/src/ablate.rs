//! One-axis ablation grids over a base run config.
//!
//! ```toml
//! axis = "controller"
//! values = ["random_shooting", "cem", "pddm"]
//! seeds = [0, 1, 2]
//! base = "valve.toml"     # relative to this file; or an inline [config] table
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use pddm_core::PlannerKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{config_error, load_config, RunConfig};
use crate::error::{HarnessError, Result};
use crate::output::{num, CsvSink, INCOMPLETE, SUMMARY_CSV};
use crate::run::{train, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Architecture,
    EnsembleSize,
    Warmstart,
    Horizon,
    Controller,
    Gamma,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Architecture => "architecture",
            Axis::EnsembleSize => "ensemble_size",
            Axis::Warmstart => "warmstart",
            Axis::Horizon => "horizon",
            Axis::Controller => "controller",
            Axis::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxisValue {
    Architecture(Vec<usize>),
    EnsembleSize(usize),
    Warmstart(bool),
    Horizon(usize),
    Controller(PlannerKind),
    Gamma(f64),
}

impl AxisValue {
    fn parse(axis: Axis, v: &toml::Value) -> Result<Self> {
        let bad = || HarnessError::Config(format!("`values`: {v} is not a valid {} value", axis.as_str()));
        let count = |v: &toml::Value| v.as_integer().filter(|&i| i >= 1).map(|i| i as usize);
        Ok(match axis {
            Axis::Architecture => {
                let layers = v.as_array().ok_or_else(bad)?;
                AxisValue::Architecture(layers.iter().map(|l| count(l).ok_or_else(bad)).collect::<Result<_>>()?)
            }
            Axis::EnsembleSize => AxisValue::EnsembleSize(count(v).ok_or_else(bad)?),
            Axis::Warmstart => AxisValue::Warmstart(v.as_bool().ok_or_else(bad)?),
            Axis::Horizon => AxisValue::Horizon(count(v).ok_or_else(bad)?),
            Axis::Controller => AxisValue::Controller(v.as_str().ok_or_else(bad)?.parse().map_err(|_| bad())?),
            Axis::Gamma => {
                let g = v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(bad)?;
                AxisValue::Gamma(g)
            }
        })
    }

    /// Used in the summary CSV and as the cell directory name.
    pub fn label(&self) -> String {
        match self {
            AxisValue::Architecture(h) if h.is_empty() => "linear".into(),
            AxisValue::Architecture(h) => h.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("x"),
            AxisValue::EnsembleSize(m) => m.to_string(),
            AxisValue::Warmstart(b) => b.to_string(),
            AxisValue::Horizon(h) => h.to_string(),
            AxisValue::Controller(k) => k.as_str().into(),
            AxisValue::Gamma(g) => num(*g),
        }
    }

    fn apply(&self, cfg: &mut RunConfig) {
        match self {
            AxisValue::Architecture(h) => cfg.model.hidden = Some(h.clone()),
            AxisValue::EnsembleSize(m) => cfg.model.ensemble_size = Some(*m),
            AxisValue::Warmstart(b) => cfg.experiment.warmstart_weights = Some(*b),
            AxisValue::Horizon(h) => cfg.planner.horizon = *h,
            AxisValue::Controller(k) => cfg.planner.kind = Some(k.as_str().into()),
            AxisValue::Gamma(g) => cfg.planner.gamma = Some(*g),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    axis: Axis,
    values: Vec<toml::Value>,
    seeds: Vec<u64>,
    #[serde(default)]
    base: Option<PathBuf>,
    #[serde(default)]
    config: Option<RunConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationGrid {
    pub axis: Axis,
    pub values: Vec<AxisValue>,
    pub seeds: Vec<u64>,
    pub base: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub value: AxisValue,
    pub seed: u64,
    pub config: RunConfig,
}

impl AblationGrid {
    pub fn new(axis: Axis, values: Vec<AxisValue>, seeds: Vec<u64>, base: RunConfig) -> Result<Self> {
        if values.is_empty() {
            return Err(HarnessError::Config("ablation needs at least one value".into()));
        }
        if seeds.is_empty() {
            return Err(HarnessError::Config("ablation needs at least one seed".into()));
        }
        let grid = Self { axis, values, seeds, base };
        let mut labels: Vec<String> = grid.values.iter().map(AxisValue::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != grid.values.len() {
            return Err(HarnessError::Config("ablation values must be distinct".into()));
        }
        for cell in grid.cells() {
            cell.config.resolved().map_err(|e| match e {
                HarnessError::Config(m) => HarnessError::Config(format!("{}={}: {m}", axis.as_str(), cell.value.label())),
                other => other,
            })?;
        }
        Ok(grid)
    }

    /// Cells in summary order: values outer, seeds inner.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.values.len() * self.seeds.len());
        for value in &self.values {
            for &seed in &self.seeds {
                let mut config = self.base.clone();
                value.apply(&mut config);
                config.seed = seed;
                out.push(Cell { value: value.clone(), seed, config });
            }
        }
        out
    }
}

pub fn parse_grid(text: &str, relative_to: &Path) -> Result<AblationGrid> {
    let de = toml::Deserializer::parse(text).map_err(|e| HarnessError::Config(e.to_string().trim().to_string()))?;
    let file: GridFile = serde_path_to_error::deserialize(de).map_err(|e| config_error(&e))?;
    let base = match (file.base, file.config) {
        (Some(p), None) => load_config(&relative_to.join(p))?,
        (None, Some(c)) => c,
        _ => return Err(HarnessError::Config("grid needs exactly one of `base` (a path) or `[config]`".into())),
    };
    let values = file.values.iter().map(|v| AxisValue::parse(file.axis, v)).collect::<Result<Vec<_>>>()?;
    AblationGrid::new(file.axis, values, file.seeds, base)
}

pub fn load_grid(path: &Path) -> Result<AblationGrid> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_grid(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Outcome of one grid cell; failed cells keep their row.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub value: String,
    pub seed: u64,
    pub run_dir: PathBuf,
    pub outcome: std::result::Result<CellMetrics, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub env_steps: usize,
    pub final_train_return: f64,
    pub final_train_success: f64,
    pub eval_success_rate: Option<f64>,
    pub eval_mean_return: Option<f64>,
}

impl CellMetrics {
    fn from_report(r: &TrainReport) -> Self {
        let last = r.iterations.last().expect("at least one iteration");
        CellMetrics {
            env_steps: r.env_steps,
            final_train_return: last.mean_return,
            final_train_success: last.success_rate,
            eval_success_rate: r.evaluation.as_ref().map(|e| e.success_rate),
            eval_mean_return: r.evaluation.as_ref().map(|e| e.mean_return),
        }
    }
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "axis",
    "value",
    "seed",
    "status",
    "error",
    "env_steps",
    "final_train_return",
    "final_train_success",
    "eval_success_rate",
    "eval_mean_return",
    "run_dir",
];

/// Runs every cell (on `jobs` threads) into `out/cells/...` and writes
/// `out/summary.csv`.
pub fn run_grid(grid: &AblationGrid, out: &Path, jobs: usize, force: bool) -> Result<Vec<CellResult>> {
    if out.join(SUMMARY_CSV).exists() && !force {
        return Err(HarnessError::Config(format!(
            "{} already holds an ablation (pass --force to overwrite)",
            out.display()
        )));
    }
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let marker = out.join(INCOMPLETE);
    fs::write(&marker, "running\n").map_err(|e| HarnessError::io(&marker, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let axis = grid.axis.as_str();
    let results: Vec<CellResult> = pool.install(|| {
        grid.cells()
            .into_par_iter()
            .map(|cell| {
                let value = cell.value.label();
                let run_dir = PathBuf::from("cells").join(format!("{axis}={value}")).join(format!("seed={}", cell.seed));
                let outcome = train(&cell.config, &out.join(&run_dir), force)
                    .map(|r| CellMetrics::from_report(&r))
                    .map_err(|e| e.to_string());
                CellResult { value, seed: cell.seed, run_dir, outcome }
            })
            .collect()
    });
    let mut summary = CsvSink::create(&out.join(SUMMARY_CSV), &SUMMARY_HEADER)?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for r in &results {
        let (status, error, metrics) = match &r.outcome {
            Ok(m) => ("ok", String::new(), Some(m)),
            Err(e) => ("failed", e.clone(), None),
        };
        summary.row([
            axis.to_string(),
            r.value.clone(),
            r.seed.to_string(),
            status.to_string(),
            error,
            metrics.map(|m| m.env_steps.to_string()).unwrap_or_default(),
            opt(metrics.map(|m| m.final_train_return)),
            opt(metrics.map(|m| m.final_train_success)),
            opt(metrics.and_then(|m| m.eval_success_rate)),
            opt(metrics.and_then(|m| m.eval_mean_return)),
            r.run_dir.display().to_string(),
        ])?;
    }
    summary.flush()?;
    fs::remove_file(&marker).map_err(|e| HarnessError::io(&marker, e))?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[config]\nenv = \"pendulum\"\n[config.planner]\nH = 5\n";

    #[test]
    fn parses_each_axis() {
        let cases = [
            ("architecture", "[[8, 8], [16]]", vec!["8x8", "16"]),
            ("ensemble_size", "[1, 3]", vec!["1", "3"]),
            ("warmstart", "[true, false]", vec!["true", "false"]),
            ("horizon", "[2, 7, 20]", vec!["2", "7", "20"]),
            ("controller", "[\"random_shooting\", \"cem\", \"pddm\"]", vec!["random_shooting", "cem", "pddm"]),
            ("gamma", "[0.1, 10, 1000]", vec!["0.1", "10.0", "1000.0"]),
        ];
        for (axis, values, labels) in cases {
            let text = format!("axis = \"{axis}\"\nvalues = {values}\nseeds = [0, 1]\n{BASE}");
            let grid = parse_grid(&text, Path::new(".")).unwrap();
            assert_eq!(grid.values.iter().map(AxisValue::label).collect::<Vec<_>>(), labels);
            assert_eq!(grid.cells().len(), labels.len() * 2);
        }
    }

    #[test]
    fn cells_carry_value_and_seed() {
        let text = format!("axis = \"horizon\"\nvalues = [2, 9]\nseeds = [4, 5]\n{BASE}");
        let grid = parse_grid(&text, Path::new(".")).unwrap();
        let cells = grid.cells();
        assert_eq!(cells[1].config.planner.horizon, 2);
        assert_eq!(cells[1].seed, 5);
        assert_eq!(cells[2].config.planner.horizon, 9);
        assert_eq!(cells[2].config.seed, 4);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in [
            format!("axis = \"horizon\"\nvalues = []\nseeds = [0]\n{BASE}"),
            format!("axis = \"horizon\"\nvalues = [3]\nseeds = []\n{BASE}"),
            format!("axis = \"horizon\"\nvalues = [0]\nseeds = [0]\n{BASE}"),
            format!("axis = \"controller\"\nvalues = [\"mppi\"]\nseeds = [0]\n{BASE}"),
            format!("axis = \"depth\"\nvalues = [1]\nseeds = [0]\n{BASE}"),
            format!("axis = \"gamma\"\nvalues = [-1.0]\nseeds = [0]\n{BASE}"),
            format!("axis = \"horizon\"\nvalues = [3, 3]\nseeds = [0]\n{BASE}"),
            "axis = \"horizon\"\nvalues = [3]\nseeds = [0]\n".to_string(),
        ] {
            let err = parse_grid(&bad, Path::new(".")).unwrap_err();
            assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG, "{bad}");
        }
        let err = parse_grid(&format!("axis = \"horizon\"\nvalues = []\nseeds = [0]\n{BASE}"), Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("at least one value"));
    }
}
