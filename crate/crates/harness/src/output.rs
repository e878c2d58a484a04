//! Run directories, manifests and CSV sinks.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};

pub const MANIFEST: &str = "manifest.json";
/// Present while a run is in progress or after it failed; holds the error.
pub const INCOMPLETE: &str = "INCOMPLETE";
pub const EPISODES_CSV: &str = "episodes.csv";
pub const ITERATIONS_CSV: &str = "iterations.csv";
pub const MODEL_LOSS_CSV: &str = "model_loss.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const EVAL_EPISODES_CSV: &str = "eval_episodes.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CHECKPOINT: &str = "model.ckpt";

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Train,
    Eval,
}

/// Where `eval` gets its dynamics from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSource {
    Oracle,
    Checkpoint { path: PathBuf },
}

impl ModelSource {
    pub fn label(&self) -> &'static str {
        match self {
            ModelSource::Oracle => "oracle",
            ModelSource::Checkpoint { .. } => "checkpoint",
        }
    }
}

/// Everything needed to rerun a run, plus timing that is deliberately kept
/// out of the CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub code_version: String,
    pub seed: u64,
    /// Fully resolved configuration.
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_model: Option<ModelSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_episodes: Option<usize>,
    pub output_dir: PathBuf,
    pub started_at_unix: f64,
    pub finished_at_unix: Option<f64>,
    pub wall_clock_seconds: Option<f64>,
    /// Environment steps consumed (training rollouts plus evaluation).
    pub env_steps: Option<usize>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(&mut de)
            .map_err(|e| HarnessError::Config(format!("{}: `{}`: {}", path.display(), e.path(), e.inner())))
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// An output directory for one run.
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// Creates `path`, refusing to clobber an earlier run unless `force`.
    pub fn create(path: &Path, force: bool) -> Result<Self> {
        if path.join(MANIFEST).exists() && !force {
            return Err(HarnessError::Config(format!(
                "{} already holds a run (pass --force to overwrite)",
                path.display()
            )));
        }
        fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))?;
        let dir = RunDir { path: path.to_path_buf() };
        dir.write(INCOMPLETE, "running\n")?;
        Ok(dir)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.file(name);
        fs::write(&p, contents).map_err(|e| HarnessError::io(p, e))
    }

    pub fn write_manifest(&self, m: &RunManifest) -> Result<()> {
        self.write(MANIFEST, &(serde_json::to_string_pretty(m)? + "\n"))
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> Result<CsvSink> {
        CsvSink::create(&self.file(name), header)
    }

    pub fn mark_failed(&self, err: &HarnessError) {
        // Best effort: the original error is what the caller reports.
        let _ = self.write(INCOMPLETE, &format!("failed: {err}\n"));
    }

    pub fn mark_complete(&self) -> Result<()> {
        let p = self.file(INCOMPLETE);
        fs::remove_file(&p).map_err(|e| HarnessError::io(p, e))
    }
}

pub struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|e| HarnessError::Csv(e.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, -2.5e-300, 1e30, std::f64::consts::PI, 123456789.12345679] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn existing_run_needs_force() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = RunDir::create(tmp.path(), false).unwrap();
        assert!(dir.file(INCOMPLETE).exists());
        dir.write(MANIFEST, "{}").unwrap();
        assert!(RunDir::create(tmp.path(), false).is_err());
        assert!(RunDir::create(tmp.path(), true).is_ok());
    }
}
