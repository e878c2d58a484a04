//! Binary little-endian checkpoint format.
//!
//! ```text
//! "PDDM" | version: u32 | members: u32 | arch_len: u32 | arch: [u32; arch_len]
//! per member: seed u64 | params [f64] | lr, beta1, beta2, eps: f64 | step u64 | m [f64] | v [f64]
//! stats: state_mean, state_std, action_mean, action_std, delta_mean, delta_std: [f64]
//! ```
//!
//! `arch` is `[dim_s + dim_a, hidden..., dim_s]`. Parameters are flattened layer by
//! layer, weight (row-major, `fan_in x fan_out`) then bias. Values are stored as
//! `f64` so an `f32` ensemble roundtrips exactly too.

use std::fs;
use std::path::Path;

use ndarray::Array1;

use super::adam::AdamState;
use super::ensemble::{EnsembleMember, ModelEnsemble};
use super::mlp::{Layer, MlpParams};
use super::normalization::NormalizationStats;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"PDDM";
pub const FORMAT_VERSION: u32 = 1;

pub fn save_checkpoint<F: Real>(ensemble: &ModelEnsemble<F>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(ensemble))?;
    Ok(())
}

pub fn load_checkpoint<F: Real>(path: impl AsRef<Path>) -> Result<ModelEnsemble<F>> {
    decode(&fs::read(path)?)
}

/// Loads a checkpoint and checks it was trained for the given state/action sizes.
pub fn load_checkpoint_for<F: Real>(
    path: impl AsRef<Path>,
    dim_s: usize,
    dim_a: usize,
) -> Result<ModelEnsemble<F>> {
    let ensemble = load_checkpoint(path)?;
    if ensemble.dim_s() != dim_s || ensemble.dim_a() != dim_a {
        return Err(PddmError::DimensionMismatch(format!(
            "checkpoint has (s={}, a={}), environment has (s={dim_s}, a={dim_a})",
            ensemble.dim_s(),
            ensemble.dim_a()
        )));
    }
    Ok(ensemble)
}

pub fn encode<F: Real>(ensemble: &ModelEnsemble<F>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u32(&mut out, ensemble.len() as u32);
    let mut arch = vec![ensemble.dim_s() + ensemble.dim_a()];
    arch.extend(ensemble.hidden_widths());
    arch.push(ensemble.dim_s());
    put_u32(&mut out, arch.len() as u32);
    for &w in &arch {
        put_u32(&mut out, w as u32);
    }
    for member in &ensemble.members {
        put_u64(&mut out, member.seed);
        put_layers(&mut out, &member.params.layers);
        let opt = &member.optimizer;
        for v in [opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon] {
            put_f64(&mut out, v.as_f64());
        }
        put_u64(&mut out, opt.step);
        put_layers(&mut out, &opt.first_moment);
        put_layers(&mut out, &opt.second_moment);
    }
    for v in ensemble.stats.vectors() {
        for &x in v {
            put_f64(&mut out, x.as_f64());
        }
    }
    out
}

pub fn decode<F: Real>(bytes: &[u8]) -> Result<ModelEnsemble<F>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(PddmError::VersionMismatch(format!("bad magic {magic:?}")));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(PddmError::VersionMismatch(format!(
            "file version {version}, supported {FORMAT_VERSION}"
        )));
    }
    let count = r.u32("member count")? as usize;
    let arch_len = r.u32("architecture length")? as usize;
    if arch_len < 2 || count == 0 {
        return Err(PddmError::DimensionMismatch(format!(
            "architecture length {arch_len}, member count {count}"
        )));
    }
    let arch = (0..arch_len)
        .map(|_| r.u32("architecture").map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    let (input, dim_s) = (arch[0], arch[arch_len - 1]);
    if dim_s == 0 || input <= dim_s || arch.contains(&0) {
        return Err(PddmError::DimensionMismatch(format!("invalid architecture {arch:?}")));
    }
    let dim_a = input - dim_s;
    let hidden = &arch[1..arch_len - 1];
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let seed = r.u64("member seed")?;
        let mut params = MlpParams::<F>::zeros(input, hidden, dim_s)
            .map_err(|e| PddmError::DimensionMismatch(e.to_string()))?;
        r.fill_layers(&mut params.layers, "parameters")?;
        let mut optimizer = AdamState::new(&params, F::zero());
        optimizer.learning_rate = r.scalar("learning rate")?;
        optimizer.beta1 = r.scalar("beta1")?;
        optimizer.beta2 = r.scalar("beta2")?;
        optimizer.epsilon = r.scalar("epsilon")?;
        optimizer.step = r.u64("step")?;
        r.fill_layers(&mut optimizer.first_moment, "first moment")?;
        r.fill_layers(&mut optimizer.second_moment, "second moment")?;
        members.push(EnsembleMember { params, optimizer, seed });
    }
    let mut vector = |n: usize, what: &str| -> Result<Array1<F>> {
        (0..n).map(|_| r.scalar(what)).collect::<Result<Vec<_>>>().map(Array1::from)
    };
    let stats = NormalizationStats {
        state_mean: vector(dim_s, "state mean")?,
        state_std: vector(dim_s, "state std")?,
        action_mean: vector(dim_a, "action mean")?,
        action_std: vector(dim_a, "action std")?,
        delta_mean: vector(dim_s, "delta mean")?,
        delta_std: vector(dim_s, "delta std")?,
    };
    if r.pos != bytes.len() {
        return Err(PddmError::DimensionMismatch(format!(
            "{} trailing bytes after declared architecture {arch:?}",
            bytes.len() - r.pos
        )));
    }
    ModelEnsemble::from_parts(members, stats)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_layers<F: Real>(out: &mut Vec<u8>, layers: &[Layer<F>]) {
    for layer in layers {
        for &p in layer.params() {
            put_f64(out, p.as_f64());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(PddmError::Truncated(format!(
                "reading {what} at byte {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn scalar<F: Real>(&mut self, what: &str) -> Result<F> {
        let v = f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes"));
        F::from_f64(v).ok_or_else(|| PddmError::NonFinite(what.into()))
    }

    fn fill_layers<F: Real>(&mut self, layers: &mut [Layer<F>], what: &str) -> Result<()> {
        for layer in layers {
            for p in layer.params_mut() {
                *p = self.scalar(what)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ensemble::init_ensemble;

    fn bits<F: Real>(e: &ModelEnsemble<F>) -> Vec<u8> {
        encode(e)
    }

    #[test]
    fn fresh_ensemble_roundtrips_bitwise() {
        let e = init_ensemble::<f64>(3, 2, &[6, 5], 2, 9, 0.001).unwrap();
        let back: ModelEnsemble<f64> = decode(&encode(&e)).unwrap();
        assert_eq!(back, e);
        assert_eq!(bits(&back), bits(&e));
    }

    #[test]
    fn single_precision_roundtrips_exactly() {
        let e = init_ensemble::<f32>(2, 1, &[4], 1, 1, 0.001).unwrap();
        let back: ModelEnsemble<f32> = decode(&encode(&e)).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn corrupted_magic_is_version_mismatch() {
        let e = init_ensemble::<f64>(2, 1, &[4], 1, 1, 0.001).unwrap();
        let mut bytes = encode(&e);
        bytes[0] = b'X';
        assert!(matches!(decode::<f64>(&bytes), Err(PddmError::VersionMismatch(_))));
        let mut bytes = encode(&e);
        bytes[4] = 99;
        assert!(matches!(decode::<f64>(&bytes), Err(PddmError::VersionMismatch(_))));
    }

    #[test]
    fn truncation_and_dimension_errors_are_distinct() {
        let e = init_ensemble::<f64>(2, 1, &[4], 1, 1, 0.001).unwrap();
        let bytes = encode(&e);
        assert!(matches!(decode::<f64>(&bytes[..bytes.len() - 3]), Err(PddmError::Truncated(_))));
        assert!(matches!(decode::<f64>(&bytes[..2]), Err(PddmError::Truncated(_))));
        let mut longer = bytes.clone();
        longer.extend_from_slice(&[0; 8]);
        assert!(matches!(decode::<f64>(&longer), Err(PddmError::DimensionMismatch(_))));
        // Claim the output is as wide as the input.
        let mut bad = bytes.clone();
        let arch_out = 4 + 4 + 4 + 4 + 4 * 2;
        bad[arch_out..arch_out + 4].copy_from_slice(&3u32.to_le_bytes());
        assert!(matches!(decode::<f64>(&bad), Err(PddmError::DimensionMismatch(_))));
    }

    #[test]
    fn expected_dims_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let e = init_ensemble::<f64>(2, 1, &[4], 1, 1, 0.001).unwrap();
        save_checkpoint(&e, &path).unwrap();
        assert!(load_checkpoint_for::<f64>(&path, 2, 1).is_ok());
        assert!(matches!(
            load_checkpoint_for::<f64>(&path, 3, 1),
            Err(PddmError::DimensionMismatch(_))
        ));
    }
}
