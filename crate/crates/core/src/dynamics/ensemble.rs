use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::AdamState;
use super::dataset::TransitionDataset;
use super::mlp::MlpParams;
use super::normalization::NormalizationStats;
use super::DynamicsModel;
use crate::error::{PddmError, Result};
use crate::scalar::Real;

pub const DEFAULT_HIDDEN: [usize; 2] = [500, 500];
pub const DEFAULT_BATCH_SIZE: usize = 500;

/// One network of the ensemble with its own optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember<F> {
    pub params: MlpParams<F>,
    pub optimizer: AdamState<F>,
    pub seed: u64,
}

/// `M` independently initialized networks predicting normalized state deltas,
/// sharing one set of normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEnsemble<F> {
    pub members: Vec<EnsembleMember<F>>,
    pub stats: NormalizationStats<F>,
    dim_s: usize,
    dim_a: usize,
}

/// Seeds for each member, derived from the ensemble seed.
pub fn member_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Builds an ensemble of `count` networks `dim_s + dim_a -> hidden -> dim_s`.
pub fn init_ensemble<F: Real>(
    dim_s: usize,
    dim_a: usize,
    hidden: &[usize],
    count: usize,
    seed: u64,
    learning_rate: F,
) -> Result<ModelEnsemble<F>> {
    if count == 0 {
        return Err(PddmError::InvalidArchitecture("ensemble size must be at least 1".into()));
    }
    let members = member_seeds(seed, count)
        .into_iter()
        .map(|member_seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(member_seed);
            let params = MlpParams::random(dim_s + dim_a, hidden, dim_s, &mut rng)?;
            let optimizer = AdamState::new(&params, learning_rate);
            Ok(EnsembleMember { params, optimizer, seed: member_seed })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelEnsemble { members, stats: NormalizationStats::identity(dim_s, dim_a), dim_s, dim_a })
}

impl<F: Real> ModelEnsemble<F> {
    /// Assembles an ensemble from parts, validating that every shape agrees.
    pub fn from_parts(members: Vec<EnsembleMember<F>>, stats: NormalizationStats<F>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| PddmError::InvalidArchitecture("ensemble size must be at least 1".into()))?;
        let (dim_s, dim_a) = (stats.dim_s(), stats.dim_a());
        let hidden = first.params.hidden_widths();
        for (i, m) in members.iter().enumerate() {
            if m.params.input_dim() != dim_s + dim_a
                || m.params.output_dim() != dim_s
                || m.params.hidden_widths() != hidden
            {
                return Err(PddmError::DimensionMismatch(format!(
                    "member {i} is {} -> {:?} -> {}, expected {} -> {hidden:?} -> {dim_s}",
                    m.params.input_dim(),
                    m.params.hidden_widths(),
                    m.params.output_dim(),
                    dim_s + dim_a
                )));
            }
        }
        let [sm, ss, am, asd, dm, dsd] = stats.vectors();
        if ss.len() != dim_s || dm.len() != dim_s || dsd.len() != dim_s || asd.len() != am.len() || sm.len() != dim_s {
            return Err(PddmError::DimensionMismatch("normalization vectors disagree".into()));
        }
        Ok(Self { members, stats, dim_s, dim_a })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.members[0].params.hidden_widths()
    }

    pub fn learning_rate(&self) -> F {
        self.members[0].optimizer.learning_rate
    }

    pub fn set_learning_rate(&mut self, lr: F) {
        for m in &mut self.members {
            m.optimizer.learning_rate = lr;
        }
    }

    /// Replaces every member with a fresh initialization from `seed`, keeping the stats.
    pub fn reinitialize(&mut self, seed: u64) -> Result<()> {
        let fresh = init_ensemble(
            self.dim_s,
            self.dim_a,
            &self.hidden_widths(),
            self.len(),
            seed,
            self.learning_rate(),
        )?;
        self.members = fresh.members;
        Ok(())
    }

    /// Normalized inputs and normalized delta targets for the whole dataset.
    fn regression_data(&self, dataset: &TransitionDataset<F>) -> Result<(Array2<F>, Array2<F>)> {
        if dataset.is_empty() {
            return Err(PddmError::EmptyDataset);
        }
        if dataset.dim_s() != self.dim_s || dataset.dim_a() != self.dim_a {
            return Err(PddmError::DimensionMismatch(format!(
                "dataset (s={}, a={}) vs ensemble (s={}, a={})",
                dataset.dim_s(),
                dataset.dim_a(),
                self.dim_s,
                self.dim_a
            )));
        }
        let x = self.stats.normalize_inputs(dataset.states(), dataset.actions());
        let deltas = &dataset.next_states() - &dataset.states();
        let y = self.stats.normalize_deltas(deltas.view());
        Ok((x, y))
    }

    /// Per-member MSE on normalized deltas over the whole dataset, without training.
    pub fn dataset_mse(&self, dataset: &TransitionDataset<F>) -> Result<Vec<F>> {
        let (x, y) = self.regression_data(dataset)?;
        Ok(self.members.iter().map(|m| m.params.mse(x.view(), y.view())).collect())
    }

    /// One shuffled pass over the dataset per member, an Adam step per batch.
    ///
    /// Each member draws its own permutation from a sub-seed taken from `rng`
    /// (in member order), so the result does not depend on thread scheduling.
    /// Returns each member's loss averaged over the epoch's samples.
    pub fn train_epoch<R: Rng + ?Sized>(
        &mut self,
        dataset: &TransitionDataset<F>,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<F>> {
        if batch_size == 0 {
            return Err(PddmError::InvalidConfig("batch size must be at least 1".into()));
        }
        let (x, y) = self.regression_data(dataset)?;
        let n = x.nrows();
        let shuffle_seeds: Vec<u64> = self.members.iter().map(|_| rng.next_u64()).collect();
        self.members
            .par_iter_mut()
            .zip(shuffle_seeds)
            .map(|(member, shuffle_seed)| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
                let mut total = F::zero();
                for batch in order.chunks(batch_size) {
                    let xb = x.select(Axis(0), batch);
                    let yb = y.select(Axis(0), batch);
                    let (loss, grads) = member.params.backward(xb.view(), yb.view())?;
                    member.optimizer.apply(&mut member.params, &grads);
                    total += loss * F::from_usize(batch.len()).expect("batch len as float");
                }
                Ok(total / F::from_usize(n).expect("dataset len as float"))
            })
            .collect()
    }
}

impl<F: Real> DynamicsModel<F> for ModelEnsemble<F> {
    fn dim_s(&self) -> usize {
        self.dim_s
    }

    fn dim_a(&self) -> usize {
        self.dim_a
    }

    fn num_members(&self) -> usize {
        self.members.len()
    }

    fn predict_next_batch(&self, member: usize, states: ArrayView2<F>, actions: ArrayView2<F>) -> Array2<F> {
        predict_next_batch(&self.members[member].params, &self.stats, states, actions)
    }
}

fn check_finite<F: Real>(what: &str, v: ArrayView1<F>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PddmError::NonFinite(what.into()))
    }
}

/// Normalized delta predicted by one member for a single `(s, a)`.
pub fn forward<F: Real>(
    member: &MlpParams<F>,
    stats: &NormalizationStats<F>,
    s: ArrayView1<F>,
    a: ArrayView1<F>,
) -> Result<Array1<F>> {
    if s.len() != stats.dim_s() || a.len() != stats.dim_a() || member.input_dim() != s.len() + a.len() {
        return Err(PddmError::DimensionMismatch(format!(
            "state {} / action {} for network input {}",
            s.len(),
            a.len(),
            member.input_dim()
        )));
    }
    check_finite("state", s)?;
    check_finite("action", a)?;
    let x = stats.normalize_inputs(s.insert_axis(Axis(0)), a.insert_axis(Axis(0)));
    Ok(member.forward(x.view()).row(0).to_owned())
}

/// `s + denormalize(forward(s, a))`.
pub fn predict_next<F: Real>(
    member: &MlpParams<F>,
    stats: &NormalizationStats<F>,
    s: ArrayView1<F>,
    a: ArrayView1<F>,
) -> Result<Array1<F>> {
    let z = forward(member, stats, s, a)?;
    let next = &s + &(&z * &stats.delta_std + &stats.delta_mean);
    check_finite("predicted state", next.view())?;
    Ok(next)
}

/// Batched `predict_next`; rows are samples. Non-finite outputs are passed through.
pub fn predict_next_batch<F: Real>(
    member: &MlpParams<F>,
    stats: &NormalizationStats<F>,
    states: ArrayView2<F>,
    actions: ArrayView2<F>,
) -> Array2<F> {
    let x = stats.normalize_inputs(states, actions);
    let z = member.forward(x.view());
    stats.denormalize_deltas(z.view()) + states
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::dataset::TransitionSource;
    use ndarray::array;

    #[test]
    fn reference_default_architecture() {
        let e = init_ensemble::<f64>(3, 1, &DEFAULT_HIDDEN, 3, 0, 0.001).unwrap();
        assert_eq!(e.len(), 3);
        for m in &e.members {
            assert_eq!(m.params.hidden_widths(), vec![500, 500]);
            assert_eq!(m.params.input_dim(), 4);
            assert_eq!(m.params.output_dim(), 3);
        }
        assert_ne!(e.members[0].params, e.members[1].params);
        assert_ne!(e.members[0].seed, e.members[1].seed);
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_ensemble::<f64>(2, 1, &[4], 1, 7, 0.001).unwrap();
        let b = init_ensemble::<f64>(2, 1, &[4], 1, 7, 0.001).unwrap();
        assert_eq!(a, b);
        assert!(a.members[0]
            .params
            .params()
            .zip(b.members[0].params.params())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(init_ensemble::<f64>(2, 1, &[0], 1, 0, 0.001).is_err());
        assert!(init_ensemble::<f64>(2, 1, &[4], 0, 0, 0.001).is_err());
    }

    #[test]
    fn zero_network_predicts_identity_plus_delta_mean() {
        let params = MlpParams::<f64>::zeros(3, &[4], 2).unwrap();
        let mut stats = NormalizationStats::identity(2, 1);
        let s = array![0.3, -1.2];
        let a = array![0.5];
        assert_eq!(forward(&params, &stats, s.view(), a.view()).unwrap(), array![0.0, 0.0]);
        assert_eq!(predict_next(&params, &stats, s.view(), a.view()).unwrap(), s);
        stats.delta_mean = array![0.25, -0.5];
        stats.delta_std = array![3.0, 7.0];
        assert_eq!(predict_next(&params, &stats, s.view(), a.view()).unwrap(), array![0.55, -1.7]);
    }

    #[test]
    fn forward_rejects_non_finite_and_bad_dims() {
        let params = MlpParams::<f64>::zeros(3, &[4], 2).unwrap();
        let stats = NormalizationStats::identity(2, 1);
        let r = forward(&params, &stats, array![f64::NAN, 0.0].view(), array![0.0].view());
        assert!(matches!(r, Err(PddmError::NonFinite(_))));
        let r = forward(&params, &stats, array![0.0].view(), array![0.0].view());
        assert!(matches!(r, Err(PddmError::DimensionMismatch(_))));
    }

    #[test]
    fn forward_is_pure() {
        let e = init_ensemble::<f64>(2, 1, &[8, 8], 1, 11, 0.001).unwrap();
        let s = array![0.1, 0.2];
        let a = array![-0.3];
        let p = &e.members[0].params;
        assert_eq!(forward(p, &e.stats, s.view(), a.view()).unwrap(), forward(p, &e.stats, s.view(), a.view()).unwrap());
    }

    #[test]
    fn batch_and_single_prediction_agree() {
        let e = init_ensemble::<f64>(2, 1, &[8], 2, 4, 0.001).unwrap();
        let states = array![[0.1, 0.2], [1.0, -1.0]];
        let actions = array![[0.5], [-0.5]];
        let batch = e.predict_next_batch(1, states.view(), actions.view());
        for i in 0..2 {
            let single = predict_next(&e.members[1].params, &e.stats, states.row(i), actions.row(i)).unwrap();
            for j in 0..2 {
                assert!((single[j] - batch[[i, j]]).abs() < 1e-14);
            }
        }
    }

    fn single_transition() -> TransitionDataset<f64> {
        let mut d = TransitionDataset::new(2, 1);
        d.push(&[0.5, -0.5], &[0.25], &[0.7, -0.1], TransitionSource::default()).unwrap();
        d
    }

    #[test]
    fn memorizes_a_single_transition() {
        let d = single_transition();
        let mut e = init_ensemble::<f64>(2, 1, &[8], 1, 3, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = e.train_epoch(&d, 500, &mut rng).unwrap()[0];
        for _ in 0..200 {
            e.train_epoch(&d, 500, &mut rng).unwrap();
        }
        let last = e.dataset_mse(&d).unwrap()[0];
        assert!(last < 1e-6, "loss {first} -> {last}");
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let d = single_transition();
        let mut e = init_ensemble::<f64>(2, 1, &[8], 2, 3, 0.0).unwrap();
        let before = e.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l1 = e.train_epoch(&d, 500, &mut rng).unwrap();
        let l2 = e.train_epoch(&d, 500, &mut rng).unwrap();
        assert_eq!(l1, l2);
        for (a, b) in e.members.iter().zip(&before.members) {
            assert_eq!(a.params, b.params);
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        let d = TransitionDataset::<f64>::new(2, 1);
        let mut e = init_ensemble::<f64>(2, 1, &[8], 1, 3, 0.001).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(e.train_epoch(&d, 10, &mut rng), Err(PddmError::EmptyDataset)));
    }
}
