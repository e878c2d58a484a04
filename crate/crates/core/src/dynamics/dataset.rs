use ndarray::{Array2, ArrayView2};

use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Storage limit applied by [`TransitionDataset::push`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapacityPolicy {
    /// Keep every transition ever collected.
    #[default]
    Unbounded,
    /// Reject pushes once this many transitions are stored.
    Fixed(usize),
}

/// Where a transition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransitionSource {
    pub iteration: usize,
    pub episode: usize,
}

/// Append-only store of `(s, a, s')` triples in row-major contiguous arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset<F> {
    dim_s: usize,
    dim_a: usize,
    states: Vec<F>,
    actions: Vec<F>,
    next_states: Vec<F>,
    sources: Vec<TransitionSource>,
    capacity: CapacityPolicy,
}

impl<F: Real> TransitionDataset<F> {
    pub fn new(dim_s: usize, dim_a: usize) -> Self {
        Self::with_capacity_policy(dim_s, dim_a, CapacityPolicy::Unbounded)
    }

    pub fn with_capacity_policy(dim_s: usize, dim_a: usize, capacity: CapacityPolicy) -> Self {
        Self {
            dim_s,
            dim_a,
            states: Vec::new(),
            actions: Vec::new(),
            next_states: Vec::new(),
            sources: Vec::new(),
            capacity,
        }
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn capacity_policy(&self) -> CapacityPolicy {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Appends one transition. Actions must already lie in `[-1, 1]`.
    pub fn push(&mut self, s: &[F], a: &[F], s_next: &[F], source: TransitionSource) -> Result<()> {
        if s.len() != self.dim_s || s_next.len() != self.dim_s || a.len() != self.dim_a {
            return Err(PddmError::DimensionMismatch(format!(
                "transition dims (s={}, a={}, s'={}) vs dataset (s={}, a={})",
                s.len(),
                a.len(),
                s_next.len(),
                self.dim_s,
                self.dim_a
            )));
        }
        if let CapacityPolicy::Fixed(cap) = self.capacity {
            if self.len() >= cap {
                return Err(PddmError::DatasetFull(cap));
            }
        }
        if let Some((index, &value)) = a
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || v.abs() > F::one())
        {
            return Err(PddmError::ActionOutOfRange { index, value: value.as_f64() });
        }
        if s.iter().chain(s_next).any(|v| !v.is_finite()) {
            return Err(PddmError::NonFinite("transition state".into()));
        }
        self.states.extend_from_slice(s);
        self.actions.extend_from_slice(a);
        self.next_states.extend_from_slice(s_next);
        self.sources.push(source);
        Ok(())
    }

    pub fn state(&self, i: usize) -> &[F] {
        &self.states[i * self.dim_s..(i + 1) * self.dim_s]
    }

    pub fn action(&self, i: usize) -> &[F] {
        &self.actions[i * self.dim_a..(i + 1) * self.dim_a]
    }

    pub fn next_state(&self, i: usize) -> &[F] {
        &self.next_states[i * self.dim_s..(i + 1) * self.dim_s]
    }

    pub fn source(&self, i: usize) -> TransitionSource {
        self.sources[i]
    }

    pub fn states(&self) -> ArrayView2<'_, F> {
        ArrayView2::from_shape((self.len(), self.dim_s), &self.states).expect("consistent layout")
    }

    pub fn actions(&self) -> ArrayView2<'_, F> {
        ArrayView2::from_shape((self.len(), self.dim_a), &self.actions).expect("consistent layout")
    }

    pub fn next_states(&self) -> ArrayView2<'_, F> {
        ArrayView2::from_shape((self.len(), self.dim_s), &self.next_states)
            .expect("consistent layout")
    }

    /// Copies the rows at `indices` into `(states, actions, next_states)` matrices.
    pub fn gather(&self, indices: &[usize]) -> (Array2<F>, Array2<F>, Array2<F>) {
        let n = indices.len();
        let mut s = Array2::zeros((n, self.dim_s));
        let mut a = Array2::zeros((n, self.dim_a));
        let mut sn = Array2::zeros((n, self.dim_s));
        for (row, &i) in indices.iter().enumerate() {
            s.row_mut(row)
                .iter_mut()
                .zip(self.state(i))
                .for_each(|(d, &v)| *d = v);
            a.row_mut(row)
                .iter_mut()
                .zip(self.action(i))
                .for_each(|(d, &v)| *d = v);
            sn.row_mut(row)
                .iter_mut()
                .zip(self.next_state(i))
                .for_each(|(d, &v)| *d = v);
        }
        (s, a, sn)
    }
}
