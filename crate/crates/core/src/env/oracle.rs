use ndarray::{Array2, ArrayView2};

use super::Environment;
use crate::dynamics::DynamicsModel;
use crate::scalar::Real;

/// The environment's own transition function behind the model interface.
pub struct OracleModel<'a, F: Real> {
    env: &'a dyn Environment<F>,
}

pub fn oracle_model<F: Real>(env: &dyn Environment<F>) -> OracleModel<'_, F> {
    OracleModel { env }
}

impl<F: Real> OracleModel<'_, F> {
    pub fn predict_next(&self, s: &[F], a: &[F]) -> Vec<F> {
        self.env.transition(s, a)
    }
}

impl<F: Real> DynamicsModel<F> for OracleModel<'_, F> {
    fn dim_s(&self) -> usize {
        self.env.dim_s()
    }

    fn dim_a(&self) -> usize {
        self.env.dim_a()
    }

    fn num_members(&self) -> usize {
        1
    }

    fn predict_next_batch(&self, _member: usize, states: ArrayView2<F>, actions: ArrayView2<F>) -> Array2<F> {
        let mut out = Array2::zeros((states.nrows(), self.env.dim_s()));
        for ((s, a), mut row) in states.outer_iter().zip(actions.outer_iter()).zip(out.outer_iter_mut()) {
            let s = s.to_vec();
            let a = a.to_vec();
            for (d, v) in row.iter_mut().zip(self.env.transition(&s, &a)) {
                *d = v;
            }
        }
        out
    }
}
