//! Fully-connected ReLU network with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{PddmError, Result};
use crate::scalar::Real;

/// Hidden-layer nonlinearity. Only rectified-linear is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

/// One affine layer, `y = x W + b`, with `W` stored `fan_in x fan_out`.
///
/// The same shape doubles as the container for gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Real> Layer<F> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn params(&self) -> impl Iterator<Item = &F> {
        self.weight.iter().chain(self.bias.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut F> {
        self.weight.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Parameters of a multilayer perceptron: hidden layers use [`Activation`], the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<F> {
    pub layers: Vec<Layer<F>>,
    pub activation: Activation,
}

/// Per-layer values cached by the forward pass for backpropagation.
struct Trace<F> {
    /// Input to each layer (the network input, then each hidden activation).
    inputs: Vec<Array2<F>>,
    output: Array2<F>,
}

fn layer_sizes(input_dim: usize, hidden: &[usize], output_dim: usize) -> Result<Vec<usize>> {
    if input_dim == 0 || output_dim == 0 || hidden.contains(&0) {
        return Err(PddmError::InvalidArchitecture(format!(
            "zero-width layer in {input_dim} -> {hidden:?} -> {output_dim}"
        )));
    }
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input_dim);
    sizes.extend_from_slice(hidden);
    sizes.push(output_dim);
    Ok(sizes)
}

impl<F: Real> MlpParams<F> {
    /// Uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn random<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let sizes = layer_sizes(input_dim, hidden, output_dim)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                let mut layer = Layer::zeros(w[0], w[1]);
                for p in layer.params_mut() {
                    *p = F::lit(rng.random_range(-scale..=scale));
                }
                layer
            })
            .collect();
        Ok(Self { layers, activation: Activation::Relu })
    }

    /// All-zero parameters.
    pub fn zeros(input_dim: usize, hidden: &[usize], output_dim: usize) -> Result<Self> {
        let sizes = layer_sizes(input_dim, hidden, output_dim)?;
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self { layers, activation: Activation::Relu })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").fan_out()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(Layer::fan_out).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &F> {
        self.layers.iter().flat_map(Layer::params)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut F> {
        self.layers.iter_mut().flat_map(Layer::params_mut)
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    /// Zero-valued structure with this network's shape.
    pub fn zeros_like(&self) -> Vec<Layer<F>> {
        self.layers.iter().map(|l| Layer::zeros(l.fan_in(), l.fan_out())).collect()
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<F>) -> Array2<F> {
        let last = self.layers.len() - 1;
        let mut h = self.affine(0, x);
        if last > 0 {
            relu_in_place(&mut h);
        }
        for i in 1..=last {
            h = self.affine(i, h.view());
            if i < last {
                relu_in_place(&mut h);
            }
        }
        h
    }

    fn affine(&self, i: usize, x: ArrayView2<F>) -> Array2<F> {
        let layer = &self.layers[i];
        let mut z = x.dot(&layer.weight);
        z += &layer.bias;
        z
    }

    fn forward_trace(&self, x: ArrayView2<F>) -> Trace<F> {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_owned());
        for i in 0..last {
            let mut h = self.affine(i, inputs[i].view());
            relu_in_place(&mut h);
            inputs.push(h);
        }
        let output = self.affine(last, inputs[last].view());
        Trace { inputs, output }
    }

    /// Batch-mean squared error `sum((y - t)^2) / (B * out_dim)`.
    pub fn mse(&self, x: ArrayView2<F>, targets: ArrayView2<F>) -> F {
        mean_squared(&(self.forward(x) - targets))
    }

    /// Loss and exact gradient of the batch-mean squared error.
    pub fn backward(&self, x: ArrayView2<F>, targets: ArrayView2<F>) -> Result<(F, Vec<Layer<F>>)> {
        if x.nrows() == 0 {
            return Err(PddmError::EmptyDataset);
        }
        if x.ncols() != self.input_dim()
            || targets.ncols() != self.output_dim()
            || targets.nrows() != x.nrows()
        {
            return Err(PddmError::DimensionMismatch(format!(
                "batch {:?} / targets {:?} for network {} -> {}",
                x.dim(),
                targets.dim(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        let trace = self.forward_trace(x);
        let residual = trace.output - targets;
        let loss = mean_squared(&residual);
        let scale = F::lit(2.0) / F::from_usize(residual.len()).expect("batch size as float");
        let mut delta = residual * scale;
        let mut grads = self.zeros_like();
        for i in (0..self.layers.len()).rev() {
            let input = &trace.inputs[i];
            grads[i].weight = input.t().dot(&delta);
            grads[i].bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut upstream = delta.dot(&self.layers[i].weight.t());
                // input[i] is relu(z), so relu'(z) = [input > 0].
                Zip::from(&mut upstream).and(input).for_each(|d, &h| {
                    if h <= F::zero() {
                        *d = F::zero();
                    }
                });
                delta = upstream;
            }
        }
        Ok((loss, grads))
    }
}

fn relu_in_place<F: Real>(h: &mut Array2<F>) {
    h.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
}

fn mean_squared<F: Real>(r: &Array2<F>) -> F {
    let n = F::from_usize(r.len()).expect("element count as float");
    r.iter().map(|&v| v * v).sum::<F>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_width_rejected() {
        assert!(matches!(
            MlpParams::<f64>::zeros(3, &[4, 0], 2),
            Err(PddmError::InvalidArchitecture(_))
        ));
        assert!(MlpParams::<f64>::zeros(0, &[4], 2).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpParams::<f64>::zeros(3, &[5, 5], 2).unwrap();
        let y = net.forward(array![[1.0, -2.0, 3.0], [0.1, 0.2, 0.3]].view());
        assert_eq!(y, Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn hand_set_single_unit_network() {
        // 2 -> 1 -> 1 -> 1 with every weight chosen by hand.
        let mut net = MlpParams::<f64>::zeros(2, &[1, 1], 1).unwrap();
        net.layers[0].weight = array![[2.0], [-1.0]];
        net.layers[0].bias = array![0.5];
        net.layers[1].weight = array![[-3.0]];
        net.layers[1].bias = array![4.0];
        net.layers[2].weight = array![[1.5]];
        net.layers[2].bias = array![-0.25];
        // x = (1, 0.5): z1 = 2 - 0.5 + 0.5 = 2, h1 = 2; z2 = -6 + 4 = -2, h2 = 0; y = -0.25
        // x = (-1, 1):  z1 = -2 - 1 + 0.5 = -2.5, h1 = 0; z2 = 4, h2 = 4; y = 5.75
        let y = net.forward(array![[1.0, 0.5], [-1.0, 1.0]].view());
        assert_eq!(y, array![[-0.25], [5.75]]);
    }

    #[test]
    fn seeded_init_is_reproducible_and_bounded() {
        let a = MlpParams::<f64>::random(4, &[8], 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = MlpParams::<f64>::random(4, &[8], 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.layers[0].params().all(|p| p.abs() <= 0.5));
        assert_eq!(a.num_params(), 4 * 8 + 8 + 8 * 2 + 2);
        assert_eq!(a.hidden_widths(), vec![8]);
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let net = MlpParams::<f64>::random(3, &[6], 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let x = array![[0.3, -0.2, 0.9], [1.0, 0.0, -1.0]];
        let t = net.forward(x.view());
        let (loss, grads) = net.backward(x.view(), t.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|g| g.params().all(|&v| v == 0.0)));
    }

    #[test]
    fn duplicated_rows_do_not_change_gradient() {
        let net = MlpParams::<f64>::random(3, &[6], 2, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let x1 = array![[0.3, -0.2, 0.9]];
        let t1 = array![[1.0, -1.0]];
        let x2 = array![[0.3, -0.2, 0.9], [0.3, -0.2, 0.9]];
        let t2 = array![[1.0, -1.0], [1.0, -1.0]];
        let (l1, g1) = net.backward(x1.view(), t1.view()).unwrap();
        let (l2, g2) = net.backward(x2.view(), t2.view()).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        for (a, b) in g1.iter().zip(&g2) {
            for (p, q) in a.params().zip(b.params()) {
                assert!((p - q).abs() <= 1e-15 * p.abs().max(1.0));
            }
        }
    }

    #[test]
    fn backward_checks_shapes() {
        let net = MlpParams::<f64>::zeros(3, &[2], 1).unwrap();
        let x = Array2::<f64>::zeros((2, 3));
        assert!(matches!(
            net.backward(x.view(), Array2::zeros((2, 2)).view()),
            Err(PddmError::DimensionMismatch(_))
        ));
        assert!(net.backward(Array2::zeros((0, 3)).view(), Array2::zeros((0, 1)).view()).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let net = MlpParams::<f32>::random(2, &[4], 1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let x = array![[0.5f32, -0.5]];
        let (loss, grads) = net.backward(x.view(), array![[1.0f32]].view()).unwrap();
        assert!(loss.is_finite());
        assert_eq!(grads.len(), 2);
    }
}
