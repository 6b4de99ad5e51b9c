//! Dense feed-forward network with ReLU hidden layers and a linear output layer.
//!
//! Weights are stored as `in x out` matrices so a batch of row-vector inputs
//! propagates as `X W + b`. Gradients share the parameter layout ([`Dense`] list),
//! which lets the optimizer walk parameters and gradients in lockstep.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: Array2::zeros((in_dim, out_dim)),
            bias: Array1::zeros(out_dim),
        }
    }

    /// Uniform fan-in initialization, `U(-1/sqrt(in), 1/sqrt(in))` for weights and biases.
    pub fn fan_in_uniform<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim.max(1) as f64).sqrt();
        let weight = Array2::from_shape_fn((in_dim, out_dim), |_| rng.random_range(-bound..=bound));
        let bias = Array1::from_shape_fn(out_dim, |_| rng.random_range(-bound..=bound));
        Self { weight, bias }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.in_dim(), self.out_dim())
    }
}

/// Network parameters: hidden layers use ReLU, the last layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Parameter gradients, laid out exactly like the [`Mlp`] they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

/// Activations retained by [`Mlp::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[k]` is the input to layer `k` (post-ReLU output of layer `k-1`).
    inputs: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

impl Mlp {
    /// Builds a network with layer widths `sizes = [in, h1, ..., out]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "network needs at least input and output widths, all positive; got {sizes:?}"
            )));
        }
        let layers = sizes
            .windows(2)
            .map(|w| Dense::fan_in_uniform(w[0], w[1], rng))
            .collect();
        Ok(Self { layers })
    }

    /// `hidden` layers of width `width` between `input` and `output`.
    pub fn with_hidden<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        width: usize,
        output: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden + 2);
        sizes.push(input);
        sizes.extend(std::iter::repeat_n(width, hidden));
        sizes.push(output);
        Self::new(&sizes, rng)
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network has no layers".into()));
        }
        for l in &layers {
            Error::check_len("layer bias", l.out_dim(), l.bias.len())?;
        }
        for pair in layers.windows(2) {
            Error::check_len("layer chaining", pair[0].out_dim(), pair[1].in_dim())?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Multiplies the output layer by `factor` (small factors give a near-uniform
    /// initial policy).
    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.layers.last_mut().expect("non-empty");
        last.weight *= factor;
        last.bias *= factor;
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("mlp input", self.input_dim(), input.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row view");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Row-wise forward pass over a `batch x input_dim` matrix.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Error::check_len("mlp input", self.input_dim(), x.ncols())?;
        let last = self.layers.len() - 1;
        let mut h = affine(&self.layers[0], x);
        if last > 0 {
            relu_inplace(&mut h);
        }
        for (k, layer) in self.layers.iter().enumerate().skip(1) {
            h = affine(layer, h.view());
            if k < last {
                relu_inplace(&mut h);
            }
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        Error::check_len("mlp input", self.input_dim(), x.ncols())?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = affine(layer, h.view());
            if k < last {
                relu_inplace(&mut z);
            }
            inputs.push(h);
            h = z;
        }
        Ok(ForwardCache { inputs, output: h })
    }

    /// Reverse-mode gradients of `sum(output * upstream)` over the cached batch.
    pub fn backward(&self, cache: &ForwardCache, upstream: ArrayView2<f64>) -> Result<MlpGrads> {
        Error::check_len("upstream width", self.output_dim(), upstream.ncols())?;
        Error::check_len("upstream rows", cache.output.nrows(), upstream.nrows())?;
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.to_owned();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[k];
            let weight = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut back = delta.dot(&layer.weight.t());
                // `input` is the post-ReLU activation of layer k-1.
                ndarray::Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        Ok(MlpGrads { layers: grads })
    }

    /// Single-sample gradients of `output . upstream`.
    pub fn gradients(&self, input: &[f64], upstream: &[f64]) -> Result<MlpGrads> {
        Error::check_len("mlp input", self.input_dim(), input.len())?;
        Error::check_len("upstream width", self.output_dim(), upstream.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row view");
        let g = ArrayView2::from_shape((1, upstream.len()), upstream).expect("row view");
        let cache = self.forward_cached(x)?;
        self.backward(&cache, g)
    }

    /// All parameters in layer order (weights row-major, then biases).
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        Error::check_len("flat parameters", self.num_params(), flat.len())?;
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weight.iter_mut().for_each(|w| *w = it.next().expect("len checked"));
            l.bias.iter_mut().for_each(|b| *b = it.next().expect("len checked"));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.layers)
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }
}

impl MlpGrads {
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.layers)
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight *= factor;
            l.bias *= factor;
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weight.iter().chain(l.bias.iter()).map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

fn affine(layer: &Dense, x: ArrayView2<f64>) -> Array2<f64> {
    let mut z = x.dot(&layer.weight);
    z += &layer.bias;
    z
}

fn relu_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
        .collect()
}

fn all_finite(layers: &[Dense]) -> bool {
    layers
        .iter()
        .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
}
