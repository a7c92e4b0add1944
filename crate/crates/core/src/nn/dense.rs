use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply<T: Scalar>(self, z: &mut Array2<T>) {
        if self == Activation::Relu {
            z.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
        }
    }
}

/// Shape and flags of a fully-connected network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    /// No activation after the last layer.
    #[serde(default = "default_true")]
    pub final_linear: bool,
    #[serde(default = "default_true")]
    pub use_bias: bool,
}

fn default_true() -> bool {
    true
}

impl NetSpec {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation) -> Self {
        Self {
            layer_sizes,
            activation,
            final_linear: true,
            use_bias: true,
        }
    }

    /// A single bias-free linear map `in -> out`.
    pub fn linear_no_bias(input: usize, output: usize) -> Self {
        Self {
            layer_sizes: vec![input, output],
            activation: Activation::Identity,
            final_linear: true,
            use_bias: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::config("layer_sizes", "need at least an input and an output size"));
        }
        if let Some(i) = self.layer_sizes.iter().position(|&d| d == 0) {
            return Err(Error::config(format!("layer_sizes[{i}]"), "sizes must be >= 1"));
        }
        Ok(())
    }

    /// `Σ d_k (d_{k-1} + [bias])`.
    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[1] * (w[0] + usize::from(self.use_bias)))
            .sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer<T> {
    pub(crate) weight: Array2<T>,
    pub(crate) bias: Option<Array1<T>>,
}

/// A fully-connected network. Weights are stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet<T> {
    pub(crate) spec: NetSpec,
    pub(crate) layers: Vec<Layer<T>>,
    pub(crate) seed: u64,
}

/// Layer activations kept from a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `acts[0]` is the input, `acts[k]` the output of layer `k`.
    acts: Vec<Array2<T>>,
}

impl<T> ForwardCache<T> {
    pub fn output(&self) -> &Array2<T> {
        self.acts.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads<T> {
    pub weight: Array2<T>,
    pub bias: Option<Array1<T>>,
}

/// Parameter gradients mirroring a [`DenseNet`], plus the optional input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle<T> {
    pub layers: Vec<LayerGrads<T>>,
    /// `batch × d₀`, one row per sample.
    pub input: Option<Array2<T>>,
}

impl<T: Scalar> DenseNet<T> {
    /// Glorot-uniform weights on `±√(6/(d_in+d_out))`, zero biases.
    pub fn init_glorot(spec: NetSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    T::of(rng.gen_range(-limit..limit))
                });
                let bias = spec.use_bias.then(|| Array1::zeros(fan_out));
                Layer { weight, bias }
            })
            .collect();
        Ok(Self { spec, layers, seed })
    }

    /// Builds a network from explicit `(weight, bias)` pairs.
    pub fn from_layers(spec: NetSpec, params: Vec<(Array2<T>, Option<Array1<T>>)>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.layer_sizes.len() - 1 {
            return Err(Error::dim("layer count", spec.layer_sizes.len() - 1, params.len()));
        }
        let mut layers = Vec::with_capacity(params.len());
        for (k, (weight, bias)) in params.into_iter().enumerate() {
            let want = (spec.layer_sizes[k + 1], spec.layer_sizes[k]);
            if weight.dim() != want {
                return Err(Error::dim(format!("layer {k} weight"), format!("{want:?}"), format!("{:?}", weight.dim())));
            }
            match (&bias, spec.use_bias) {
                (Some(b), true) if b.len() == want.0 => {}
                (None, false) => {}
                _ => return Err(Error::config(format!("layer {k} bias"), "bias presence or length disagrees with spec")),
            }
            layers.push(Layer { weight, bias });
        }
        Ok(Self { spec, layers, seed: 0 })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn weight(&self, layer: usize) -> &Array2<T> {
        &self.layers[layer].weight
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut Array2<T> {
        &mut self.layers[layer].weight
    }

    pub fn bias(&self, layer: usize) -> Option<&Array1<T>> {
        self.layers[layer].bias.as_ref()
    }

    pub fn bias_mut(&mut self, layer: usize) -> Option<&mut Array1<T>> {
        self.layers[layer].bias.as_mut()
    }

    fn activates(&self, layer: usize) -> bool {
        !(self.spec.final_linear && layer + 1 == self.layers.len())
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        let input = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::dim("network input", self.input_dim(), e))?;
        Ok(self.forward_batch(input)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        Ok(self.forward_cached(x)?.acts.pop().unwrap())
    }

    pub fn forward_cached(&self, x: ArrayView2<T>) -> Result<ForwardCache<T>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), x.ncols()));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.as_standard_layout().into_owned());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = acts[k].dot(&layer.weight.t());
            if !z.is_standard_layout() {
                z = z.as_standard_layout().into_owned();
            }
            if let Some(b) = &layer.bias {
                z += b;
            }
            if self.activates(k) {
                self.spec.activation.apply(&mut z);
            }
            acts.push(z);
        }
        Ok(ForwardCache { acts })
    }

    /// Reverse pass. `upstream` is `∂L/∂output`, one row per sample; parameter
    /// gradients are summed over the batch. ReLU′(0) is taken as 0.
    pub fn backward(&self, cache: &ForwardCache<T>, upstream: ArrayView2<T>, want_input: bool) -> Result<GradientBundle<T>> {
        let out = cache.output();
        if upstream.dim() != out.dim() {
            return Err(Error::dim("upstream gradient", format!("{:?}", out.dim()), format!("{:?}", upstream.dim())));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut grad = upstream.to_owned();
        for k in (0..self.layers.len()).rev() {
            if self.activates(k) && self.spec.activation == Activation::Relu {
                ndarray::Zip::from(&mut grad)
                    .and(&cache.acts[k + 1])
                    .for_each(|g, &a| {
                        if a <= T::zero() {
                            *g = T::zero();
                        }
                    });
            }
            let weight = grad.t().dot(&cache.acts[k]);
            let bias = self.layers[k].bias.as_ref().map(|_| grad.sum_axis(Axis(0)));
            layers.push(LayerGrads { weight, bias });
            if k > 0 || want_input {
                grad = grad.dot(&self.layers[k].weight);
            }
        }
        layers.reverse();
        Ok(GradientBundle {
            layers,
            input: want_input.then_some(grad),
        })
    }

    /// Forward then backward over a batch.
    pub fn backward_batch(&self, inputs: ArrayView2<T>, upstream: ArrayView2<T>) -> Result<GradientBundle<T>> {
        if inputs.nrows() == 0 {
            return Err(Error::dim("batch size", ">= 1", 0));
        }
        let cache = self.forward_cached(inputs)?;
        self.backward(&cache, upstream, true)
    }

    /// Converts parameters to another scalar type.
    pub fn cast<U: Scalar>(&self) -> DenseNet<U> {
        DenseNet {
            spec: self.spec.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weight: l.weight.mapv(|v| U::of(v.as_f64())),
                    bias: l.bias.as_ref().map(|b| b.mapv(|v| U::of(v.as_f64()))),
                })
                .collect(),
            seed: self.seed,
        }
    }
}

impl<T: Scalar> GradientBundle<T> {
    pub fn zeros_like(net: &DenseNet<T>) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weight: Array2::zeros(l.weight.dim()),
                    bias: l.bias.as_ref().map(|b| Array1::zeros(b.len())),
                })
                .collect(),
            input: None,
        }
    }
}

impl<T: Scalar> Parameters<T> for DenseNet<T> {
    fn visit(&self, f: &mut dyn FnMut(&[T])) {
        for l in &self.layers {
            f(l.weight.as_slice().expect("standard layout"));
            if let Some(b) = &l.bias {
                f(b.as_slice().expect("standard layout"));
            }
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        for l in &mut self.layers {
            f(l.weight.as_slice_mut().expect("standard layout"));
            if let Some(b) = &mut l.bias {
                f(b.as_slice_mut().expect("standard layout"));
            }
        }
    }
}

impl<T: Scalar> Parameters<T> for GradientBundle<T> {
    fn visit(&self, f: &mut dyn FnMut(&[T])) {
        for l in &self.layers {
            f(l.weight.as_slice().expect("standard layout"));
            if let Some(b) = &l.bias {
                f(b.as_slice().expect("standard layout"));
            }
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        for l in &mut self.layers {
            f(l.weight.as_slice_mut().expect("standard layout"));
            if let Some(b) = &mut l.bias {
                f(b.as_slice_mut().expect("standard layout"));
            }
        }
    }
}
