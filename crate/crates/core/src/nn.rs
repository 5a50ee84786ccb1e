//! Dense feed-forward network with exact reverse-mode gradients.
//!
//! The same [`Mlp`] type backs the PPO actor and critic and the supervised
//! duty-cycle network. Weights are stored per layer in row-major
//! `(out × in)` order, so `weights[o * in_dim + i]` connects input `i` to
//! output neuron `o`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    #[inline]
    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }
}

/// Multi-layer perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    layers: Vec<Layer>,
}

/// Per-layer pre- and post-activations recorded by [`Mlp::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` is the output of layer `l`.
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Per-layer values of a minibatch, each stored row-major `batch × width`.
#[derive(Debug, Clone)]
pub struct BatchCache {
    batch: usize,
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl BatchCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Network output of sample `s`.
    pub fn output(&self, s: usize) -> &[f64] {
        let out = self.activations.last().expect("non-empty");
        let w = out.len() / self.batch.max(1);
        &out[s * w..(s + 1) * w]
    }
}

/// Gradient of a scalar loss with respect to every parameter of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<Layer>,
}

impl ParamGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values().map(|g| g * g).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|g| *g *= factor);
    }

    pub fn add_assign(&mut self, other: &ParamGrads) -> Result<()> {
        if !same_shape(&self.layers, &other.layers) {
            return Err(Error::Config("gradient shapes differ".into()));
        }
        for (g, o) in self.values_mut().zip(other.values()) {
            *g += o;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|g| g.is_finite())
    }

    /// Largest elementwise relative difference, with `floor` guarding tiny denominators.
    pub fn max_relative_error(&self, other: &ParamGrads, floor: f64) -> f64 {
        self.values()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max)
    }
}

fn same_shape(a: &[Layer], b: &[Layer]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| x.in_dim == y.in_dim && x.out_dim == y.out_dim)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        sum += a[i] * b[i];
    }
    sum
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Mlp {
    /// Builds a network with Glorot-uniform weights (bound `sqrt(6 / (fan_in + fan_out))`)
    /// and zero biases. The same seed always yields the same parameters.
    pub fn new(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, hidden_activation, output_activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let bound = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        Ok(net)
    }

    /// All-zero network of the given shape.
    pub fn zeros(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "an MLP needs at least an input and an output layer, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer sizes must be positive, got {layer_sizes:?}"
            )));
        }
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer::zeros(w[0], w[1]))
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden_activation,
            output_activation,
            layers,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated at construction")
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn activation_for(&self, layer_index: usize) -> Activation {
        if layer_index + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "mlp input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        ensure_finite("mlp input", input)
    }

    /// Forward pass that keeps everything needed by [`Mlp::backward`].
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(li);
            let x = activations.last().expect("non-empty");
            let z: Vec<f64> = (0..layer.out_dim)
                .map(|o| layer.biases[o] + dot(layer.row(o), x))
                .collect();
            let a: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
            pre_activations.push(z);
            activations.push(a);
        }
        let output = activations.last().expect("non-empty").clone();
        Ok((
            output,
            ForwardCache {
                activations,
                pre_activations,
            },
        ))
    }

    /// Forward pass without a cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(li);
            x = (0..layer.out_dim)
                .map(|o| act.apply(layer.biases[o] + dot(layer.row(o), &x)))
                .collect();
        }
        Ok(x)
    }

    /// Reverse-mode gradients of the scalar whose derivative with respect to
    /// the network output is `output_grad`.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<ParamGrads> {
        let mut grads = ParamGrads::zeros_like(self);
        self.backward_accumulate(cache, output_grad, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Mlp::backward`] but adds into an existing gradient buffer.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        grads: &mut ParamGrads,
    ) -> Result<()> {
        if cache.pre_activations.len() != self.layers.len()
            || cache.activations.len() != self.layers.len() + 1
        {
            return Err(Error::Dimension {
                context: "forward cache layers",
                expected: self.layers.len(),
                got: cache.pre_activations.len(),
            });
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::Dimension {
                context: "output gradient",
                expected: self.output_dim(),
                got: output_grad.len(),
            });
        }
        if !same_shape(&grads.layers, &self.layers) {
            return Err(Error::Config("gradient buffer shape differs from network".into()));
        }
        for (li, layer) in self.layers.iter().enumerate() {
            if cache.activations[li].len() != layer.in_dim
                || cache.pre_activations[li].len() != layer.out_dim
            {
                return Err(Error::Dimension {
                    context: "forward cache width",
                    expected: layer.out_dim,
                    got: cache.pre_activations[li].len(),
                });
            }
        }

        let last = self.layers.len() - 1;
        let act = self.activation_for(last);
        let mut delta: Vec<f64> = output_grad
            .iter()
            .zip(&cache.pre_activations[last])
            .zip(&cache.activations[last + 1])
            .map(|((g, &z), &a)| g * act.derivative(z, a))
            .collect();

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &cache.activations[li];
            let g = &mut grads.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, input, &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim]);
                }
                g.biases[o] += d;
            }
            if li == 0 {
                break;
            }
            let mut upstream = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, layer.row(o), &mut upstream);
                }
            }
            let prev_act = self.activation_for(li - 1);
            delta = upstream
                .iter()
                .zip(&cache.pre_activations[li - 1])
                .zip(&cache.activations[li])
                .map(|((u, &z), &a)| u * prev_act.derivative(z, a))
                .collect();
        }
        Ok(())
    }

    /// Forward pass over a minibatch. Each weight row is read once for the
    /// whole batch, which is what makes the 256-wide networks affordable.
    pub fn forward_batch(&self, inputs: &[&[f64]]) -> Result<BatchCache> {
        let n = inputs.len();
        let mut first = Vec::with_capacity(n * self.input_dim());
        for x in inputs {
            self.check_input(x)?;
            first.extend_from_slice(x);
        }
        let mut activations = vec![first];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(li);
            let x = activations.last().expect("non-empty");
            let mut z = vec![0.0; n * layer.out_dim];
            for o in 0..layer.out_dim {
                let row = layer.row(o);
                for s in 0..n {
                    z[s * layer.out_dim + o] =
                        layer.biases[o] + dot(row, &x[s * layer.in_dim..(s + 1) * layer.in_dim]);
                }
            }
            let a = z.iter().map(|&v| act.apply(v)).collect();
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(BatchCache {
            batch: n,
            activations,
            pre_activations,
        })
    }

    /// Batched counterpart of [`Mlp::backward_accumulate`]; `output_grads` is
    /// row-major `batch × output_dim`. Accumulation order per parameter matches
    /// calling the single-sample version once per row.
    pub fn backward_batch_accumulate(
        &self,
        cache: &BatchCache,
        output_grads: &[f64],
        grads: &mut ParamGrads,
    ) -> Result<()> {
        let n = cache.batch;
        if cache.activations.len() != self.layers.len() + 1
            || cache.pre_activations.len() != self.layers.len()
        {
            return Err(Error::Dimension {
                context: "batch cache layers",
                expected: self.layers.len(),
                got: cache.pre_activations.len(),
            });
        }
        if output_grads.len() != n * self.output_dim() {
            return Err(Error::Dimension {
                context: "batch output gradient",
                expected: n * self.output_dim(),
                got: output_grads.len(),
            });
        }
        if !same_shape(&grads.layers, &self.layers) {
            return Err(Error::Config("gradient buffer shape differs from network".into()));
        }
        for (li, layer) in self.layers.iter().enumerate() {
            if cache.activations[li].len() != n * layer.in_dim
                || cache.pre_activations[li].len() != n * layer.out_dim
            {
                return Err(Error::Dimension {
                    context: "batch cache width",
                    expected: n * layer.out_dim,
                    got: cache.pre_activations[li].len(),
                });
            }
        }

        let last = self.layers.len() - 1;
        let act = self.activation_for(last);
        let mut delta: Vec<f64> = output_grads
            .iter()
            .zip(&cache.pre_activations[last])
            .zip(&cache.activations[last + 1])
            .map(|((g, &z), &a)| g * act.derivative(z, a))
            .collect();

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let (ind, outd) = (layer.in_dim, layer.out_dim);
            let input = &cache.activations[li];
            let g = &mut grads.layers[li];
            for o in 0..outd {
                let g_row = &mut g.weights[o * ind..(o + 1) * ind];
                for s in 0..n {
                    let d = delta[s * outd + o];
                    if d != 0.0 {
                        axpy(d, &input[s * ind..(s + 1) * ind], g_row);
                    }
                    g.biases[o] += d;
                }
            }
            if li == 0 {
                break;
            }
            let mut upstream = vec![0.0; n * ind];
            for o in 0..outd {
                let row = layer.row(o);
                for s in 0..n {
                    let d = delta[s * outd + o];
                    if d != 0.0 {
                        axpy(d, row, &mut upstream[s * ind..(s + 1) * ind]);
                    }
                }
            }
            let prev_act = self.activation_for(li - 1);
            delta = upstream
                .iter()
                .zip(&cache.pre_activations[li - 1])
                .zip(&cache.activations[li])
                .map(|((u, &z), &a)| u * prev_act.derivative(z, a))
                .collect();
        }
        Ok(())
    }

    /// Gradient-descent step `θ ← θ − lr · grad`.
    pub fn apply_update(&mut self, grads: &ParamGrads, learning_rate: f64) -> Result<()> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if !same_shape(&grads.layers, &self.layers) {
            return Err(Error::Config("gradient shape differs from network".into()));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("parameter gradients".into()));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            axpy(-learning_rate, &g.weights, &mut layer.weights);
            axpy(-learning_rate, &g.biases, &mut layer.biases);
        }
        Ok(())
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: Mlp = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::MissingArtifact(format!("{}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        let expected = Self::zeros(
            &self.layer_sizes,
            self.hidden_activation,
            self.output_activation,
        )
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let shapes_ok = same_shape(&expected.layers, &self.layers)
            && self.layers.iter().all(|l| {
                l.weights.len() == l.in_dim * l.out_dim && l.biases.len() == l.out_dim
            });
        if !shapes_ok {
            return Err(Error::Checkpoint(
                "parameter arrays do not match layer_sizes".into(),
            ));
        }
        if !self.params_finite() {
            return Err(Error::Checkpoint("non-finite parameters".into()));
        }
        Ok(())
    }
}

fn param_mut(net: &mut Mlp, layer: usize, k: usize) -> &mut f64 {
    let l = &mut net.layers[layer];
    let n_w = l.weights.len();
    if k < n_w {
        &mut l.weights[k]
    } else {
        &mut l.biases[k - n_w]
    }
}

fn param_mut_grads(grads: &mut ParamGrads, layer: usize, k: usize) -> &mut f64 {
    let l = &mut grads.layers[layer];
    let n_w = l.weights.len();
    if k < n_w {
        &mut l.weights[k]
    } else {
        &mut l.biases[k - n_w]
    }
}

/// Central-difference gradient estimate of `loss(net(input))` with respect to
/// every parameter. Used as an independent check on [`Mlp::backward`].
pub fn finite_diff_grad<F>(net: &Mlp, loss: F, input: &[f64], eps: f64) -> Result<ParamGrads>
where
    F: Fn(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let mut probe = net.clone();
    let mut grads = ParamGrads::zeros_like(net);
    for li in 0..net.layers.len() {
        let n_w = net.layers[li].weights.len();
        let n_b = net.layers[li].biases.len();
        for k in 0..n_w + n_b {
            let original = *param_mut(&mut probe, li, k);
            *param_mut(&mut probe, li, k) = original + eps;
            let plus = loss(&probe.predict(input)?);
            *param_mut(&mut probe, li, k) = original - eps;
            let minus = loss(&probe.predict(input)?);
            *param_mut(&mut probe, li, k) = original;
            *param_mut_grads(&mut grads, li, k) = (plus - minus) / (2.0 * eps);
        }
    }
    Ok(grads)
}
