//! Dense feed-forward classifier with rectifier hidden layers and a softmax head.
//!
//! Weights are row-major `(out_dim, in_dim)`. All arithmetic is `f64`; the
//! reverse-mode input derivatives are exact derivatives of [`DenseNetwork::forward`]
//! (the rectifier derivative at exactly zero is taken as 0).

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One affine layer `z = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major, `out_dim * in_dim` entries.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot limit");
        let weights = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
        }
    }

    #[inline]
    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }

    /// `out = W x + b`
    pub fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.in_dim);
        out.clear();
        out.extend((0..self.out_dim).map(|o| self.biases[o] + dot(self.row(o), x)));
    }

    /// `out = W x` without the bias.
    pub fn apply_linear(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.out_dim).map(|o| dot(self.row(o), x)));
    }

    /// Row-vector product `g W`, i.e. back-propagates an output-side gradient
    /// of length `out_dim` to the input side.
    pub fn backprop_row(&self, g: &[f64], out: &mut [f64]) {
        debug_assert_eq!(g.len(), self.out_dim);
        debug_assert_eq!(out.len(), self.in_dim);
        out.fill(0.0);
        for (o, &go) in g.iter().enumerate() {
            if go != 0.0 {
                axpy(go, self.row(o), out);
            }
        }
    }

    /// `G W` for a row-major `rows x out_dim` matrix `G`. Each weight row is
    /// streamed once for all rows of `G`.
    pub fn backprop_rows(&self, g: &[f64], rows: usize) -> Vec<f64> {
        debug_assert_eq!(g.len(), rows * self.out_dim);
        let mut out = vec![0.0; rows * self.in_dim];
        for o in 0..self.out_dim {
            let w = self.row(o);
            for (r, dst) in out.chunks_exact_mut(self.in_dim).enumerate() {
                let go = g[r * self.out_dim + o];
                if go != 0.0 {
                    axpy(go, w, dst);
                }
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }
}

/// Four interleaved partial sums, so the loop is not bound by add latency.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

/// Which output the input derivatives are taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTarget {
    /// Softmax class posterior.
    #[default]
    Posterior,
    /// Pre-softmax class scores.
    Logits,
}

/// A `K x d` row-major matrix of input derivatives (row `k` is `dF_k/dx`).
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Jacobian {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.cols + i]
    }
}

/// Pre-activations of every layer from one forward pass.
#[derive(Debug, Clone, Default)]
pub(crate) struct Trace {
    /// `pre[l]` is layer `l`'s affine output.
    pub pre: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork {
    layer_dims: Vec<usize>,
    layers: Vec<Dense>,
}

impl DenseNetwork {
    fn check_dims(layer_dims: &[usize]) -> Result<()> {
        if layer_dims.len() < 2 {
            return Err(Error::Config(
                "a network needs at least input and output dimensions".into(),
            ));
        }
        if layer_dims.contains(&0) {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        Self::check_dims(layer_dims)?;
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    pub fn glorot<R: Rng + ?Sized>(layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        Self::check_dims(layer_dims)?;
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], rng))
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    /// Assembles a network from explicit layers, checking that they chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("network has no layers".into()))?;
        let mut layer_dims = vec![first.in_dim];
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim != *layer_dims.last().unwrap() {
                return Err(Error::Config(format!(
                    "layer {i} expects {} inputs but the previous layer emits {}",
                    l.in_dim,
                    layer_dims.last().unwrap()
                )));
            }
            if l.weights.len() != l.in_dim * l.out_dim || l.biases.len() != l.out_dim {
                return Err(Error::Config(format!(
                    "layer {i}: weight/bias lengths do not match {}x{}",
                    l.out_dim, l.in_dim
                )));
            }
            layer_dims.push(l.out_dim);
        }
        Self::check_dims(&layer_dims)?;
        Ok(Self { layer_dims, layers })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn class_count(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::InputShape {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("input contains non-finite values".into()));
        }
        Ok(())
    }

    fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.class_count() {
            return Err(Error::Argument(format!(
                "class index {class} out of range for {} classes",
                self.class_count()
            )));
        }
        Ok(())
    }

    /// Forward pass recording each layer's pre-activation. Hidden layers are
    /// rectified; the last layer is left linear.
    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.out_dim);
            layer.apply(&act, &mut z);
            if l < last {
                act.clone_from(&z);
                relu_in_place(&mut act);
            }
            pre.push(z);
        }
        Trace { pre }
    }

    /// Linear output of the last layer (class scores for a classifier).
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.logits_unchecked(x))
    }

    pub(crate) fn logits_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut act = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&act, &mut next);
            if l < last {
                relu_in_place(&mut next);
            }
            std::mem::swap(&mut act, &mut next);
        }
        act
    }

    /// Class posterior `softmax(logits(x))`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// `d posterior[class] / d x`.
    pub fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        self.input_gradient_of(x, class, OutputTarget::Posterior)
    }

    pub fn input_gradient_of(
        &self,
        x: &[f64],
        class: usize,
        target: OutputTarget,
    ) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.check_class(class)?;
        let jac = self.input_jacobian_unchecked(x, target);
        Ok(jac.row(class).to_vec())
    }

    /// Derivatives of every class output with respect to every input.
    pub fn input_jacobian(&self, x: &[f64], target: OutputTarget) -> Result<Jacobian> {
        self.check_input(x)?;
        Ok(self.input_jacobian_unchecked(x, target))
    }

    pub(crate) fn input_jacobian_unchecked(&self, x: &[f64], target: OutputTarget) -> Jacobian {
        let trace = self.trace(x);
        let seed = output_seed(trace.pre.last().unwrap(), target);
        let k = self.class_count();
        let g = self.backprop_seed(&trace, seed, k, 0);
        Jacobian {
            rows: k,
            cols: self.input_dim(),
            data: g,
        }
    }

    /// Propagates a `rows x K` output-side matrix down to the input of layer
    /// `stop` (0 = network input). Returns a `rows x layer_dims[stop]` matrix.
    fn backprop_seed(&self, trace: &Trace, mut g: Vec<f64>, rows: usize, stop: usize) -> Vec<f64> {
        let last = self.layers.len() - 1;
        for l in (stop..=last).rev() {
            let layer = &self.layers[l];
            let mut down = layer.backprop_rows(&g, rows);
            if l > stop {
                // Rectifier of the layer below.
                let below = &trace.pre[l - 1];
                for r in 0..rows {
                    for (gi, &z) in down[r * layer.in_dim..(r + 1) * layer.in_dim]
                        .iter_mut()
                        .zip(below)
                    {
                        if z <= 0.0 {
                            *gi = 0.0;
                        }
                    }
                }
            }
            g = down;
        }
        g
    }

    /// Average input Jacobian over the right-endpoint Riemann points
    /// `from + (s/steps) (to - from)`, `s = 1..=steps`.
    ///
    /// The first layer is affine along the straight path, so its
    /// pre-activation is interpolated directly and the averaged back-propagated
    /// gradient is multiplied through the first weight matrix once.
    pub fn mean_path_jacobian(
        &self,
        from: &[f64],
        to: &[f64],
        steps: usize,
        target: OutputTarget,
    ) -> Result<Jacobian> {
        self.check_input(from)?;
        self.check_input(to)?;
        if steps == 0 {
            return Err(Error::Config("path integral needs at least one step".into()));
        }
        Ok(self.mean_path_jacobian_unchecked(from, to, steps, target))
    }

    pub(crate) fn mean_path_jacobian_unchecked(
        &self,
        from: &[f64],
        to: &[f64],
        steps: usize,
        target: OutputTarget,
    ) -> Jacobian {
        let k = self.class_count();
        let first = &self.layers[0];
        let mut z0 = Vec::new();
        first.apply(from, &mut z0);
        let delta: Vec<f64> = to.iter().zip(from).map(|(t, f)| t - f).collect();
        let mut dz = Vec::new();
        first.apply_linear(&delta, &mut dz);

        let h = first.out_dim;
        let mut acc = vec![0.0; k * h];
        let mut trace = Trace {
            pre: vec![Vec::new(); self.layers.len()],
        };
        let last = self.layers.len() - 1;
        // Along the path the network is piecewise linear: while the rectifier
        // pattern stays fixed, d logits / d z1 is constant and only the output
        // seed changes. Seeds are summed per pattern and multiplied once.
        let mut pattern: Vec<bool> = Vec::new();
        let mut prev_pattern: Vec<bool> = Vec::new();
        let mut logit_jac: Vec<f64> = Vec::new();
        let mut seed_sum = vec![0.0; k * k];
        let flush = |acc: &mut [f64], seed_sum: &mut [f64], logit_jac: &[f64]| {
            for r in 0..k {
                for c in 0..k {
                    let w = seed_sum[r * k + c];
                    if w != 0.0 {
                        axpy(w, &logit_jac[c * h..(c + 1) * h], &mut acc[r * h..(r + 1) * h]);
                    }
                }
            }
            seed_sum.iter_mut().for_each(|v| *v = 0.0);
        };
        for s in 1..=steps {
            let t = s as f64 / steps as f64;
            let z: Vec<f64> = z0.iter().zip(&dz).map(|(a, b)| a + t * b).collect();
            // Forward the remaining layers from the interpolated first layer.
            let mut act = z.clone();
            trace.pre[0] = z;
            for l in 1..=last {
                relu_in_place(&mut act);
                let mut next = Vec::with_capacity(self.layers[l].out_dim);
                self.layers[l].apply(&act, &mut next);
                act.clone_from(&next);
                trace.pre[l] = next;
            }
            pattern.clear();
            pattern.extend(trace.pre[..last].iter().flatten().map(|&v| v > 0.0));
            if logit_jac.is_empty() || pattern != prev_pattern {
                if !logit_jac.is_empty() {
                    flush(&mut acc, &mut seed_sum, &logit_jac);
                }
                let identity = output_seed(&trace.pre[last], OutputTarget::Logits);
                logit_jac = if last == 0 {
                    identity
                } else {
                    let mut g = self.backprop_seed(&trace, identity, k, 1);
                    for r in 0..k {
                        for (gi, &zv) in g[r * h..(r + 1) * h].iter_mut().zip(&trace.pre[0]) {
                            if zv <= 0.0 {
                                *gi = 0.0;
                            }
                        }
                    }
                    g
                };
                std::mem::swap(&mut prev_pattern, &mut pattern);
            }
            let seed = output_seed(&trace.pre[last], target);
            for (a, v) in seed_sum.iter_mut().zip(&seed) {
                *a += v;
            }
        }
        flush(&mut acc, &mut seed_sum, &logit_jac);
        let inv = 1.0 / steps as f64;
        acc.iter_mut().for_each(|a| *a *= inv);

        let d = self.input_dim();
        Jacobian {
            rows: k,
            cols: d,
            data: first.backprop_rows(&acc, k),
        }
    }

    /// Back-propagates `d loss / d output` (with respect to the last layer's
    /// linear output) into `grads`.
    pub(crate) fn accumulate_gradients(
        &self,
        x: &[f64],
        trace: &Trace,
        d_out: &[f64],
        grads: &mut [Dense],
    ) {
        let last = self.layers.len() - 1;
        let mut g = d_out.to_vec();
        let mut act_below = Vec::new();
        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            let input: &[f64] = if l == 0 {
                x
            } else {
                act_below.clear();
                act_below.extend(trace.pre[l - 1].iter().map(|&z| z.max(0.0)));
                &act_below
            };
            let gl = &mut grads[l];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                gl.biases[o] += go;
                axpy(go, input, &mut gl.weights[o * layer.in_dim..(o + 1) * layer.in_dim]);
            }
            if l > 0 {
                let mut down = vec![0.0; layer.in_dim];
                layer.backprop_row(&g, &mut down);
                for (gi, &z) in down.iter_mut().zip(&trace.pre[l - 1]) {
                    if z <= 0.0 {
                        *gi = 0.0;
                    }
                }
                g = down;
            }
        }
    }
}

/// `K x K` derivative of the chosen output with respect to the logits.
fn output_seed(logits: &[f64], target: OutputTarget) -> Vec<f64> {
    let k = logits.len();
    let mut seed = vec![0.0; k * k];
    match target {
        OutputTarget::Logits => {
            for i in 0..k {
                seed[i * k + i] = 1.0;
            }
        }
        OutputTarget::Posterior => {
            let p = softmax(logits);
            for i in 0..k {
                for j in 0..k {
                    let kron = if i == j { 1.0 } else { 0.0 };
                    seed[i * k + j] = p[i] * (kron - p[j]);
                }
            }
        }
    }
    seed
}
