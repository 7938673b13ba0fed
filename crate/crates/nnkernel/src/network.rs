use rand::Rng;

use crate::error::{NnError, Result};
use crate::init::Init;
use crate::ops::{activation, conv, dense, norm, pool};
use crate::spec::{Activation, LayerSpec};
use crate::tensor::Tensor;

/// A trainable tensor together with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active, batchnorm uses (and updates) batch statistics,
    /// activations are cached for backward.
    Train,
    /// Deterministic: dropout off, batchnorm uses running statistics.
    Eval,
}

#[derive(Clone, Debug)]
enum Cache {
    Dense { x: Tensor },
    Conv { x: Tensor },
    Act { x: Tensor, y: Tensor },
    Dropout { mask: Vec<f64> },
    BatchNorm { xhat: Tensor, inv_std: Vec<f64> },
    Pool { in_shape: Vec<usize>, arg: Vec<usize> },
    Flatten { in_shape: Vec<usize> },
}

#[derive(Clone, Debug)]
struct Layer {
    spec: LayerSpec,
    params: Vec<Param>,
    /// Non-trainable state (batchnorm running mean/var).
    buffers: Vec<Tensor>,
    cache: Option<Cache>,
}

impl Layer {
    fn new<R: Rng + ?Sized>(spec: &LayerSpec, init: Init, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut params = Vec::new();
        let mut buffers = Vec::new();
        match *spec {
            LayerSpec::Dense { inputs, outputs } => {
                let mut w = Tensor::zeros(&[inputs, outputs]);
                init.fill(w.data_mut(), inputs, rng);
                params.push(Param::new(w));
                params.push(Param::new(Tensor::zeros(&[outputs])));
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => {
                let fan_in = kernel * kernel * in_channels;
                let mut w = Tensor::zeros(&[fan_in, out_channels]);
                init.fill(w.data_mut(), fan_in, rng);
                params.push(Param::new(w));
                params.push(Param::new(Tensor::zeros(&[out_channels])));
            }
            LayerSpec::Activation(Activation::Prelu) => {
                params.push(Param::new(Tensor::full(&[1], activation::PRELU_INIT_SLOPE)));
            }
            LayerSpec::BatchNorm { channels } => {
                params.push(Param::new(Tensor::full(&[channels], 1.0)));
                params.push(Param::new(Tensor::zeros(&[channels])));
                buffers.push(Tensor::zeros(&[channels]));
                buffers.push(Tensor::full(&[channels], 1.0));
            }
            _ => {}
        }
        Ok(Self {
            spec: spec.clone(),
            params,
            buffers,
            cache: None,
        })
    }

    fn slope(&self) -> f64 {
        self.params.first().map_or(0.0, |p| p.value.data()[0])
    }

    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        match self.spec {
            LayerSpec::Dense { .. } => dense::forward(x, &self.params[0].value, &self.params[1].value),
            LayerSpec::Conv2d { kernel, .. } => {
                conv::forward(x, &self.params[0].value, &self.params[1].value, kernel)
            }
            LayerSpec::Activation(act) => Ok(activation::forward(act, x, self.slope())),
            LayerSpec::Dropout { .. } => Ok(x.clone()),
            LayerSpec::BatchNorm { channels } => {
                let last = *x.shape().last().unwrap_or(&0);
                if last != channels {
                    return Err(NnError::Shape(format!(
                        "batchnorm over {channels} channels got {:?}",
                        x.shape()
                    )));
                }
                let (y, _, _) = norm::normalize(
                    x,
                    self.buffers[0].data(),
                    self.buffers[1].data(),
                    self.params[0].value.data(),
                    self.params[1].value.data(),
                );
                Ok(y)
            }
            LayerSpec::MaxPool => pool::max_forward(x).map(|r| r.0),
            LayerSpec::Flatten => {
                let rows = x.rows();
                let width = x.row_len();
                x.clone().reshape(vec![rows, width])
            }
        }
    }

    fn forward_train<R: Rng + ?Sized>(&mut self, x: &Tensor, rng: &mut R) -> Result<Tensor> {
        let (y, cache) = match self.spec {
            LayerSpec::Dense { .. } => {
                let y = dense::forward(x, &self.params[0].value, &self.params[1].value)?;
                (y, Cache::Dense { x: x.clone() })
            }
            LayerSpec::Conv2d { kernel, .. } => {
                let y = conv::forward(x, &self.params[0].value, &self.params[1].value, kernel)?;
                (y, Cache::Conv { x: x.clone() })
            }
            LayerSpec::Activation(act) => {
                let y = activation::forward(act, x, self.slope());
                (y.clone(), Cache::Act { x: x.clone(), y })
            }
            LayerSpec::Dropout { rate } => {
                let keep = 1.0 / (1.0 - rate);
                let mask: Vec<f64> = (0..x.len())
                    .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
                    .collect();
                let mut y = x.clone();
                y.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                (y, Cache::Dropout { mask })
            }
            LayerSpec::BatchNorm { channels } => {
                let stats = norm::batch_stats(x, channels)?;
                let (y, xhat, inv_std) = norm::normalize(
                    x,
                    &stats.mean,
                    &stats.var,
                    self.params[0].value.data(),
                    self.params[1].value.data(),
                );
                let unbias = stats.count as f64 / (stats.count as f64 - 1.0);
                let m = norm::BN_MOMENTUM;
                for (r, v) in self.buffers[0].data_mut().iter_mut().zip(&stats.mean) {
                    *r = (1.0 - m) * *r + m * v;
                }
                for (r, v) in self.buffers[1].data_mut().iter_mut().zip(&stats.var) {
                    *r = (1.0 - m) * *r + m * v * unbias;
                }
                (y, Cache::BatchNorm { xhat, inv_std })
            }
            LayerSpec::MaxPool => {
                let (y, arg) = pool::max_forward(x)?;
                (
                    y,
                    Cache::Pool {
                        in_shape: x.shape().to_vec(),
                        arg,
                    },
                )
            }
            LayerSpec::Flatten => {
                let rows = x.rows();
                let width = x.row_len();
                (
                    x.clone().reshape(vec![rows, width])?,
                    Cache::Flatten {
                        in_shape: x.shape().to_vec(),
                    },
                )
            }
        };
        self.cache = Some(cache);
        Ok(y)
    }

    /// Returns `None` only when `need_dx` is false and the layer could skip
    /// computing the input gradient.
    fn backward(&mut self, dy: &Tensor, need_dx: bool) -> Result<Option<Tensor>> {
        let cache = self.cache.as_ref().ok_or(NnError::StaleCache)?;
        let dx = match (&self.spec, cache) {
            (LayerSpec::Dense { .. }, Cache::Dense { x }) => {
                let (w, b) = self.params.split_at_mut(1);
                dense::backward(x, &w[0].value, dy, &mut w[0].grad, &mut b[0].grad)
            }
            (LayerSpec::Conv2d { kernel, .. }, Cache::Conv { x }) => {
                let (w, b) = self.params.split_at_mut(1);
                return Ok(conv::backward(
                    x,
                    &w[0].value,
                    dy,
                    *kernel,
                    &mut w[0].grad,
                    &mut b[0].grad,
                    need_dx,
                ));
            }
            (LayerSpec::Activation(act), Cache::Act { x, y }) => {
                let slope = self.params.first().map_or(0.0, |p| p.value.data()[0]);
                let (dx, dslope) = activation::backward(*act, x, y, dy, slope);
                if let Some(p) = self.params.first_mut() {
                    p.grad.data_mut()[0] += dslope;
                }
                dx
            }
            (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => {
                let mut dx = dy.clone();
                dx.data_mut().iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
                dx
            }
            (LayerSpec::BatchNorm { .. }, Cache::BatchNorm { xhat, inv_std }) => {
                let (g, b) = self.params.split_at_mut(1);
                norm::backward(
                    xhat,
                    inv_std,
                    g[0].value.data(),
                    dy,
                    g[0].grad.data_mut(),
                    b[0].grad.data_mut(),
                )
            }
            (LayerSpec::MaxPool, Cache::Pool { in_shape, arg }) => pool::max_backward(in_shape, arg, dy),
            (LayerSpec::Flatten, Cache::Flatten { in_shape }) => dy.clone().reshape(in_shape.clone())?,
            _ => return Err(NnError::StaleCache),
        };
        Ok(Some(dx))
    }
}

/// An ordered stack of layers with cached train-mode activations.
#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<Layer>,
    version: u64,
    cached_version: Option<u64>,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], init: Init, rng: &mut R) -> Result<Self> {
        if specs.is_empty() {
            return Err(NnError::InvalidSpec("network needs at least one layer".into()));
        }
        let layers = specs
            .iter()
            .map(|s| Layer::new(s, init, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers,
            version: 0,
            cached_version: None,
        })
    }

    /// Rebuilds a network from specs and its state tensors (trainable
    /// parameters, then buffers, layer by layer) as produced by
    /// [`Network::state`].
    pub fn from_state(specs: &[LayerSpec], state: Vec<Tensor>) -> Result<Self> {
        let mut net = Network::new(specs, Init::Zeros, &mut rand::rng())?;
        let mut it = state.into_iter();
        for layer in &mut net.layers {
            for p in &mut layer.params {
                let t = it
                    .next()
                    .ok_or_else(|| NnError::Checkpoint("too few state tensors".into()))?;
                if t.shape() != p.value.shape() {
                    return Err(NnError::Checkpoint(format!(
                        "tensor shape {:?} does not match layer {:?}",
                        t.shape(),
                        layer.spec
                    )));
                }
                *p = Param::new(t);
            }
            for b in &mut layer.buffers {
                let t = it
                    .next()
                    .ok_or_else(|| NnError::Checkpoint("too few state tensors".into()))?;
                if t.shape() != b.shape() {
                    return Err(NnError::Checkpoint(format!(
                        "buffer shape {:?} does not match layer {:?}",
                        t.shape(),
                        layer.spec
                    )));
                }
                *b = t;
            }
        }
        if it.next().is_some() {
            return Err(NnError::Checkpoint("trailing state tensors".into()));
        }
        Ok(net)
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec.clone()).collect()
    }

    /// Parameters then buffers, layer by layer.
    pub fn state(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.params.iter().map(|p| &p.value));
            out.extend(l.buffers.iter());
        }
        out
    }

    pub fn forward<R: Rng + ?Sized>(&mut self, input: &Tensor, mode: Mode, rng: &mut R) -> Result<Tensor> {
        if mode == Mode::Eval {
            return self.infer(input);
        }
        self.cached_version = None;
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward_train(&x, rng)?;
        }
        if !x.is_finite() {
            return Err(NnError::NonFinite("forward".into()));
        }
        self.cached_version = Some(self.version);
        Ok(x)
    }

    /// Eval-mode forward that leaves the train cache untouched.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.infer(&x)?;
        }
        if !x.is_finite() {
            return Err(NnError::NonFinite("forward".into()));
        }
        Ok(x)
    }

    /// Back-propagates `grad_out`, accumulating into every parameter's
    /// gradient, and returns the gradient with respect to the input.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let g = self.backward_inner(grad_out, true)?;
        Ok(g.expect("input gradient requested"))
    }

    /// Like [`Network::backward`] but may skip the input gradient of the
    /// first layer, which parameter-only training never uses.
    pub fn backward_params(&mut self, grad_out: &Tensor) -> Result<()> {
        self.backward_inner(grad_out, false).map(|_| ())
    }

    fn backward_inner(&mut self, grad_out: &Tensor, need_input_grad: bool) -> Result<Option<Tensor>> {
        if self.cached_version != Some(self.version) {
            return Err(NnError::StaleCache);
        }
        let mut g = Some(grad_out.clone());
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let dy = g.take().expect("inner layers always return a gradient");
            g = layer.backward(&dy, need_input_grad || i > 0)?;
        }
        if g.as_ref().is_some_and(|g| !g.is_finite()) || self.params().iter().any(|p| !p.grad.is_finite()) {
            return Err(NnError::NonFinite("backward".into()));
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        for l in &mut self.layers {
            for p in &mut l.params {
                p.grad.fill(0.0);
            }
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params.iter()).collect()
    }

    /// Mutable parameter access. Invalidates any cached forward pass.
    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.version += 1;
        self.layers.iter_mut().flat_map(|l| l.params.iter_mut()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}
