use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::nn::linalg::gemm;
use crate::nn::{NnError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Self::Tanh),
            "relu" => Some(Self::Relu),
            "identity" => Some(Self::Identity),
            _ => None,
        }
    }

    fn apply(&self, x: &mut [f64]) {
        match self {
            Activation::Tanh => x.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Relu => x.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the activated output.
    fn backprop(&self, out: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Tanh => grad.iter_mut().zip(out).for_each(|(g, a)| *g *= 1.0 - a * a),
            Activation::Relu => grad.iter_mut().zip(out).for_each(|(g, a)| {
                if *a <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Identity => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize, activation: Activation },
    /// Valid-padding convolution over NHWC input.
    Conv2d { in_channels: usize, out_channels: usize, kernel: usize, stride: usize, activation: Activation },
    Flatten,
}

impl LayerSpec {
    fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => vec![vec![inputs, outputs], vec![outputs]],
            LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                vec![vec![kernel * kernel * in_channels, out_channels], vec![out_channels]]
            }
            LayerSpec::Flatten => vec![],
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match *self {
            LayerSpec::Dense { inputs, outputs, .. } => {
                if input != [inputs] {
                    return Err(NnError::Shape(format!("dense layer expects [{inputs}], got {input:?}")));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, .. } => {
                if input.len() != 3 || input[2] != in_channels {
                    return Err(NnError::Shape(format!("conv layer expects [h, w, {in_channels}], got {input:?}")));
                }
                if kernel == 0 || stride == 0 || input[0] < kernel || input[1] < kernel {
                    return Err(NnError::Shape(format!("kernel {kernel} stride {stride} does not fit {input:?}")));
                }
                Ok(vec![(input[0] - kernel) / stride + 1, (input[1] - kernel) / stride + 1, out_channels])
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

/// Per-sample input shape plus an ordered layer list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

pub const CAMERA_FEATURES: usize = 256;

impl NetworkSpec {
    /// Fully connected stack; `outputs` uses `out_act`.
    pub fn mlp(inputs: usize, hidden: &[usize], outputs: usize, hidden_act: Activation, out_act: Activation) -> Self {
        let mut layers = Vec::new();
        let mut width = inputs;
        for &h in hidden {
            layers.push(LayerSpec::Dense { inputs: width, outputs: h, activation: hidden_act });
            width = h;
        }
        layers.push(LayerSpec::Dense { inputs: width, outputs, activation: out_act });
        Self { input_shape: vec![inputs], layers }
    }

    /// Three relu convolutions then a relu dense layer to 256 features.
    pub fn camera_encoder(height: usize, width: usize) -> Result<Self, NnError> {
        let mut spec = Self {
            input_shape: vec![height, width, 3],
            layers: vec![
                LayerSpec::Conv2d { in_channels: 3, out_channels: 16, kernel: 8, stride: 4, activation: Activation::Relu },
                LayerSpec::Conv2d { in_channels: 16, out_channels: 32, kernel: 4, stride: 2, activation: Activation::Relu },
                LayerSpec::Conv2d { in_channels: 32, out_channels: 64, kernel: 3, stride: 1, activation: Activation::Relu },
                LayerSpec::Flatten,
            ],
        };
        let flat = spec.output_shape()?[0];
        spec.layers.push(LayerSpec::Dense { inputs: flat, outputs: CAMERA_FEATURES, activation: Activation::Relu });
        Ok(spec)
    }

    /// Appends a head MLP to this trunk.
    pub fn with_head(mut self, hidden: &[usize], outputs: usize, hidden_act: Activation, out_act: Activation) -> Result<Self, NnError> {
        let shape = self.output_shape()?;
        if shape.len() != 1 {
            self.layers.push(LayerSpec::Flatten);
        }
        let width = shape.iter().product();
        self.layers.extend(NetworkSpec::mlp(width, hidden, outputs, hidden_act, out_act).layers);
        Ok(self)
    }

    /// Shapes entering each layer, followed by the output shape.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        let mut shapes = vec![self.input_shape.clone()];
        for layer in &self.layers {
            let next = layer.output_shape(shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>, NnError> {
        Ok(self.shapes()?.pop().unwrap())
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.layers.iter().flat_map(|l| l.param_shapes()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(|s| s.iter().product::<usize>()).sum()
    }
}

/// Weight and bias tensors of every parametrised layer, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub tensors: Vec<Tensor>,
}

/// Gradients mirror the parameter layout.
pub type GradientSet = ParameterSet;

impl ParameterSet {
    pub fn zeros(shapes: &[Vec<usize>]) -> Self {
        Self { tensors: shapes.iter().map(|s| Tensor::zeros(s)).collect() }
    }

    pub fn zeros_like(&self) -> Self {
        Self { tensors: self.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect() }
    }

    pub fn shapes(&self) -> Vec<Vec<usize>> {
        self.tensors.iter().map(|t| t.shape().to_vec()).collect()
    }

    pub fn scale(&mut self, s: f64) {
        self.tensors.iter_mut().for_each(|t| t.scale(s));
    }

    pub fn add_scaled(&mut self, other: &ParameterSet, s: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_scaled(b, s);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors.iter().map(Tensor::sum_squares).sum::<f64>().sqrt()
    }

    /// Rescales so the global norm is at most `max_norm`; returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm.is_finite() {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    pub fn len(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Polyak averaging: `self = tau * source + (1 - tau) * self`.
    pub fn polyak_from(&mut self, source: &ParameterSet, tau: f64) {
        for (t, s) in self.tensors.iter_mut().zip(&source.tensors) {
            for (a, b) in t.data_mut().iter_mut().zip(s.data()) {
                *a = tau * b + (1.0 - tau) * *a;
            }
        }
    }
}

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

/// Activations retained by [`Network::forward`] for a later backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    network_id: u64,
    version: u64,
    /// `acts[i]` enters layer `i`; the last entry is the output.
    acts: Vec<Tensor>,
    /// im2col matrices of the convolution layers.
    cols: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        self.acts.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: GradientSet,
    pub input: Tensor,
}

#[derive(Debug)]
pub struct Network {
    spec: NetworkSpec,
    shapes: Vec<Vec<usize>>,
    params: ParameterSet,
    id: u64,
    version: u64,
}

impl Clone for Network {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            shapes: self.shapes.clone(),
            params: self.params.clone(),
            id: NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        }
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.params == other.params
    }
}

impl Network {
    pub fn new(spec: NetworkSpec, params: ParameterSet) -> Result<Self, NnError> {
        let shapes = spec.shapes()?;
        if params.shapes() != spec.param_shapes() {
            return Err(NnError::Shape(format!(
                "parameter shapes {:?} do not match spec {:?}",
                params.shapes(),
                spec.param_shapes()
            )));
        }
        Ok(Self { spec, shapes, params, id: NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed), version: 0 })
    }

    /// Orthogonal dense layers (gain `hidden_gain`, last dense layer `head_gain`),
    /// uniform fan-in convolutions, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: NetworkSpec, hidden_gain: f64, head_gain: f64, rng: &mut R) -> Result<Self, NnError> {
        let last_dense = spec.layers.iter().rposition(|l| matches!(l, LayerSpec::Dense { .. }));
        let mut tensors = Vec::new();
        for (i, layer) in spec.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Dense { inputs, outputs, .. } => {
                    let gain = if Some(i) == last_dense { head_gain } else { hidden_gain };
                    tensors.push(Tensor::from_vec(&[inputs, outputs], super::init::orthogonal(inputs, outputs, gain, rng))?);
                    tensors.push(Tensor::zeros(&[outputs]));
                }
                LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                    let fan_in = kernel * kernel * in_channels;
                    let data = super::init::uniform_fan_in(fan_in, fan_in * out_channels, rng);
                    tensors.push(Tensor::from_vec(&[fan_in, out_channels], data)?);
                    tensors.push(Tensor::zeros(&[out_channels]));
                }
                LayerSpec::Flatten => {}
            }
        }
        Self::new(spec, ParameterSet { tensors })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    /// Mutable access invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut ParameterSet {
        self.version += 1;
        &mut self.params
    }

    pub fn set_params(&mut self, params: ParameterSet) -> Result<(), NnError> {
        if params.shapes() != self.params.shapes() {
            return Err(NnError::Shape("replacement parameters have different shapes".into()));
        }
        *self.params_mut() = params;
        Ok(())
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.spec.input_shape
    }

    pub fn output_width(&self) -> usize {
        self.shapes.last().unwrap().iter().product()
    }

    fn check_input(&self, input: &Tensor) -> Result<usize, NnError> {
        let shape = input.shape();
        if shape.is_empty() || shape[1..] != self.spec.input_shape[..] {
            return Err(NnError::Shape(format!(
                "input shape {shape:?} does not match [batch, {:?}]",
                self.spec.input_shape
            )));
        }
        Ok(shape[0])
    }

    /// Forward pass without retaining activations.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor, NnError> {
        let batch = self.check_input(input)?;
        let mut x = input.clone();
        let mut p = 0;
        for (i, layer) in self.spec.layers.iter().enumerate() {
            x = self.layer_forward(layer, i, &mut p, batch, &x, None)?;
        }
        Ok(x)
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardCache), NnError> {
        let batch = self.check_input(input)?;
        let mut acts = vec![input.clone()];
        let mut cols = Vec::with_capacity(self.spec.layers.len());
        let mut p = 0;
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let mut col = None;
            let next = self.layer_forward(layer, i, &mut p, batch, acts.last().unwrap(), Some(&mut col))?;
            acts.push(next);
            cols.push(col);
        }
        let cache = ForwardCache { network_id: self.id, version: self.version, acts, cols };
        Ok((cache.output().clone(), cache))
    }

    fn layer_forward(
        &self,
        layer: &LayerSpec,
        index: usize,
        p: &mut usize,
        batch: usize,
        x: &Tensor,
        keep_cols: Option<&mut Option<Vec<f64>>>,
    ) -> Result<Tensor, NnError> {
        let out_shape = &self.shapes[index + 1];
        let mut shape = vec![batch];
        shape.extend_from_slice(out_shape);
        match *layer {
            LayerSpec::Dense { inputs, outputs, activation } => {
                let (w, b) = (&self.params.tensors[*p], &self.params.tensors[*p + 1]);
                *p += 2;
                let mut z = Vec::with_capacity(batch * outputs);
                for _ in 0..batch {
                    z.extend_from_slice(b.data());
                }
                gemm(batch, inputs, outputs, x.data(), false, w.data(), false, 1.0, &mut z);
                activation.apply(&mut z);
                Tensor::from_vec(&shape, z)
            }
            LayerSpec::Conv2d { out_channels, activation, .. } => {
                let (w, b) = (&self.params.tensors[*p], &self.params.tensors[*p + 1]);
                *p += 2;
                let cols = im2col(x, layer, &self.shapes[index], out_shape);
                let rows = batch * out_shape[0] * out_shape[1];
                let k = w.shape()[0];
                let mut z = Vec::with_capacity(rows * out_channels);
                for _ in 0..rows {
                    z.extend_from_slice(b.data());
                }
                gemm(rows, k, out_channels, &cols, false, w.data(), false, 1.0, &mut z);
                activation.apply(&mut z);
                if let Some(slot) = keep_cols {
                    *slot = Some(cols);
                }
                Tensor::from_vec(&shape, z)
            }
            LayerSpec::Flatten => x.clone().reshape(&shape),
        }
    }

    /// Reverse-mode gradients of the parameters and the input.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Tensor) -> Result<Gradients, NnError> {
        if cache.network_id != self.id || cache.version != self.version {
            return Err(NnError::StaleCache);
        }
        if grad_output.shape() != cache.output().shape() {
            return Err(NnError::Shape(format!(
                "output gradient shape {:?} does not match output {:?}",
                grad_output.shape(),
                cache.output().shape()
            )));
        }
        let batch = grad_output.batch();
        let mut grads = self.params.zeros_like();
        let mut p = self.params.tensors.len();
        let mut g = grad_output.data().to_vec();
        for (i, layer) in self.spec.layers.iter().enumerate().rev() {
            let x = &cache.acts[i];
            let a = &cache.acts[i + 1];
            match *layer {
                LayerSpec::Dense { inputs, outputs, activation } => {
                    p -= 2;
                    activation.backprop(a.data(), &mut g);
                    gemm(inputs, batch, outputs, x.data(), true, &g, false, 0.0, grads.tensors[p].data_mut());
                    column_sums(&g, outputs, grads.tensors[p + 1].data_mut());
                    let mut gx = vec![0.0; batch * inputs];
                    gemm(batch, outputs, inputs, &g, false, self.params.tensors[p].data(), true, 0.0, &mut gx);
                    g = gx;
                }
                LayerSpec::Conv2d { out_channels, activation, .. } => {
                    p -= 2;
                    activation.backprop(a.data(), &mut g);
                    let cols = cache.cols[i].as_ref().ok_or(NnError::StaleCache)?;
                    let k = self.params.tensors[p].shape()[0];
                    let rows = g.len() / out_channels;
                    gemm(k, rows, out_channels, cols, true, &g, false, 0.0, grads.tensors[p].data_mut());
                    column_sums(&g, out_channels, grads.tensors[p + 1].data_mut());
                    let mut dcols = vec![0.0; rows * k];
                    gemm(rows, out_channels, k, &g, false, self.params.tensors[p].data(), true, 0.0, &mut dcols);
                    g = col2im(&dcols, layer, batch, &self.shapes[i], &self.shapes[i + 1]);
                }
                LayerSpec::Flatten => {}
            }
        }
        let input = Tensor::from_vec(cache.acts[0].shape(), g)?;
        Ok(Gradients { params: grads, input })
    }
}

fn column_sums(g: &[f64], width: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for row in g.chunks_exact(width) {
        out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
    }
}

fn conv_geometry(layer: &LayerSpec) -> (usize, usize, usize) {
    match *layer {
        LayerSpec::Conv2d { in_channels, kernel, stride, .. } => (in_channels, kernel, stride),
        _ => unreachable!("not a convolution"),
    }
}

/// Patch matrix with rows `(n, oy, ox)` and columns `(ky, kx, c)`.
fn im2col(x: &Tensor, layer: &LayerSpec, in_shape: &[usize], out_shape: &[usize]) -> Vec<f64> {
    let (c, k, s) = conv_geometry(layer);
    let (h, w) = (in_shape[0], in_shape[1]);
    let (oh, ow) = (out_shape[0], out_shape[1]);
    let batch = x.batch();
    let data = x.data();
    let mut cols = Vec::with_capacity(batch * oh * ow * k * k * c);
    for n in 0..batch {
        for oy in 0..oh {
            for ox in 0..ow {
                for ky in 0..k {
                    let start = ((n * h + oy * s + ky) * w + ox * s) * c;
                    cols.extend_from_slice(&data[start..start + k * c]);
                }
            }
        }
    }
    cols
}

fn col2im(dcols: &[f64], layer: &LayerSpec, batch: usize, in_shape: &[usize], out_shape: &[usize]) -> Vec<f64> {
    let (c, k, s) = conv_geometry(layer);
    let (h, w) = (in_shape[0], in_shape[1]);
    let (oh, ow) = (out_shape[0], out_shape[1]);
    let mut dx = vec![0.0; batch * h * w * c];
    let mut rows = dcols.chunks_exact(k * k * c);
    for n in 0..batch {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = rows.next().unwrap();
                for ky in 0..k {
                    let start = ((n * h + oy * s + ky) * w + ox * s) * c;
                    dx[start..start + k * c].iter_mut().zip(&row[ky * k * c..(ky + 1) * k * c]).for_each(|(d, v)| *d += v);
                }
            }
        }
    }
    dx
}
