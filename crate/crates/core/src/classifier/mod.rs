//! Small feed-forward classifiers: dense, convolution, ReLU, max-pool and a
//! terminal softmax.
//!
//! Activations use the same interleaved `height × width × channels` layout as
//! [`Image`], so a dense layer directly after the input sees the image's
//! flattened data. Convolution weights are stored `[out][in][kh][kw]`.

mod backprop;
mod format;

pub use backprop::SensitivityMap;
pub use format::{encode_network, load_network, parse_network, save_network, to_json, NETWORK_MAGIC};

use crate::error::{validation, Error, Result};
use crate::image::Image;
use crate::scalar::Scalar;
use std::collections::HashSet;

/// Training-set size assumed when a weight file does not declare one.
pub const DEFAULT_TRAINING_SIZE: u64 = 10_000;

/// Spatial shape of an activation tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels }
    }

    pub const fn flat(len: usize) -> Self {
        Self { height: 1, width: 1, channels: len }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind<T = f64> {
    Dense {
        inputs: usize,
        outputs: usize,
        /// `outputs × inputs`, row-major.
        weights: Vec<T>,
        biases: Vec<T>,
    },
    Conv {
        kernel_h: usize,
        kernel_w: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        padding: usize,
        /// `out × in × kernel_h × kernel_w`, row-major.
        weights: Vec<T>,
        biases: Vec<T>,
    },
    Relu,
    MaxPool {
        window: usize,
        stride: usize,
    },
    Softmax,
}

impl<T> LayerKind<T> {
    pub fn tag_name(&self) -> &'static str {
        match self {
            LayerKind::Dense { .. } => "dense",
            LayerKind::Conv { .. } => "conv",
            LayerKind::Relu => "relu",
            LayerKind::MaxPool { .. } => "maxpool",
            LayerKind::Softmax => "softmax",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T = f64> {
    pub name: String,
    pub kind: LayerKind<T>,
}

impl<T> Layer<T> {
    pub fn new(name: impl Into<String>, kind: LayerKind<T>) -> Self {
        Self { name: name.into(), kind }
    }
}

/// A validated, immutable classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T = f64> {
    input: Shape,
    training_size: u64,
    layers: Vec<Layer<T>>,
    /// Output shape of every layer.
    shapes: Vec<Shape>,
}

/// Pre-softmax scores and class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierOutput<T = f64> {
    pub logits: Vec<T>,
    pub probabilities: Vec<T>,
}

impl<T: Scalar> ClassifierOutput<T> {
    /// Highest-probability class; the first one wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probabilities.iter().enumerate() {
            if *p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

/// Which unit(s) of a layer to read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitSelector {
    /// One unit by flat index into the layer's output.
    Unit(usize),
    /// All units of one channel of a spatial layer.
    FeatureMap(usize),
}

/// A named read-out point inside the network.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerTap {
    pub layer: String,
    pub unit: UnitSelector,
}

impl LayerTap {
    pub fn unit(layer: impl Into<String>, index: usize) -> Self {
        Self { layer: layer.into(), unit: UnitSelector::Unit(index) }
    }

    pub fn feature_map(layer: impl Into<String>, map: usize) -> Self {
        Self { layer: layer.into(), unit: UnitSelector::FeatureMap(map) }
    }
}

fn layer_err<T>(index: usize, layer: &Layer<T>, msg: impl std::fmt::Display) -> Error {
    validation(format!("layer {index} ('{}', {}): {msg}", layer.name, layer.kind.tag_name()))
}

fn output_extent(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if kernel == 0 || stride == 0 || padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

impl<T: Scalar> Network<T> {
    /// Validates shapes, names and the softmax placement.
    pub fn new(input: Shape, training_size: u64, layers: Vec<Layer<T>>) -> Result<Self> {
        if input.is_empty() {
            return Err(validation("network input shape must be non-empty"));
        }
        let mut names = HashSet::new();
        let mut shapes = Vec::with_capacity(layers.len());
        let mut current = input;
        for (i, layer) in layers.iter().enumerate() {
            if layer.name.is_empty() || !names.insert(layer.name.as_str()) {
                return Err(layer_err(i, layer, "layer names must be unique and non-empty"));
            }
            current = match &layer.kind {
                LayerKind::Dense { inputs, outputs, weights, biases } => {
                    if *inputs != current.len() {
                        return Err(layer_err(
                            i,
                            layer,
                            format!("expects {inputs} inputs but previous output has {} ({current})", current.len()),
                        ));
                    }
                    if *outputs == 0 || weights.len() != inputs * outputs || biases.len() != *outputs {
                        return Err(layer_err(i, layer, "weight/bias array sizes do not match inputs x outputs"));
                    }
                    Shape::flat(*outputs)
                }
                LayerKind::Conv { kernel_h, kernel_w, in_channels, out_channels, stride, padding, weights, biases } => {
                    if *in_channels != current.channels {
                        return Err(layer_err(
                            i,
                            layer,
                            format!("expects {in_channels} input channels, got {}", current.channels),
                        ));
                    }
                    if *out_channels == 0
                        || weights.len() != out_channels * in_channels * kernel_h * kernel_w
                        || biases.len() != *out_channels
                    {
                        return Err(layer_err(i, layer, "weight/bias array sizes do not match the kernel shape"));
                    }
                    let h = output_extent(current.height, *kernel_h, *stride, *padding);
                    let w = output_extent(current.width, *kernel_w, *stride, *padding);
                    match (h, w) {
                        (Some(h), Some(w)) => Shape::new(h, w, *out_channels),
                        _ => return Err(layer_err(i, layer, format!("kernel does not fit input {current}"))),
                    }
                }
                LayerKind::Relu => current,
                LayerKind::MaxPool { window, stride } => {
                    let h = output_extent(current.height, *window, *stride, 0);
                    let w = output_extent(current.width, *window, *stride, 0);
                    match (h, w) {
                        (Some(h), Some(w)) => Shape::new(h, w, current.channels),
                        _ => return Err(layer_err(i, layer, format!("pool window does not fit input {current}"))),
                    }
                }
                LayerKind::Softmax => {
                    if i + 1 != layers.len() {
                        return Err(layer_err(i, layer, "softmax must be the final layer"));
                    }
                    if i == 0 {
                        return Err(layer_err(i, layer, "softmax needs a preceding layer producing logits"));
                    }
                    if current.len() < 2 {
                        return Err(layer_err(i, layer, "softmax needs at least two classes"));
                    }
                    current
                }
            };
            shapes.push(current);
        }
        if !matches!(layers.last().map(|l| &l.kind), Some(LayerKind::Softmax)) {
            return Err(validation("network must end with exactly one softmax layer"));
        }
        Ok(Self { input, training_size, layers, shapes })
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    /// Declared size of the training set, used for Laplace smoothing.
    pub fn training_size(&self) -> u64 {
        self.training_size
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.shapes.last().map_or(0, Shape::len)
    }

    pub fn layer_index(&self, name: &str) -> Result<usize> {
        self.layers
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| validation(format!("unknown layer '{name}'")))
    }

    pub fn output_shape(&self, layer: usize) -> Shape {
        self.shapes[layer]
    }

    /// True for conv layers and for ReLU / max-pool layers fed by one.
    pub fn is_convolutional(&self, layer: usize) -> bool {
        match self.layers[layer].kind {
            LayerKind::Conv { .. } => true,
            LayerKind::Relu | LayerKind::MaxPool { .. } if layer > 0 => self.is_convolutional(layer - 1),
            _ => false,
        }
    }

    /// Resolves a tap into a layer index and the flat unit indices it reads.
    pub fn resolve_tap(&self, tap: &LayerTap) -> Result<(usize, Vec<usize>)> {
        let layer = self.layer_index(&tap.layer)?;
        let shape = self.shapes[layer];
        let units = match tap.unit {
            UnitSelector::Unit(u) => {
                if u >= shape.len() {
                    return Err(validation(format!(
                        "unit {u} out of range for layer '{}' with {} units",
                        tap.layer,
                        shape.len()
                    )));
                }
                vec![u]
            }
            UnitSelector::FeatureMap(m) => {
                if !self.is_convolutional(layer) {
                    return Err(validation(format!("layer '{}' is not convolutional", tap.layer)));
                }
                if m >= shape.channels {
                    return Err(validation(format!(
                        "feature map {m} out of range for layer '{}' with {} maps",
                        tap.layer, shape.channels
                    )));
                }
                (0..shape.height * shape.width).map(|p| p * shape.channels + m).collect()
            }
        };
        Ok((layer, units))
    }

    fn check_input(&self, x: &Image<T>) -> Result<()> {
        let got = Shape::new(x.height(), x.width(), x.channels());
        if got != self.input {
            return Err(validation(format!("image shape {got} does not match network input {}", self.input)));
        }
        Ok(())
    }

    /// Runs the network, returning the output of every layer (`trace[i]` is
    /// the output of layer `i`). Stops after layer `upto` when given.
    pub(crate) fn trace(&self, x: &[T], upto: Option<usize>) -> Vec<Vec<T>> {
        let last = upto.unwrap_or(self.layers.len() - 1);
        let mut trace: Vec<Vec<T>> = Vec::with_capacity(last + 1);
        for i in 0..=last {
            let (input, in_shape) = if i == 0 { (x, self.input) } else { (trace[i - 1].as_slice(), self.shapes[i - 1]) };
            let out = apply_layer(&self.layers[i].kind, input, in_shape, self.shapes[i]);
            trace.push(out);
        }
        trace
    }

    /// Evaluates logits `S_c` and probabilities `p(c|x)`.
    pub fn forward(&self, x: &Image<T>) -> Result<ClassifierOutput<T>> {
        self.check_input(x)?;
        let mut trace = self.trace(x.data(), None);
        Ok(self.output_from_trace(&mut trace))
    }

    fn output_from_trace(&self, trace: &mut Vec<Vec<T>>) -> ClassifierOutput<T> {
        let probabilities = trace.pop().expect("network has layers");
        let logits = trace.last().cloned().expect("softmax has a predecessor");
        ClassifierOutput { logits, probabilities }
    }

    /// Evaluates several inputs; results equal per-input [`Network::forward`].
    pub fn forward_batch(&self, xs: &[Image<T>]) -> Result<Vec<ClassifierOutput<T>>> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    /// Forward pass that also returns the activations addressed by `taps`,
    /// one vector per tap in order.
    pub fn forward_with_taps(
        &self,
        x: &Image<T>,
        taps: &[LayerTap],
    ) -> Result<(ClassifierOutput<T>, Vec<Vec<T>>)> {
        self.check_input(x)?;
        let resolved = taps.iter().map(|t| self.resolve_tap(t)).collect::<Result<Vec<_>>>()?;
        let mut trace = self.trace(x.data(), None);
        let tapped = resolved
            .iter()
            .map(|(layer, units)| units.iter().map(|&u| trace[*layer][u]).collect())
            .collect();
        Ok((self.output_from_trace(&mut trace), tapped))
    }
}

fn apply_layer<T: Scalar>(kind: &LayerKind<T>, input: &[T], in_shape: Shape, out_shape: Shape) -> Vec<T> {
    match kind {
        LayerKind::Dense { inputs, outputs, weights, biases } => (0..*outputs)
            .map(|o| biases[o] + crate::linalg::dot(&weights[o * inputs..(o + 1) * inputs], input))
            .collect(),
        LayerKind::Conv { kernel_h, kernel_w, in_channels, out_channels, stride, padding, weights, biases } => {
            let (kh, kw, cin, cout) = (*kernel_h, *kernel_w, *in_channels, *out_channels);
            // Weights reordered to [ky][kx][ci][co] so the innermost loop is contiguous.
            let mut wt = vec![T::zero(); weights.len()];
            for co in 0..cout {
                for ci in 0..cin {
                    for t in 0..kh * kw {
                        wt[(t * cin + ci) * cout + co] = weights[(co * cin + ci) * kh * kw + t];
                    }
                }
            }
            let mut out = vec![T::zero(); out_shape.len()];
            for oy in 0..out_shape.height {
                for ox in 0..out_shape.width {
                    let acc = &mut out[(oy * out_shape.width + ox) * cout..][..cout];
                    acc.copy_from_slice(biases);
                    for ky in 0..kh {
                        let iy = (oy * stride + ky) as isize - *padding as isize;
                        if iy < 0 || iy as usize >= in_shape.height {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * stride + kx) as isize - *padding as isize;
                            if ix < 0 || ix as usize >= in_shape.width {
                                continue;
                            }
                            let pixel = &input[(iy as usize * in_shape.width + ix as usize) * cin..][..cin];
                            let taps = &wt[(ky * kw + kx) * cin * cout..][..cin * cout];
                            for (&v, w) in pixel.iter().zip(taps.chunks_exact(cout)) {
                                for (a, &w) in acc.iter_mut().zip(w) {
                                    *a += w * v;
                                }
                            }
                        }
                    }
                }
            }
            out
        }
        LayerKind::Relu => input.iter().map(|&v| v.max(T::zero())).collect(),
        LayerKind::MaxPool { window, stride } => {
            let mut out = Vec::with_capacity(out_shape.len());
            for oy in 0..out_shape.height {
                for ox in 0..out_shape.width {
                    for c in 0..out_shape.channels {
                        let (y, x) = pool_argmax(input, in_shape, oy, ox, c, *window, *stride);
                        out.push(input[(y * in_shape.width + x) * in_shape.channels + c]);
                    }
                }
            }
            out
        }
        LayerKind::Softmax => softmax(input),
    }
}

/// Position of the first maximum in a pooling window (row-major scan).
pub(crate) fn pool_argmax<T: Scalar>(
    input: &[T],
    in_shape: Shape,
    oy: usize,
    ox: usize,
    c: usize,
    window: usize,
    stride: usize,
) -> (usize, usize) {
    let mut best = (oy * stride, ox * stride);
    let mut best_v = T::neg_infinity();
    for y in oy * stride..oy * stride + window {
        for x in ox * stride..ox * stride + window {
            let v = input[(y * in_shape.width + x) * in_shape.channels + c];
            if v > best_v {
                best_v = v;
                best = (y, x);
            }
        }
    }
    best
}

/// Numerically stable softmax (max-logit subtraction).
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
