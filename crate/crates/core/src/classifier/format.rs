//! Weight files.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! "PDN1"
//! u32 input height, u32 input width, u32 input channels
//! u64 declared training-set size
//! u32 layer count
//! per layer:
//!   u8 kind (0 dense, 1 conv, 2 relu, 3 maxpool, 4 softmax)
//!   u32 name length, name bytes (UTF-8)
//!   dense:   u32 inputs, u32 outputs, f64[outputs*inputs] weights, f64[outputs] biases
//!   conv:    u32 kernel_h, kernel_w, in_channels, out_channels, stride, padding,
//!            f64[out*in*kh*kw] weights, f64[out] biases
//!   maxpool: u32 window, u32 stride
//! ```
//!
//! A JSON mirror is accepted for hand-written networks; the loader picks the
//! format by looking for the magic bytes.

use super::{Layer, LayerKind, Network, Shape, DEFAULT_TRAINING_SIZE};
use crate::binio::{Reader, Writer};
use crate::error::{format_err, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const NETWORK_MAGIC: &[u8; 4] = b"PDN1";

const TAG_DENSE: u8 = 0;
const TAG_CONV: u8 = 1;
const TAG_RELU: u8 = 2;
const TAG_MAXPOOL: u8 = 3;
const TAG_SOFTMAX: u8 = 4;

pub fn save_network<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_network(net))?;
    Ok(())
}

pub fn load_network<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    parse_network(&std::fs::read(path)?)
}

/// Parses either the binary or the JSON representation.
pub fn parse_network<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    if bytes.starts_with(NETWORK_MAGIC) {
        decode(bytes)
    } else {
        let trimmed = bytes.iter().position(|b| !b.is_ascii_whitespace());
        if trimmed.map(|i| bytes[i]) != Some(b'{') {
            return Err(format_err("weight file: unrecognized magic (expected \"PDN1\" or a JSON object)"));
        }
        let doc: JsonNetwork =
            serde_json::from_slice(bytes).map_err(|e| format_err(format!("weight file (json): {e}")))?;
        doc.into_network()
    }
}

fn to_f64<T: Scalar>(v: &[T]) -> impl Iterator<Item = f64> + '_ {
    v.iter().map(|x| x.to_f64_lossy())
}

fn from_f64<T: Scalar>(v: Vec<f64>) -> Vec<T> {
    v.into_iter().map(T::of).collect()
}

/// Binary network file contents.
pub fn encode_network<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(NETWORK_MAGIC);
    let s = net.input_shape();
    w.usize32(s.height);
    w.usize32(s.width);
    w.usize32(s.channels);
    w.u64(net.training_size());
    w.usize32(net.layers().len());
    for layer in net.layers() {
        match &layer.kind {
            LayerKind::Dense { inputs, outputs, weights, biases } => {
                w.u8(TAG_DENSE);
                w.str(&layer.name);
                w.usize32(*inputs);
                w.usize32(*outputs);
                w.f64s(to_f64(weights));
                w.f64s(to_f64(biases));
            }
            LayerKind::Conv { kernel_h, kernel_w, in_channels, out_channels, stride, padding, weights, biases } => {
                w.u8(TAG_CONV);
                w.str(&layer.name);
                for v in [kernel_h, kernel_w, in_channels, out_channels, stride, padding] {
                    w.usize32(*v);
                }
                w.f64s(to_f64(weights));
                w.f64s(to_f64(biases));
            }
            LayerKind::Relu => {
                w.u8(TAG_RELU);
                w.str(&layer.name);
            }
            LayerKind::MaxPool { window, stride } => {
                w.u8(TAG_MAXPOOL);
                w.str(&layer.name);
                w.usize32(*window);
                w.usize32(*stride);
            }
            LayerKind::Softmax => {
                w.u8(TAG_SOFTMAX);
                w.str(&layer.name);
            }
        }
    }
    w.buf
}

fn decode<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    let mut r = Reader::new(bytes, "weight file");
    r.expect_magic(NETWORK_MAGIC)?;
    let input = Shape::new(r.usize32()?, r.usize32()?, r.usize32()?);
    let training_size = r.u64()?;
    let count = r.usize32()?;
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let tag = r.u8()?;
        let name = r.str()?;
        let kind = match tag {
            TAG_DENSE => {
                let inputs = r.usize32()?;
                let outputs = r.usize32()?;
                let weights = from_f64(r.f64s(inputs * outputs)?);
                let biases = from_f64(r.f64s(outputs)?);
                LayerKind::Dense { inputs, outputs, weights, biases }
            }
            TAG_CONV => {
                let kernel_h = r.usize32()?;
                let kernel_w = r.usize32()?;
                let in_channels = r.usize32()?;
                let out_channels = r.usize32()?;
                let stride = r.usize32()?;
                let padding = r.usize32()?;
                let weights = from_f64(r.f64s(out_channels * in_channels * kernel_h * kernel_w)?);
                let biases = from_f64(r.f64s(out_channels)?);
                LayerKind::Conv { kernel_h, kernel_w, in_channels, out_channels, stride, padding, weights, biases }
            }
            TAG_RELU => LayerKind::Relu,
            TAG_MAXPOOL => LayerKind::MaxPool { window: r.usize32()?, stride: r.usize32()? },
            TAG_SOFTMAX => LayerKind::Softmax,
            other => return Err(format_err(format!("weight file: unknown layer kind tag {other}"))),
        };
        layers.push(Layer { name, kind });
    }
    r.finish()?;
    Network::new(input, training_size, layers)
}

#[derive(Serialize, Deserialize)]
struct JsonNetwork {
    /// `[height, width, channels]`
    input: [usize; 3],
    #[serde(default = "default_training_size")]
    training_size: u64,
    layers: Vec<JsonLayer>,
}

fn default_training_size() -> u64 {
    DEFAULT_TRAINING_SIZE
}

#[derive(Serialize, Deserialize)]
struct JsonLayer {
    name: String,
    #[serde(flatten)]
    kind: JsonKind,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum JsonKind {
    Dense { inputs: usize, outputs: usize, weights: Vec<f64>, biases: Vec<f64> },
    Conv {
        kernel_h: usize,
        kernel_w: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        padding: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
    },
    Relu,
    Maxpool { window: usize, stride: usize },
    Softmax,
}

impl JsonNetwork {
    fn into_network<T: Scalar>(self) -> Result<Network<T>> {
        let layers = self
            .layers
            .into_iter()
            .map(|l| {
                let kind = match l.kind {
                    JsonKind::Dense { inputs, outputs, weights, biases } => {
                        LayerKind::Dense { inputs, outputs, weights: from_f64(weights), biases: from_f64(biases) }
                    }
                    JsonKind::Conv { kernel_h, kernel_w, in_channels, out_channels, stride, padding, weights, biases } => {
                        LayerKind::Conv {
                            kernel_h,
                            kernel_w,
                            in_channels,
                            out_channels,
                            stride,
                            padding,
                            weights: from_f64(weights),
                            biases: from_f64(biases),
                        }
                    }
                    JsonKind::Relu => LayerKind::Relu,
                    JsonKind::Maxpool { window, stride } => LayerKind::MaxPool { window, stride },
                    JsonKind::Softmax => LayerKind::Softmax,
                };
                Layer { name: l.name, kind }
            })
            .collect();
        let [h, w, c] = self.input;
        Network::new(Shape::new(h, w, c), self.training_size, layers)
    }
}

/// JSON mirror of a network, accepted by [`parse_network`].
pub fn to_json<T: Scalar>(net: &Network<T>) -> String {
    let s = net.input_shape();
    let doc = JsonNetwork {
        input: [s.height, s.width, s.channels],
        training_size: net.training_size(),
        layers: net
            .layers()
            .iter()
            .map(|l| JsonLayer {
                name: l.name.clone(),
                kind: match &l.kind {
                    LayerKind::Dense { inputs, outputs, weights, biases } => JsonKind::Dense {
                        inputs: *inputs,
                        outputs: *outputs,
                        weights: to_f64(weights).collect(),
                        biases: to_f64(biases).collect(),
                    },
                    LayerKind::Conv { kernel_h, kernel_w, in_channels, out_channels, stride, padding, weights, biases } => {
                        JsonKind::Conv {
                            kernel_h: *kernel_h,
                            kernel_w: *kernel_w,
                            in_channels: *in_channels,
                            out_channels: *out_channels,
                            stride: *stride,
                            padding: *padding,
                            weights: to_f64(weights).collect(),
                            biases: to_f64(biases).collect(),
                        }
                    }
                    LayerKind::Relu => JsonKind::Relu,
                    LayerKind::MaxPool { window, stride } => JsonKind::Maxpool { window: *window, stride: *stride },
                    LayerKind::Softmax => JsonKind::Softmax,
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn tiny() -> Network {
        Network::new(
            Shape::flat(4),
            250,
            vec![
                Layer::new(
                    "fc",
                    LayerKind::Dense {
                        inputs: 4,
                        outputs: 2,
                        weights: vec![0.1, -0.2, 1.0 / 3.0, 4.5, 0.0, -1e-300, 7.0, 2.0],
                        biases: vec![0.25, -0.75],
                    },
                ),
                Layer::new("prob", LayerKind::Softmax),
            ],
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let net = tiny();
        let bytes = encode_network(&net);
        let back: Network = parse_network(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode_network(&back), bytes);
        assert_eq!(back.training_size(), 250);
    }

    #[test]
    fn json_mirror_parses() {
        let net = tiny();
        let back: Network = parse_network(to_json(&net).as_bytes()).unwrap();
        assert_eq!(back, net);
        let text = r#"{"input":[1,1,4],"layers":[
            {"name":"fc","kind":"dense","inputs":4,"outputs":2,"weights":[0,0,0,0,0,0,0,0],"biases":[0,0]},
            {"name":"p","kind":"softmax"}]}"#;
        let net: Network = parse_network(text.as_bytes()).unwrap();
        assert_eq!(net.training_size(), DEFAULT_TRAINING_SIZE);
    }

    #[test]
    fn malformed_inputs_are_format_errors() {
        assert!(matches!(parse_network::<f64>(b"XXXX\0\0"), Err(Error::Format(_))));
        let bytes = encode_network(&tiny());
        assert!(matches!(parse_network::<f64>(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        let mut bad_tag = bytes.clone();
        // first layer tag follows the 4+12+8+4 byte header
        bad_tag[28] = 9;
        assert!(matches!(parse_network::<f64>(&bad_tag), Err(Error::Format(_))));
    }
}
