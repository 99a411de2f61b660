//! Seeded generators for test images and networks.

use crate::classifier::{Layer, LayerKind, Network, Shape};
use crate::error::Result;
use crate::image::Image;
use crate::rng::{Purpose, Stream};
use crate::scalar::Scalar;

/// Smooth random image: a per-channel linear gradient plus a few Gaussian
/// blobs, clamped to `[0, 1]`. Neighbouring pixels are strongly correlated.
pub fn smooth_image<T: Scalar>(height: usize, width: usize, channels: usize, seed: u64) -> Image<T> {
    let mut s = Stream::new(seed, Purpose::Auxiliary, 1, 0);
    let mut data = vec![0.0f64; height * width * channels];
    let scale = height.max(width) as f64;
    for c in 0..channels {
        let base = 0.3 + 0.4 * s.uniform();
        let gy = (s.uniform() - 0.5) * 0.6;
        let gx = (s.uniform() - 0.5) * 0.6;
        let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    s.uniform() * height as f64,
                    s.uniform() * width as f64,
                    (0.1 + 0.25 * s.uniform()) * scale,
                    (s.uniform() - 0.5) * 0.8,
                )
            })
            .collect();
        for y in 0..height {
            for x in 0..width {
                let mut v = base + gy * (y as f64 / scale - 0.5) + gx * (x as f64 / scale - 0.5);
                for &(by, bx, r, amp) in &blobs {
                    let d2 = ((y as f64 - by).powi(2) + (x as f64 - bx).powi(2)) / (r * r);
                    v += amp * (-0.5 * d2).exp();
                }
                data[(y * width + x) * channels + c] = v.clamp(0.0, 1.0);
            }
        }
    }
    Image::new(height, width, channels, data.into_iter().map(T::of).collect()).expect("values are clamped")
}

/// Image with independent uniform pixels.
pub fn noise_image<T: Scalar>(height: usize, width: usize, channels: usize, seed: u64) -> Image<T> {
    let mut s = Stream::new(seed, Purpose::Auxiliary, 2, 0);
    let data = (0..height * width * channels).map(|_| T::of(s.uniform())).collect();
    Image::new(height, width, channels, data).expect("uniform draws lie in [0, 1)")
}

fn normal_vec<T: Scalar>(s: &mut Stream, n: usize, std: f64) -> Vec<T> {
    (0..n).map(|_| T::of(s.standard_normal() * std)).collect()
}

/// `conv(3×3, pad 1) → relu → maxpool(2) → conv(3×3) → relu → dense → softmax`
/// with He-style random weights. The input must be at least 8×8.
pub fn random_conv_net<T: Scalar>(input: Shape, maps: (usize, usize), classes: usize, seed: u64) -> Result<Network<T>> {
    let mut s = Stream::new(seed, Purpose::Auxiliary, 3, 0);
    let (m1, m2) = maps;
    let c = input.channels;
    let conv1 = LayerKind::Conv {
        kernel_h: 3,
        kernel_w: 3,
        in_channels: c,
        out_channels: m1,
        stride: 1,
        padding: 1,
        weights: normal_vec(&mut s, m1 * c * 9, (2.0 / (9 * c) as f64).sqrt()),
        biases: normal_vec(&mut s, m1, 0.05),
    };
    let pooled = Shape::new(input.height / 2, input.width / 2, m1);
    let conv2_out = Shape::new(pooled.height - 2, pooled.width - 2, m2);
    let conv2 = LayerKind::Conv {
        kernel_h: 3,
        kernel_w: 3,
        in_channels: m1,
        out_channels: m2,
        stride: 1,
        padding: 0,
        weights: normal_vec(&mut s, m2 * m1 * 9, (2.0 / (9 * m1) as f64).sqrt()),
        biases: normal_vec(&mut s, m2, 0.05),
    };
    let n = conv2_out.len();
    let dense = LayerKind::Dense {
        inputs: n,
        outputs: classes,
        weights: normal_vec(&mut s, classes * n, (1.0 / n as f64).sqrt()),
        biases: normal_vec(&mut s, classes, 0.05),
    };
    Network::new(
        input,
        crate::classifier::DEFAULT_TRAINING_SIZE,
        vec![
            Layer::new("conv1", conv1),
            Layer::new("relu1", LayerKind::Relu),
            Layer::new("pool1", LayerKind::MaxPool { window: 2, stride: 2 }),
            Layer::new("conv2", conv2),
            Layer::new("relu2", LayerKind::Relu),
            Layer::new("fc", dense),
            Layer::new("prob", LayerKind::Softmax),
        ],
    )
}
