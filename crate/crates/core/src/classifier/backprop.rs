//! Gradient of a class logit with respect to the input pixels.

use super::{pool_argmax, LayerKind, Network};
use crate::error::{validation, Result};
use crate::image::Image;
use crate::scalar::Scalar;

/// Per-pixel `max_channel |∂S_c/∂x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMap<T = f64> {
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Network<T> {
    /// Full input gradient of logit `class`, in the image's data layout.
    pub fn logit_gradient(&self, x: &Image<T>, class: usize) -> Result<Vec<T>> {
        self.check_input(x)?;
        let classes = self.num_classes();
        if class >= classes {
            return Err(validation(format!("class {class} out of range for {classes} classes")));
        }
        let n = self.layers.len();
        // Logits are the output of layer n-2 (softmax input).
        let trace = self.trace(x.data(), Some(n - 2));
        let mut grad = vec![T::zero(); self.shapes[n - 2].len()];
        grad[class] = T::one();
        for i in (0..n - 1).rev() {
            let (input, in_shape) = if i == 0 { (x.data(), self.input) } else { (trace[i - 1].as_slice(), self.shapes[i - 1]) };
            let out_shape = self.shapes[i];
            grad = match &self.layers[i].kind {
                LayerKind::Dense { inputs, outputs, weights, .. } => {
                    let mut g = vec![T::zero(); *inputs];
                    for o in 0..*outputs {
                        let go = grad[o];
                        if go == T::zero() {
                            continue;
                        }
                        for (gj, &w) in g.iter_mut().zip(&weights[o * inputs..(o + 1) * inputs]) {
                            *gj += w * go;
                        }
                    }
                    g
                }
                LayerKind::Conv { kernel_h, kernel_w, in_channels, out_channels, stride, padding, weights, .. } => {
                    let (kh, kw, cin, cout) = (*kernel_h, *kernel_w, *in_channels, *out_channels);
                    let mut g = vec![T::zero(); in_shape.len()];
                    for oy in 0..out_shape.height {
                        for ox in 0..out_shape.width {
                            for co in 0..cout {
                                let go = grad[(oy * out_shape.width + ox) * cout + co];
                                if go == T::zero() {
                                    continue;
                                }
                                for ci in 0..cin {
                                    let wbase = (co * cin + ci) * kh * kw;
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
                                            let idx = (iy as usize * in_shape.width + ix as usize) * cin + ci;
                                            g[idx] += weights[wbase + ky * kw + kx] * go;
                                        }
                                    }
                                }
                            }
                        }
                    }
                    g
                }
                LayerKind::Relu => grad
                    .iter()
                    .zip(input)
                    .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
                    .collect(),
                LayerKind::MaxPool { window, stride } => {
                    let mut g = vec![T::zero(); in_shape.len()];
                    for oy in 0..out_shape.height {
                        for ox in 0..out_shape.width {
                            for c in 0..out_shape.channels {
                                let (y, x) = pool_argmax(input, in_shape, oy, ox, c, *window, *stride);
                                g[(y * in_shape.width + x) * in_shape.channels + c] +=
                                    grad[(oy * out_shape.width + ox) * out_shape.channels + c];
                            }
                        }
                    }
                    g
                }
                LayerKind::Softmax => unreachable!("softmax is terminal and excluded"),
            };
        }
        Ok(grad)
    }

    /// Sensitivity baseline: gradient of the pre-softmax score of `class`,
    /// reduced over channels by maximum absolute value.
    pub fn sensitivity_map(&self, x: &Image<T>, class: usize) -> Result<SensitivityMap<T>> {
        let grad = self.logit_gradient(x, class)?;
        let data = grad
            .chunks_exact(x.channels())
            .map(|px| px.iter().fold(T::zero(), |m, g| m.max(g.abs())))
            .collect();
        Ok(SensitivityMap { height: x.height(), width: x.width(), data })
    }
}
