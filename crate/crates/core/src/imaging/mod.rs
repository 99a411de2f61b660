//! Image I/O and heatmap rendering.

mod mask;
#[cfg(feature = "png")]
mod png_io;
mod ppm;
mod render;

pub use mask::{top_count, top_percent_mask, Mask};
pub use ppm::{decode_pnm, encode_pam, encode_pnm, load_image, save_image, save_rendered};
pub use render::{abs_quantile, render_heatmap, render_scores, DEFAULT_SATURATION_QUANTILE};

use crate::image::Image;

/// 8-bit RGBA raster. Fully transparent pixels are `(0, 0, 0, 0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedImage {
    pub height: usize,
    pub width: usize,
    pub rgba: Vec<u8>,
}

impl RenderedImage {
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 4] {
        let i = (row * self.width + col) * 4;
        [self.rgba[i], self.rgba[i + 1], self.rgba[i + 2], self.rgba[i + 3]]
    }

    /// Composites onto a solid background, for formats without alpha.
    pub fn flatten(&self, background: [u8; 3]) -> Image<f64> {
        let data = self
            .rgba
            .chunks_exact(4)
            .flat_map(|px| {
                let a = px[3] as f64 / 255.0;
                (0..3).map(move |c| {
                    let v = a * px[c] as f64 + (1.0 - a) * background[c] as f64;
                    v.round() / 255.0
                })
            })
            .collect();
        Image::new(self.height, self.width, 3, data).expect("rendered image dimensions are valid")
    }
}
