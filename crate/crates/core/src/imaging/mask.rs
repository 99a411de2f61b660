use crate::error::{validation, Result};
use crate::image::Image;
use crate::scalar::Scalar;

/// Boolean per-pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub height: usize,
    pub width: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// White where set, black elsewhere.
    pub fn to_image(&self) -> Image<f64> {
        let data = self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Image::new(self.height, self.width, 1, data).expect("mask dimensions are valid")
    }
}

/// Number of pixels kept by a top-`percent` mask over `n` pixels.
pub fn top_count(percent: f64, n: usize) -> usize {
    // Multiply before dividing so integral percentages stay exact.
    ((percent * n as f64) / 100.0).ceil().min(n as f64) as usize
}

/// Marks the `⌈p/100 · n⌉` pixels with the largest `|score|`; ties go to the
/// earlier pixel in row-major order.
pub fn top_percent_mask<T: Scalar>(height: usize, width: usize, scores: &[T], percent: f64) -> Result<Mask> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(validation(format!("mask percentage must lie in (0, 100], got {percent}")));
    }
    if scores.len() != height * width {
        return Err(validation("score array does not match the map shape"));
    }
    let keep = top_count(percent, scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .abs()
            .partial_cmp(&scores[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut data = vec![false; scores.len()];
    for &i in &order[..keep] {
        data[i] = true;
    }
    Ok(Mask { height, width, data })
}
