//! Dense images with intensities in `[0, 1]`.

use crate::error::{validation, Result};
use crate::scalar::Scalar;

/// Row-major `height × width × channels` image, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T = f64> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> Image<T> {
    /// Builds an image, checking the length and the `[0, 1]` range.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(validation("image dimensions must be non-zero"));
        }
        if data.len() != height * width * channels {
            return Err(validation(format!(
                "image data has {} values, expected {}x{}x{} = {}",
                data.len(),
                height,
                width,
                channels,
                height * width * channels
            )));
        }
        if let Some(bad) = data.iter().position(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(validation(format!("image value {} at index {bad} outside [0, 1]", data[bad])));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> T {
        self.data[self.index(row, col, channel)]
    }

    /// Copies the `size × size × C` block with top-left corner `(row, col)`.
    pub fn block(&self, row: usize, col: usize, size: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(size * size * self.channels);
        for r in row..row + size {
            let start = self.index(r, col, 0);
            out.extend_from_slice(&self.data[start..start + size * self.channels]);
        }
        out
    }

    /// Writes a block previously obtained from [`Image::block`] (or a sample
    /// of the same layout) back at `(row, col)`.
    pub(crate) fn paste_block(&mut self, row: usize, col: usize, size: usize, values: &[T]) {
        let stride = size * self.channels;
        for (dr, chunk) in values.chunks_exact(stride).enumerate() {
            let start = self.index(row + dr, col, 0);
            self.data[start..start + stride].copy_from_slice(chunk);
        }
    }

    /// Luma conversion (ITU-R BT.601 weights); single-channel images are returned as is.
    pub fn to_grayscale(&self) -> Image<T> {
        if self.channels == 1 {
            return self.clone();
        }
        let (wr, wg, wb) = (T::of(0.299), T::of(0.587), T::of(0.114));
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| {
                let y = if self.channels >= 3 { wr * px[0] + wg * px[1] + wb * px[2] } else { px[0] };
                y.max(T::zero()).min(T::one())
            })
            .collect();
        Image { height: self.height, width: self.width, channels: 1, data }
    }

    pub fn cast<U: Scalar>(&self) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_bad_length() {
        assert!(Image::new(1, 1, 1, vec![1.5f64]).is_err());
        assert!(Image::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0f64; 3]).is_err());
    }

    #[test]
    fn block_and_paste_are_inverse() {
        let data: Vec<f64> = (0..48).map(|v| v as f64 / 48.0).collect();
        let img = Image::new(4, 4, 3, data).unwrap();
        let b = img.block(1, 2, 2);
        assert_eq!(b.len(), 12);
        assert_eq!(b[0], img.get(1, 2, 0));
        assert_eq!(b[11], img.get(2, 3, 2));
        let mut copy = Image::filled(4, 4, 3, 0.0).unwrap();
        copy.paste_block(1, 2, 2, &b);
        assert_eq!(copy.block(1, 2, 2), b);
    }
}
