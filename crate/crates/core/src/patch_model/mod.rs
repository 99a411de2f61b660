//! Statistical models of image patches used to simulate a missing window.
//!
//! Two regimes are supported:
//!
//! * [`MarginalSampler`]: the window is replaced by the block at the same
//!   location in another image (empirical marginal distribution).
//! * [`GaussianPatchModel`]: a joint Gaussian over the flattened
//!   `l × l × C` outer patch; the inner `k × k × C` block is sampled
//!   conditioned on the remaining outer pixels.
//!
//! Patches are flattened in the image layout: row, then column, then channel.

mod format;
mod gaussian;
mod marginal;

pub use format::{encode_model, load_model, parse_model, save_model, MODEL_MAGIC};
pub use gaussian::{ConditionalGaussian, Conditioner, GaussianPatchModel, DEFAULT_EPSILON};
pub use marginal::{MarginalSampler, Selection};

use crate::error::{validation, Result};
use crate::image::Image;
use crate::rng::{Purpose, Stream};
use crate::scalar::Scalar;

/// Inner window size `k`, outer context size `l` and channel count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchGeometry {
    inner: usize,
    outer: usize,
    channels: usize,
}

/// Position of the inner block's top-left corner inside the outer patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InnerOffset {
    pub row: usize,
    pub col: usize,
}

impl PatchGeometry {
    pub fn new(inner: usize, outer: usize, channels: usize) -> Result<Self> {
        if inner < 1 || outer <= inner {
            return Err(validation(format!(
                "patch geometry requires outer size l > inner size k >= 1 (got k={inner}, l={outer})"
            )));
        }
        if channels == 0 {
            return Err(validation("patch geometry needs at least one channel"));
        }
        Ok(Self { inner, outer, channels })
    }

    #[inline]
    pub fn inner(&self) -> usize {
        self.inner
    }

    #[inline]
    pub fn outer(&self) -> usize {
        self.outer
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn outer_len(&self) -> usize {
        self.outer * self.outer * self.channels
    }

    pub fn inner_len(&self) -> usize {
        self.inner * self.inner * self.channels
    }

    /// Centered offset; for odd `l - k` the extra pixel goes after the block.
    pub fn centered_offset(&self) -> InnerOffset {
        let margin = (self.outer - self.inner) / 2;
        InnerOffset { row: margin, col: margin }
    }

    pub fn check_offset(&self, offset: InnerOffset) -> Result<()> {
        let max = self.outer - self.inner;
        if offset.row > max || offset.col > max {
            return Err(validation(format!(
                "inner offset ({}, {}) does not fit a {}x{} block in a {}x{} patch",
                offset.row, offset.col, self.inner, self.inner, self.outer, self.outer
            )));
        }
        Ok(())
    }

    /// Flat indices of the inner block within the outer flattening, in the
    /// inner block's own flattening order.
    pub fn inner_indices(&self, offset: InnerOffset) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.inner_len());
        for r in offset.row..offset.row + self.inner {
            for c in offset.col..offset.col + self.inner {
                let base = (r * self.outer + c) * self.channels;
                idx.extend(base..base + self.channels);
            }
        }
        idx
    }

    /// Complement of [`PatchGeometry::inner_indices`], ascending.
    pub fn outer_only_indices(&self, offset: InnerOffset) -> Vec<usize> {
        let mut is_inner = vec![false; self.outer_len()];
        for i in self.inner_indices(offset) {
            is_inner[i] = true;
        }
        (0..self.outer_len()).filter(|&i| !is_inner[i]).collect()
    }
}

/// Flattened outer patches drawn from a set of images.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCorpus<T = f64> {
    geometry: PatchGeometry,
    /// `len() × outer_len` values, one patch per row.
    values: Vec<T>,
    /// `(image, row, col)` of each patch's top-left corner.
    positions: Vec<(usize, usize, usize)>,
    source_images: usize,
}

impl<T: Scalar> PatchCorpus<T> {
    /// Builds a corpus from explicit patch vectors.
    pub fn from_patches(geometry: PatchGeometry, patches: &[Vec<T>]) -> Result<Self> {
        let n = geometry.outer_len();
        let mut values = Vec::with_capacity(patches.len() * n);
        for (i, p) in patches.iter().enumerate() {
            if p.len() != n {
                return Err(validation(format!("patch {i} has {} values, expected {n}", p.len())));
            }
            if p.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
                return Err(validation(format!("patch {i} has values outside [0, 1]")));
            }
            values.extend_from_slice(p);
        }
        Ok(Self { geometry, values, positions: Vec::new(), source_images: 0 })
    }

    pub fn geometry(&self) -> PatchGeometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.geometry.outer_len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn patch(&self, i: usize) -> &[T] {
        let n = self.geometry.outer_len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn patches(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.geometry.outer_len())
    }

    pub fn positions(&self) -> &[(usize, usize, usize)] {
        &self.positions
    }

    pub fn source_images(&self) -> usize {
        self.source_images
    }
}

/// Samples `count` outer patches at uniformly random positions of uniformly
/// random images. Deterministic in `seed`.
pub fn extract_corpus<T: Scalar>(
    images: &[Image<T>],
    geometry: PatchGeometry,
    count: usize,
    seed: u64,
) -> Result<PatchCorpus<T>> {
    if images.is_empty() {
        return Err(validation("corpus extraction needs at least one image"));
    }
    if count == 0 {
        return Err(validation("corpus patch count must be at least 1"));
    }
    let l = geometry.outer();
    for (i, img) in images.iter().enumerate() {
        if img.height() < l || img.width() < l {
            return Err(validation(format!(
                "image {i} is {}x{}, smaller than the {l}x{l} outer patch",
                img.height(),
                img.width()
            )));
        }
        if img.channels() != geometry.channels() {
            return Err(validation(format!(
                "image {i} has {} channels, geometry expects {}",
                img.channels(),
                geometry.channels()
            )));
        }
    }
    let mut stream = Stream::new(seed, Purpose::Corpus, 0, 0);
    let mut values = Vec::with_capacity(count * geometry.outer_len());
    let mut positions = Vec::with_capacity(count);
    for _ in 0..count {
        let i = stream.index(images.len());
        let img = &images[i];
        let row = stream.index(img.height() - l + 1);
        let col = stream.index(img.width() - l + 1);
        values.extend(img.block(row, col, l));
        positions.push((i, row, col));
    }
    Ok(PatchCorpus { geometry, values, positions, source_images: images.len() })
}
