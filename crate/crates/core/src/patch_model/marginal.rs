use crate::error::{validation, Result};
use crate::image::Image;
use crate::rng::Stream;
use crate::scalar::Scalar;

/// How a [`MarginalSampler`] picks the source image for each draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// Uniformly at random from the stream.
    #[default]
    Random,
    /// Draw `s` uses source `s mod n`. With `S` equal to the number of
    /// sources this enumerates the empirical distribution exactly.
    Cycle,
}

/// Replaces a window by the block at the same location in other images.
#[derive(Debug, Clone)]
pub struct MarginalSampler<T = f64> {
    sources: Vec<Image<T>>,
    selection: Selection,
}

impl<T: Scalar> MarginalSampler<T> {
    pub fn new(sources: Vec<Image<T>>, selection: Selection) -> Result<Self> {
        if sources.is_empty() {
            return Err(validation("marginal sampler needs at least one source image"));
        }
        let c = sources[0].channels();
        if sources.iter().any(|s| s.channels() != c) {
            return Err(validation("marginal source images must share a channel count"));
        }
        Ok(Self { sources, selection })
    }

    pub fn sources(&self) -> &[Image<T>] {
        &self.sources
    }

    pub fn selection(&self) -> Selection {
        self.selection
    }

    /// Checks that a `k × k` block at `(row, col)` lies inside every source.
    pub fn check_location(&self, row: usize, col: usize, k: usize) -> Result<()> {
        for (i, s) in self.sources.iter().enumerate() {
            if row + k > s.height() || col + k > s.width() {
                return Err(validation(format!(
                    "{k}x{k} block at ({row}, {col}) is outside source image {i} ({}x{})",
                    s.height(),
                    s.width()
                )));
            }
        }
        Ok(())
    }

    /// `count` inner blocks from the sources at `(row, col)`.
    pub fn sample(&self, row: usize, col: usize, k: usize, count: usize, stream: &mut Stream) -> Result<Vec<Vec<T>>> {
        self.check_location(row, col, k)?;
        Ok((0..count)
            .map(|s| {
                let i = match self.selection {
                    Selection::Random => stream.index(self.sources.len()),
                    Selection::Cycle => s % self.sources.len(),
                };
                self.sources[i].block(row, col, k)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;

    #[test]
    fn single_source_is_deterministic() {
        let data: Vec<f64> = (0..25).map(|v| v as f64 / 25.0).collect();
        let img = Image::new(5, 5, 1, data).unwrap();
        let m = MarginalSampler::new(vec![img.clone()], Selection::Random).unwrap();
        let mut s = Stream::new(1, Purpose::Auxiliary, 0, 0);
        for d in m.sample(1, 2, 2, 8, &mut s).unwrap() {
            assert_eq!(d, img.block(1, 2, 2));
        }
    }

    #[test]
    fn constant_sources() {
        let m = MarginalSampler::new(vec![Image::filled(4, 4, 3, 0.3).unwrap(); 3], Selection::Random).unwrap();
        let mut s = Stream::new(1, Purpose::Auxiliary, 0, 0);
        let draws = m.sample(0, 0, 3, 5, &mut s).unwrap();
        assert!(draws.iter().flatten().all(|&v| v == 0.3));
    }

    #[test]
    fn two_sources_are_balanced() {
        let a = Image::filled(4, 4, 1, 0.0).unwrap();
        let b = Image::filled(4, 4, 1, 1.0).unwrap();
        let m = MarginalSampler::new(vec![a, b], Selection::Random).unwrap();
        let mut s = Stream::new(42, Purpose::Auxiliary, 0, 0);
        let draws = m.sample(1, 1, 2, 1000, &mut s).unwrap();
        let ones = draws.iter().filter(|d| d[0] == 1.0).count();
        assert!((400..=600).contains(&ones), "{ones}");
    }

    #[test]
    fn out_of_bounds_location() {
        let m = MarginalSampler::new(vec![Image::filled(4, 4, 1, 0.0).unwrap()], Selection::Cycle).unwrap();
        let mut s = Stream::new(1, Purpose::Auxiliary, 0, 0);
        assert!(m.sample(3, 0, 2, 1, &mut s).is_err());
    }
}
