//! Relevance maps and their file format.
//!
//! ```text
//! "PDRM"
//! u32 height, u32 width
//! u8  measure (0 weight of evidence, 1 activation difference)
//! config echo:
//!   u32 k, u32 l, u32 samples, u32 stride
//!   u8  sampler (0 conditional, 1 marginal)
//!   u8  target kind (0 class probability, 1 class logit, 2 tapped unit, 3 tapped feature map)
//!   u32 class / unit / map index
//!   u32 layer name length, layer name bytes (empty for class targets)
//!   u8  Laplace flag, u64 N, u32 K (zero when off)
//!   u64 seed
//! f64 scores[height*width], u32 counts[height*width]
//! ```

use super::config::{ClassLayer, ExplainConfig, Measure, SamplerKind, Target};
use super::measures::Laplace;
use crate::binio::{Reader, Writer};
use crate::classifier::{LayerTap, UnitSelector};
use crate::error::{format_err, validation, Result};
use crate::scalar::Scalar;
use std::path::Path;

pub const MAP_MAGIC: &[u8; 4] = b"PDRM";

/// Per-pixel relevance scores with the window counts they were averaged over.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMap<T = f64> {
    pub height: usize,
    pub width: usize,
    pub scores: Vec<T>,
    pub counts: Vec<u32>,
    pub measure: Measure,
    pub config: ExplainConfig,
}

impl<T: Scalar> RelevanceMap<T> {
    #[inline]
    pub fn score(&self, row: usize, col: usize) -> T {
        self.scores[row * self.width + col]
    }

    #[inline]
    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.width + col]
    }

    pub fn max_abs(&self) -> T {
        self.scores.iter().fold(T::zero(), |m, s| m.max(s.abs()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAP_MAGIC);
        w.usize32(self.height);
        w.usize32(self.width);
        w.u8(match self.measure {
            Measure::WeightOfEvidence => 0,
            Measure::ActivationDifference => 1,
        });
        let c = &self.config;
        w.usize32(c.inner);
        w.usize32(c.outer);
        w.usize32(c.samples);
        w.usize32(c.stride);
        w.u8(match c.sampler {
            SamplerKind::Conditional => 0,
            SamplerKind::Marginal => 1,
        });
        let (kind, index, layer) = match &c.target {
            Target::Class { class, layer: ClassLayer::Probabilities } => (0, *class, ""),
            Target::Class { class, layer: ClassLayer::Logits } => (1, *class, ""),
            Target::Unit(LayerTap { layer, unit: UnitSelector::Unit(u) }) => (2, *u, layer.as_str()),
            Target::Unit(LayerTap { layer, unit: UnitSelector::FeatureMap(m) }) => (3, *m, layer.as_str()),
        };
        w.u8(kind);
        w.usize32(index);
        w.str(layer);
        match c.laplace {
            Some(l) => {
                w.u8(1);
                w.u64(l.training_size);
                w.u32(l.classes);
            }
            None => {
                w.u8(0);
                w.u64(0);
                w.u32(0);
            }
        }
        w.u64(c.seed);
        w.f64s(self.scores.iter().map(|v| v.to_f64_lossy()));
        for &n in &self.counts {
            w.u32(n);
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "relevance map");
        r.expect_magic(MAP_MAGIC)?;
        let height = r.usize32()?;
        let width = r.usize32()?;
        let measure = match r.u8()? {
            0 => Measure::WeightOfEvidence,
            1 => Measure::ActivationDifference,
            t => return Err(format_err(format!("relevance map: unknown measure tag {t}"))),
        };
        let inner = r.usize32()?;
        let outer = r.usize32()?;
        let samples = r.usize32()?;
        let stride = r.usize32()?;
        let sampler = match r.u8()? {
            0 => SamplerKind::Conditional,
            1 => SamplerKind::Marginal,
            t => return Err(format_err(format!("relevance map: unknown sampler tag {t}"))),
        };
        let kind = r.u8()?;
        let index = r.usize32()?;
        let layer = r.str()?;
        let target = match kind {
            0 => Target::Class { class: index, layer: ClassLayer::Probabilities },
            1 => Target::Class { class: index, layer: ClassLayer::Logits },
            2 => Target::Unit(LayerTap::unit(layer, index)),
            3 => Target::Unit(LayerTap::feature_map(layer, index)),
            t => return Err(format_err(format!("relevance map: unknown target tag {t}"))),
        };
        let laplace_on = r.u8()?;
        let n = r.u64()?;
        let k = r.u32()?;
        let laplace = match laplace_on {
            0 => None,
            1 => Some(Laplace::new(n, k).map_err(|e| format_err(format!("relevance map: {e}")))?),
            t => return Err(format_err(format!("relevance map: bad Laplace flag {t}"))),
        };
        let seed = r.u64()?;
        let len = height * width;
        let scores = r.f64s(len)?.into_iter().map(T::of).collect();
        let mut counts = Vec::with_capacity(len);
        for _ in 0..len {
            counts.push(r.u32()?);
        }
        r.finish()?;
        let config = ExplainConfig { inner, outer, samples, target, sampler, laplace, seed, stride };
        Ok(Self { height, width, scores, counts, measure, config })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Pointwise mean of several maps of equal shape, summed in order.
    pub fn mean_of(maps: &[RelevanceMap<T>]) -> Result<Self> {
        let first = maps.first().ok_or_else(|| validation("cannot average zero relevance maps"))?;
        if maps.iter().any(|m| m.height != first.height || m.width != first.width) {
            return Err(validation("relevance maps differ in shape"));
        }
        let mut scores = vec![T::zero(); first.scores.len()];
        for m in maps {
            for (a, &s) in scores.iter_mut().zip(&m.scores) {
                *a += s;
            }
        }
        let n = T::of(maps.len() as f64);
        scores.iter_mut().for_each(|s| *s /= n);
        Ok(Self { scores, ..first.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map(target: Target, laplace: Option<Laplace>) -> RelevanceMap {
        RelevanceMap {
            height: 2,
            width: 3,
            scores: vec![0.5, -1.25, 0.0, 1e-300, -0.0, 3.0],
            counts: vec![1, 2, 1, 1, 2, 1],
            measure: Measure::ActivationDifference,
            config: ExplainConfig {
                inner: 2,
                outer: 4,
                samples: 7,
                target,
                sampler: SamplerKind::Marginal,
                laplace,
                seed: u64::MAX - 3,
                stride: 1,
            },
        }
    }

    #[test]
    fn round_trip_every_target_kind() {
        let targets = [
            Target::Class { class: 3, layer: ClassLayer::Probabilities },
            Target::Class { class: 1, layer: ClassLayer::Logits },
            Target::Unit(LayerTap::unit("conv1", 17)),
            Target::Unit(LayerTap::feature_map("relu2", 4)),
        ];
        for t in targets {
            for lap in [None, Some(Laplace::new(10_000, 5).unwrap())] {
                let m = sample_map(t.clone(), lap);
                let bytes = m.to_bytes();
                let back = RelevanceMap::<f64>::from_bytes(&bytes).unwrap();
                assert_eq!(back.to_bytes(), bytes);
                assert_eq!(back.config, m.config);
            }
        }
    }

    #[test]
    fn truncated_file_is_format_error() {
        let bytes = sample_map(Target::Class { class: 0, layer: ClassLayer::Logits }, None).to_bytes();
        assert!(matches!(
            RelevanceMap::<f64>::from_bytes(&bytes[..bytes.len() - 2]),
            Err(crate::error::Error::Format(_))
        ));
    }

    #[test]
    fn mean_of_two_maps() {
        let a = sample_map(Target::Class { class: 0, layer: ClassLayer::Logits }, None);
        let mut b = a.clone();
        b.scores = vec![1.5, 1.25, 2.0, 0.0, 1.0, -3.0];
        let m = RelevanceMap::mean_of(&[a.clone(), b.clone()]).unwrap();
        for i in 0..6 {
            assert_eq!(m.scores[i], (a.scores[i] + b.scores[i]) / 2.0);
        }
    }
}
