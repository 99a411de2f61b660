use super::measures::Laplace;
use crate::classifier::{LayerTap, Network};
use crate::error::{validation, Result};
use crate::scalar::Scalar;

/// Which output layer a class target reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLayer {
    /// Softmax probabilities `p(c|x)`; measured by weight of evidence.
    Probabilities,
    /// Pre-softmax scores `S_c`; measured by activation difference.
    Logits,
}

/// The quantity whose change is attributed to the input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    Class { class: usize, layer: ClassLayer },
    /// A single hidden (or output) unit; measured by activation difference.
    Unit(LayerTap),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Conditional,
    Marginal,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Conditional => "conditional",
            SamplerKind::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    WeightOfEvidence,
    ActivationDifference,
}

impl Measure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::WeightOfEvidence => "weight-of-evidence",
            Measure::ActivationDifference => "activation-difference",
        }
    }
}

/// Parameters of one sliding-window analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainConfig {
    /// Inner window size `k`.
    pub inner: usize,
    /// Outer (conditioning) patch size `l`.
    pub outer: usize,
    /// Replacement samples per window.
    pub samples: usize,
    pub target: Target,
    pub sampler: SamplerKind,
    /// Smoothing for probability targets; ignored by activation targets.
    pub laplace: Option<Laplace>,
    pub seed: u64,
    /// Window step; 1 visits every position.
    pub stride: usize,
}

impl ExplainConfig {
    /// Probability target for `class` with Laplace correction derived from the
    /// network (declared training-set size, class count) and stride 1.
    pub fn for_class<T: Scalar>(
        net: &Network<T>,
        class: usize,
        inner: usize,
        outer: usize,
        samples: usize,
        sampler: SamplerKind,
        seed: u64,
    ) -> Result<Self> {
        let laplace = Laplace::new(net.training_size().max(1), net.num_classes() as u32)?;
        Ok(Self {
            inner,
            outer,
            samples,
            target: Target::Class { class, layer: ClassLayer::Probabilities },
            sampler,
            laplace: Some(laplace),
            seed,
            stride: 1,
        })
    }

    pub fn measure(&self) -> Measure {
        match self.target {
            Target::Class { layer: ClassLayer::Probabilities, .. } => Measure::WeightOfEvidence,
            _ => Measure::ActivationDifference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner < 1 || self.outer <= self.inner {
            return Err(validation(format!(
                "window sizes require l > k >= 1 (got k={}, l={})",
                self.inner, self.outer
            )));
        }
        if self.samples < 1 {
            return Err(validation("at least one sample per window is required"));
        }
        if self.stride < 1 || self.stride > self.inner {
            return Err(validation(format!(
                "stride must be in 1..=k (got {} with k={}); larger strides leave pixels uncovered",
                self.stride, self.inner
            )));
        }
        if let Some(l) = self.laplace {
            Laplace::new(l.training_size, l.classes)?;
        }
        Ok(())
    }
}
