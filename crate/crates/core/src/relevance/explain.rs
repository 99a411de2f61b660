//! Sliding-window prediction difference.
//!
//! For every `k × k` window the window is replaced by `S` samples from the
//! patch model, the target is re-evaluated on each perturbed image, and the
//! mean over samples stands in for the target with the window marginalized
//! out. The per-window measure is added to every pixel of the window and
//! the final score is the per-pixel average over covering windows.
//!
//! Windows are evaluated in parallel. Each window draws from a stream keyed
//! by its position and the results are merged in row-major window order, so
//! the output does not depend on the number of workers.

use super::config::{ClassLayer, ExplainConfig, Measure, SamplerKind, Target};
use super::map::RelevanceMap;
use super::measures::{activation_difference, weight_of_evidence};
use super::windows::{outer_start, window_starts};
use crate::classifier::Network;
use crate::error::{validation, Error, Result};
use crate::image::Image;
use crate::patch_model::{Conditioner, GaussianPatchModel, InnerOffset, MarginalSampler};
use crate::rng::Stream;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Where replacement values for a window come from.
#[derive(Debug, Clone, Copy)]
pub enum PatchSource<'a, T = f64> {
    Conditional(&'a GaussianPatchModel<T>),
    Marginal(&'a MarginalSampler<T>),
}

impl<T> PatchSource<'_, T> {
    pub fn kind(&self) -> SamplerKind {
        match self {
            PatchSource::Conditional(_) => SamplerKind::Conditional,
            PatchSource::Marginal(_) => SamplerKind::Marginal,
        }
    }
}

/// Units read from one layer's output after each forward pass.
#[derive(Debug, Clone)]
pub(crate) struct Readout {
    pub layer: usize,
    pub units: Vec<usize>,
}

fn readout_for<T: Scalar>(net: &Network<T>, target: &Target) -> Result<Readout> {
    let last = net.layers().len() - 1;
    match target {
        Target::Class { class, layer } => {
            if *class >= net.num_classes() {
                return Err(validation(format!(
                    "class {class} out of range for a network with {} classes",
                    net.num_classes()
                )));
            }
            let layer = match layer {
                ClassLayer::Probabilities => last,
                ClassLayer::Logits => last - 1,
            };
            Ok(Readout { layer, units: vec![*class] })
        }
        Target::Unit(tap) => {
            let (layer, units) = net.resolve_tap(tap)?;
            Ok(Readout { layer, units })
        }
    }
}

/// Validated, precomputed state shared by all windows of one run.
struct Plan<'a, T: Scalar> {
    net: &'a Network<T>,
    x: &'a Image<T>,
    source: PatchSource<'a, T>,
    config: &'a ExplainConfig,
    readout: Readout,
    rows: Vec<usize>,
    cols: Vec<usize>,
    conditioners: BTreeMap<InnerOffset, Conditioner<T>>,
    baseline: Vec<T>,
}

impl<'a, T: Scalar> Plan<'a, T> {
    fn new(
        net: &'a Network<T>,
        x: &'a Image<T>,
        source: PatchSource<'a, T>,
        config: &'a ExplainConfig,
        readout: Readout,
        only: Option<(usize, usize)>,
    ) -> Result<Self> {
        config.validate()?;
        if source.kind() != config.sampler {
            return Err(validation(format!(
                "config requests the {} sampler but a {} source was supplied",
                config.sampler.as_str(),
                source.kind().as_str()
            )));
        }
        let (k, l) = (config.inner, config.outer);
        let (h, w) = (x.height(), x.width());
        if h < k || w < k {
            return Err(validation(format!("{k}x{k} window larger than the {h}x{w} image")));
        }
        // Shape check against the network before any sampling work.
        let trace = net.forward(x).map(|_| net.trace(x.data(), Some(readout.layer)))?;
        let baseline = readout.units.iter().map(|&u| trace[readout.layer][u]).collect();
        let (rows, cols) = match only {
            Some((r, c)) => {
                if r + k > h || c + k > w {
                    return Err(validation(format!("window at ({r}, {c}) is outside the image")));
                }
                (vec![r], vec![c])
            }
            None => (window_starts(h, k, config.stride)?, window_starts(w, k, config.stride)?),
        };

        let mut conditioners = BTreeMap::new();
        match source {
            PatchSource::Conditional(model) => {
                let g = model.geometry();
                if g.inner() != k || g.outer() != l || g.channels() != x.channels() {
                    return Err(validation(format!(
                        "patch model geometry k={}, l={}, C={} does not match k={k}, l={l}, C={}",
                        g.inner(),
                        g.outer(),
                        g.channels(),
                        x.channels()
                    )));
                }
                if h < l || w < l {
                    return Err(validation(format!("{l}x{l} outer patch larger than the {h}x{w} image")));
                }
                let mut offsets: Vec<InnerOffset> = Vec::new();
                for &r in &rows {
                    for &c in &cols {
                        let off = InnerOffset { row: r - outer_start(r, h, k, l), col: c - outer_start(c, w, k, l) };
                        if !offsets.contains(&off) {
                            offsets.push(off);
                        }
                    }
                }
                let built: Vec<Conditioner<T>> =
                    offsets.par_iter().map(|&off| model.conditioner(off)).collect::<Result<_>>()?;
                conditioners.extend(built.into_iter().map(|c| (c.offset(), c)));
            }
            PatchSource::Marginal(m) => {
                if m.sources().iter().any(|s| s.channels() != x.channels()) {
                    return Err(validation("marginal source images differ in channel count from the input"));
                }
                m.check_location(h - k, w - k, k)?;
            }
        }
        Ok(Self { net, x, source, config, readout, rows, cols, conditioners, baseline })
    }

    fn replacements(&self, row: usize, col: usize, stream: &mut Stream) -> Result<Vec<Vec<T>>> {
        let (k, l, s) = (self.config.inner, self.config.outer, self.config.samples);
        match self.source {
            PatchSource::Conditional(_) => {
                let orow = outer_start(row, self.x.height(), k, l);
                let ocol = outer_start(col, self.x.width(), k, l);
                let off = InnerOffset { row: row - orow, col: col - ocol };
                let cond = self.conditioners[&off].condition(&self.x.block(orow, ocol, l))?;
                Ok(cond.sample(s, stream))
            }
            PatchSource::Marginal(m) => m.sample(row, col, k, s, stream),
        }
    }

    /// Mean target values over the replacement samples of one window.
    /// `scratch` must equal `x` on entry and is restored on exit.
    fn removed_values(&self, row: usize, col: usize, scratch: &mut Image<T>) -> Result<Vec<T>> {
        let k = self.config.inner;
        let mut stream = Stream::for_window(self.config.seed, row, col);
        let samples = self.replacements(row, col, &mut stream)?;
        let mut sums = vec![T::zero(); self.readout.units.len()];
        for sample in &samples {
            scratch.paste_block(row, col, k, sample);
            let trace = self.net.trace(scratch.data(), Some(self.readout.layer));
            let out = &trace[self.readout.layer];
            for (sum, &u) in sums.iter_mut().zip(&self.readout.units) {
                *sum += out[u];
            }
        }
        scratch.paste_block(row, col, k, &self.x.block(row, col, k));
        let n = T::of(samples.len() as f64);
        Ok(sums.into_iter().map(|s| s / n).collect())
    }

    fn window_measures(&self, row: usize, col: usize, scratch: &mut Image<T>) -> Result<Vec<T>> {
        let removed = self.removed_values(row, col, scratch)?;
        let measure = self.config.measure();
        self.baseline
            .iter()
            .zip(removed)
            .map(|(&full, rem)| match measure {
                Measure::WeightOfEvidence => weight_of_evidence(full, rem, self.config.laplace),
                Measure::ActivationDifference => Ok(activation_difference(full, rem)),
            })
            .collect()
    }

    fn run(&self, targets: Vec<Target>) -> Result<Vec<RelevanceMap<T>>> {
        let windows: Vec<(usize, usize)> =
            self.rows.iter().flat_map(|&r| self.cols.iter().map(move |&c| (r, c))).collect();
        let per_window: Vec<Vec<T>> = windows
            .par_iter()
            .map_init(|| self.x.clone(), |scratch, &(r, c)| self.window_measures(r, c, scratch))
            .collect::<Result<_>>()?;

        let (h, w, k) = (self.x.height(), self.x.width(), self.config.inner);
        let n_units = self.readout.units.len();
        let mut acc = vec![vec![T::zero(); h * w]; n_units];
        let mut counts = vec![0u32; h * w];
        for (&(r, c), values) in windows.iter().zip(&per_window) {
            for y in r..r + k {
                for px in y * w + c..y * w + c + k {
                    counts[px] += 1;
                    for (a, &v) in acc.iter_mut().zip(values) {
                        a[px] += v;
                    }
                }
            }
        }
        let measure = self.config.measure();
        acc.into_iter()
            .zip(targets)
            .map(|(sums, target)| {
                let scores: Vec<T> = sums.iter().zip(&counts).map(|(&s, &n)| s / T::of(n as f64)).collect();
                if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
                    return Err(Error::Numerical(format!("non-finite relevance at pixel {i}")));
                }
                Ok(RelevanceMap {
                    height: h,
                    width: w,
                    scores,
                    counts: counts.clone(),
                    measure,
                    config: ExplainConfig { target, ..self.config.clone() },
                })
            })
            .collect()
    }
}

/// Relevance of every pixel of `x` for `config.target`.
pub fn explain<T: Scalar>(
    net: &Network<T>,
    x: &Image<T>,
    source: PatchSource<'_, T>,
    config: &ExplainConfig,
) -> Result<RelevanceMap<T>> {
    let readout = readout_for(net, &config.target)?;
    if readout.units.len() != 1 {
        return Err(validation("explain needs a single-unit target; use feature-map analysis for whole maps"));
    }
    let plan = Plan::new(net, x, source, config, readout, None)?;
    Ok(plan.run(vec![config.target.clone()])?.remove(0))
}

/// One relevance map per listed unit of `layer`, sharing every perturbed
/// forward pass between the units.
pub(crate) fn explain_units<T: Scalar>(
    net: &Network<T>,
    x: &Image<T>,
    source: PatchSource<'_, T>,
    config: &ExplainConfig,
    layer: usize,
    units: Vec<usize>,
    targets: Vec<Target>,
) -> Result<Vec<RelevanceMap<T>>> {
    debug_assert_eq!(units.len(), targets.len());
    let plan = Plan::new(net, x, source, config, Readout { layer, units }, None)?;
    plan.run(targets)
}

/// The estimate of the target with the window at `(row, col)` marginalized
/// out (the sample mean over `config.samples` replacements).
pub fn removed_estimate<T: Scalar>(
    net: &Network<T>,
    x: &Image<T>,
    source: PatchSource<'_, T>,
    config: &ExplainConfig,
    row: usize,
    col: usize,
) -> Result<T> {
    let readout = readout_for(net, &config.target)?;
    if readout.units.len() != 1 {
        return Err(validation("removed_estimate needs a single-unit target"));
    }
    let plan = Plan::new(net, x, source, config, readout, Some((row, col)))?;
    let mut scratch = x.clone();
    Ok(plan.removed_values(row, col, &mut scratch)?[0])
}
