//! Relevance of input pixels for hidden units and whole feature maps.
//!
//! Only the input layer is marginalized; the analysed quantity is any unit
//! of the network, measured by activation difference.

use crate::classifier::{LayerTap, Network, UnitSelector};
use crate::error::{validation, Result};
use crate::image::Image;
use crate::relevance::{explain, explain_units, ExplainConfig, PatchSource, RelevanceMap, Target};
use crate::rng::{Purpose, Stream};
use crate::scalar::Scalar;

/// Averaged relevance over (a subsample of) the units of one feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapReport<T = f64> {
    pub layer: String,
    pub map_index: usize,
    /// Flat indices (into the layer output) of the averaged units, ascending.
    pub units: Vec<usize>,
    /// Per-unit maps in `units` order, when retained.
    pub unit_maps: Option<Vec<RelevanceMap<T>>>,
    pub averaged: RelevanceMap<T>,
    /// Seed used to draw the unit subsample, if one was drawn.
    pub subsample_seed: Option<u64>,
}

impl<T> FeatureMapReport<T> {
    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// Text sidecar stored next to the averaged map.
    pub fn sidecar(&self) -> String {
        let mut s = format!("layer={}\nmap={}\nunits={}\n", self.layer, self.map_index, self.units.len());
        match self.subsample_seed {
            Some(seed) => s.push_str(&format!("subsample_seed={seed}\n")),
            None => s.push_str("subsample_seed=none\n"),
        }
        let list: Vec<String> = self.units.iter().map(|u| u.to_string()).collect();
        s.push_str(&format!("unit_indices={}\n", list.join(",")));
        s
    }
}

/// Relevance map for a single unit; `tap` must select exactly one unit.
pub fn unit_relevance<T: Scalar>(
    net: &Network<T>,
    x: &Image<T>,
    tap: &LayerTap,
    source: PatchSource<'_, T>,
    config: &ExplainConfig,
) -> Result<RelevanceMap<T>> {
    if !matches!(tap.unit, UnitSelector::Unit(_)) {
        return Err(validation("unit relevance needs a single-unit tap"));
    }
    let config = ExplainConfig { target: Target::Unit(tap.clone()), ..config.clone() };
    explain(net, x, source, &config)
}

/// Seeded uniform subsample of `count` distinct elements, returned ascending.
fn subsample(units: &[usize], count: usize, seed: u64) -> Vec<usize> {
    let mut pool = units.to_vec();
    let mut stream = Stream::new(seed, Purpose::UnitSubsample, 0, 0);
    for i in 0..count {
        let j = i + stream.index(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool.sort_unstable();
    pool
}

/// Averages unit relevance over every unit of feature map `map` in `layer`,
/// or over a seeded subsample of `subsample_count` units. All units share
/// the same perturbed forward passes.
#[allow(clippy::too_many_arguments)]
pub fn feature_map_relevance<T: Scalar>(
    net: &Network<T>,
    x: &Image<T>,
    layer: &str,
    map: usize,
    source: PatchSource<'_, T>,
    config: &ExplainConfig,
    subsample_count: Option<usize>,
    retain_units: bool,
) -> Result<FeatureMapReport<T>> {
    let (layer_idx, all_units) = net.resolve_tap(&LayerTap::feature_map(layer, map))?;
    let (units, subsample_seed) = match subsample_count {
        Some(0) => return Err(validation("unit subsample must be at least 1")),
        Some(n) if n < all_units.len() => (subsample(&all_units, n, config.seed), Some(config.seed)),
        _ => (all_units, None),
    };
    let config = ExplainConfig { target: Target::Unit(LayerTap::feature_map(layer, map)), ..config.clone() };
    let targets = units.iter().map(|&u| Target::Unit(LayerTap::unit(layer, u))).collect();
    let maps = explain_units(net, x, source, &config, layer_idx, units.clone(), targets)?;
    let mut averaged = RelevanceMap::mean_of(&maps)?;
    averaged.config.target = config.target;
    Ok(FeatureMapReport {
        layer: layer.to_string(),
        map_index: map,
        units,
        unit_maps: retain_units.then_some(maps),
        averaged,
        subsample_seed,
    })
}
