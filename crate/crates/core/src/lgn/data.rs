//! Training examples grouped by (map, focus landmark) so each group needs
//! one raster and one pyramid pass.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::model::{CellTarget, LgnConfig};
use super::synth::SynthData;
use super::LgnError;
use crate::dataset::Dataset;
use crate::geometry::Point;
use crate::map::{rasterize, GridSpec, WorldMap};
use crate::relation::Relation;

/// Grid at the model's resolution covering `map`, with both sides rounded
/// up to the pyramid alignment.
pub fn raster_spec(map: &WorldMap, cfg: &LgnConfig) -> GridSpec {
    let mut spec = GridSpec::covering(map, cfg.resolution);
    let a = cfg.alignment();
    spec.rows = spec.rows.div_ceil(a) * a;
    spec.cols = spec.cols.div_ceil(a) * a;
    spec
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainGroup {
    pub map_id: String,
    pub focus_id: String,
    pub rows: usize,
    pub cols: usize,
    /// Raster channels, height-width-channel.
    pub input: Vec<f64>,
    pub targets: Vec<CellTarget>,
    /// Generating probability per target, when known.
    pub generator: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSet {
    pub groups: Vec<TrainGroup>,
}

/// (positives, labels, Σ p_gen · labels, labels with p_gen)
type Tally = (f64, f64, f64, f64);

fn build(
    maps: &BTreeMap<String, WorldMap>,
    items: impl Iterator<Item = (String, String, Point, Relation, f64, f64, Option<f64>)>,
    cfg: &LgnConfig,
) -> Result<TrainSet, LgnError> {
    let mut grouped: BTreeMap<(String, String), BTreeMap<(usize, usize, Relation), Tally>> = BTreeMap::new();
    for (map_id, focus, loc, rel, pos, n, p) in items {
        let map = maps.get(&map_id).ok_or_else(|| LgnError::UnknownMap(map_id.clone()))?;
        let spec = raster_spec(map, cfg);
        let (r, c) = spec.cell_of(loc).ok_or(LgnError::OutsideGrid { row: usize::MAX, col: usize::MAX })?;
        let t = grouped.entry((map_id, focus)).or_default().entry((r, c, rel)).or_insert((0.0, 0.0, 0.0, 0.0));
        t.0 += pos;
        t.1 += n;
        if let Some(p) = p {
            t.2 += p * n;
            t.3 += n;
        }
    }
    let mut groups = Vec::with_capacity(grouped.len());
    for ((map_id, focus_id), cells) in grouped {
        let map = &maps[&map_id];
        let spec = raster_spec(map, cfg);
        let raster = rasterize(map, &focus_id, &spec)?;
        let mut targets = Vec::with_capacity(cells.len());
        let mut generator = Vec::with_capacity(cells.len());
        for ((row, col, relation), (pos, n, psum, pn)) in cells {
            targets.push(CellTarget { row, col, relation, target: pos / n, weight: n });
            generator.push((pn > 0.0).then(|| psum / pn));
        }
        groups.push(TrainGroup { map_id, focus_id, rows: spec.rows, cols: spec.cols, input: raster.channels(), targets, generator });
    }
    Ok(TrainSet { groups })
}

impl TrainSet {
    pub fn from_dataset(data: &Dataset, cfg: &LgnConfig) -> Result<Self, LgnError> {
        build(
            &data.maps,
            data.points.iter().map(|p| {
                (p.map_id.clone(), p.landmark_id.clone(), p.location, p.relation, p.positive() as u8 as f64, 1.0, None)
            }),
            cfg,
        )
    }

    pub fn from_synth(data: &SynthData, cfg: &LgnConfig) -> Result<Self, LgnError> {
        build(
            &data.maps,
            data.locations.iter().map(|l| {
                (l.map_id.clone(), l.landmark_id.clone(), l.location, l.relation, l.positives as f64, l.draws as f64, Some(l.p))
            }),
            cfg,
        )
    }

    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(|g| g.targets.is_empty())
    }

    pub fn targets(&self) -> usize {
        self.groups.iter().map(|g| g.targets.len()).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.groups.iter().flat_map(|g| &g.targets).map(|t| t.weight).sum()
    }

    /// Label-weighted mean entropy of the generating probabilities: the
    /// lowest expected NLL any model can reach on fresh labels.
    pub fn generator_entropy(&self) -> Option<f64> {
        let mut h = 0.0;
        let mut w = 0.0;
        for g in &self.groups {
            for (t, p) in g.targets.iter().zip(&g.generator) {
                h += t.weight * crate::math::bernoulli_entropy((*p)?);
                w += t.weight;
            }
        }
        (w > 0.0).then(|| h / w)
    }
}
