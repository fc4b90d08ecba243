//! Synthetic curriculum data drawn from the expert model on random maps.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotatedPoint, Dataset, Provenance};
use crate::expert::{likelihood_from_features, ExpertParams, Features};
use crate::geometry::Point;
use crate::map::synth::{random_map, MapSynthConfig};
use crate::map::{GridSpec, WorldMap};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub maps: MapSynthConfig,
    /// Focus landmarks drawn per map (all of them if fewer exist).
    pub focus_per_map: usize,
    /// Locations per (map, focus, relation).
    pub locations: usize,
    pub relations: Vec<Relation>,
    pub params: ExpertParams,
    /// Spacing of candidate locations (cell centers) in meters.
    pub resolution: f64,
    /// Prefix for generated map ids.
    pub id_prefix: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            maps: MapSynthConfig::default(),
            focus_per_map: 2,
            locations: 40,
            relations: Relation::ALL.to_vec(),
            params: ExpertParams::default(),
            resolution: 1.0,
            id_prefix: "synth".into(),
        }
    }
}

/// A location with its generating probability and aggregated labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLocation {
    pub map_id: String,
    pub landmark_id: String,
    pub location: Point,
    pub relation: Relation,
    pub p: f64,
    pub positives: u32,
    pub draws: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthData {
    pub maps: BTreeMap<String, WorldMap>,
    pub locations: Vec<SynthLocation>,
    pub provenance: Option<Provenance>,
}

impl SynthData {
    /// One annotated point per label draw.
    pub fn to_dataset(&self) -> Dataset {
        let provenance = self.provenance.unwrap_or(Provenance::Stage2Synthetic);
        let mut out = Dataset { maps: self.maps.clone(), points: Vec::new() };
        for l in &self.locations {
            for k in 0..l.draws {
                out.points.push(AnnotatedPoint {
                    map_id: l.map_id.clone(),
                    landmark_id: l.landmark_id.clone(),
                    location: l.location,
                    relation: l.relation,
                    label: (k < l.positives) as u8,
                    provenance,
                    annotator: None,
                });
            }
        }
        out
    }

    pub fn map_ids(&self) -> Vec<String> {
        self.maps.keys().cloned().collect()
    }

    /// Locations on the given maps only.
    pub fn restrict(&self, ids: &[String]) -> SynthData {
        SynthData {
            maps: self.maps.iter().filter(|(k, _)| ids.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
            locations: self.locations.iter().filter(|l| ids.contains(&l.map_id)).cloned().collect(),
            provenance: self.provenance,
        }
    }
}

/// Cell centers outside every landmark except `focus`.
fn eligible_cells(map: &WorldMap, focus: &str, resolution: f64) -> Vec<Point> {
    let spec = GridSpec::covering(map, resolution);
    (0..spec.len())
        .map(|i| spec.center_of(i))
        .filter(|&c| c.x < map.width && c.y < map.height)
        .filter(|&c| map.landmarks.iter().all(|l| l.id == focus || !l.contains(c)))
        .collect()
}

fn draw_maps<R: Rng + ?Sized>(rng: &mut R, n_maps: usize, cfg: &SynthConfig) -> Vec<WorldMap> {
    (0..n_maps).map(|i| random_map(rng, &format!("{}{i}", cfg.id_prefix), &cfg.maps)).collect()
}

fn foci<'a, R: Rng + ?Sized>(rng: &mut R, map: &'a WorldMap, k: usize) -> Vec<&'a str> {
    let mut ids: Vec<&str> = map.landmarks.iter().map(|l| l.id.as_str()).collect();
    ids.shuffle(rng);
    ids.truncate(k.max(1));
    ids.sort_unstable();
    ids
}

/// Hard labels: the expert likelihood thresholded at one half, which for
/// the sigmoid forms is the `τ → 0` limit. Each (map, focus, relation)
/// draws equal positive and negative counts, each uniformly from its class
/// (one class only if the other is empty).
pub fn synthesize_stage1<R: Rng + ?Sized>(rng: &mut R, n_maps: usize, cfg: &SynthConfig) -> SynthData {
    let mut data = SynthData { provenance: Some(Provenance::Stage1Synthetic), ..SynthData::default() };
    for map in draw_maps(rng, n_maps, cfg) {
        for focus in foci(rng, &map, cfg.focus_per_map) {
            let lm = map.landmark(focus).expect("focus drawn from the map");
            let fronts = lm.front_directions();
            let cells = eligible_cells(&map, focus, cfg.resolution);
            for &rel in &cfg.relations {
                let (pos, neg): (Vec<Point>, Vec<Point>) = cells
                    .iter()
                    .partition(|&&x| likelihood_from_features(rel, &cfg.params, &Features::with_fronts(x, lm, &fronts)) > 0.5);
                let half = cfg.locations / 2;
                for (pool, want, label) in [(&pos, half, true), (&neg, cfg.locations - half, false)] {
                    if pool.is_empty() {
                        continue;
                    }
                    for _ in 0..want {
                        data.locations.push(SynthLocation {
                            map_id: map.id.clone(),
                            landmark_id: focus.into(),
                            location: pool[rng.gen_range(0..pool.len())],
                            relation: rel,
                            p: label as u8 as f64,
                            positives: label as u32,
                            draws: 1,
                        });
                    }
                }
            }
        }
        data.maps.insert(map.id.clone(), map);
    }
    data
}

/// Stochastic labels: `draws` Bernoulli samples of the expert likelihood
/// at each uniformly drawn location.
pub fn synthesize_stage2<R: Rng + ?Sized>(rng: &mut R, n_maps: usize, draws: u32, cfg: &SynthConfig) -> SynthData {
    let mut data = SynthData { provenance: Some(Provenance::Stage2Synthetic), ..SynthData::default() };
    for map in draw_maps(rng, n_maps, cfg) {
        for focus in foci(rng, &map, cfg.focus_per_map) {
            let lm = map.landmark(focus).expect("focus drawn from the map");
            let fronts = lm.front_directions();
            let cells = eligible_cells(&map, focus, cfg.resolution);
            for &rel in &cfg.relations {
                for _ in 0..cfg.locations {
                    let x = cells[rng.gen_range(0..cells.len())];
                    let p = likelihood_from_features(rel, &cfg.params, &Features::with_fronts(x, lm, &fronts));
                    let positives = (0..draws).filter(|_| rng.gen_bool(p)).count() as u32;
                    data.locations.push(SynthLocation {
                        map_id: map.id.clone(),
                        landmark_id: focus.into(),
                        location: x,
                        relation: rel,
                        p,
                        positives,
                        draws,
                    });
                }
            }
        }
        data.maps.insert(map.id.clone(), map);
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, stream};

    #[test]
    fn stage1_is_balanced_and_rule_consistent() {
        let cfg = SynthConfig { locations: 20, ..SynthConfig::default() };
        let data = synthesize_stage1(&mut seeded(1, stream::SYNTH), 4, &cfg);
        let ds = data.to_dataset();
        for (rel, (pos, n)) in ds.class_counts() {
            let frac = pos as f64 / n as f64;
            assert!((0.3..=0.7).contains(&frac), "{rel}: {frac}");
        }
        assert!(ds.points.iter().all(|p| p.provenance == Provenance::Stage1Synthetic));
        // inside the focus "at" holds; at three diameters "near" does not
        for l in &data.locations {
            let lm = data.maps[&l.map_id].landmark(&l.landmark_id).unwrap();
            let d = lm.signed_distance(l.location);
            if l.relation == Relation::At && d < 0.0 {
                assert_eq!(l.positives, 1);
            }
            if l.relation == Relation::Near && d >= 3.0 * lm.diameter() {
                assert_eq!(l.positives, 0);
            }
        }
    }

    #[test]
    fn stage2_positive_rate_tracks_the_generator() {
        let cfg = SynthConfig { locations: 3, relations: alloc::vec![Relation::Near], ..SynthConfig::default() };
        let data = synthesize_stage2(&mut seeded(2, stream::SYNTH), 3, 100, &cfg);
        for l in &data.locations {
            assert_eq!(l.draws, 100);
            // binomial sd at m = 100 is at most 0.05
            let rate = l.positives as f64 / 100.0;
            assert!((rate - l.p).abs() <= 0.2, "{} vs {}", rate, l.p);
        }
        let mid: Vec<_> = data.locations.iter().filter(|l| (l.p - 0.7).abs() < 0.15).collect();
        for l in mid {
            assert!((l.positives as f64 / 100.0 - l.p).abs() <= 0.15);
        }
        let one = synthesize_stage2(&mut seeded(2, stream::SYNTH), 1, 1, &cfg);
        assert!(one.locations.iter().all(|l| l.draws == 1));
        assert_eq!(one.to_dataset().len(), one.locations.len());
        assert!(one.to_dataset().points.iter().all(|p| p.provenance == Provenance::Stage2Synthetic));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let cfg = SynthConfig { locations: 5, ..SynthConfig::default() };
        let a = synthesize_stage2(&mut seeded(9, stream::SYNTH), 2, 3, &cfg);
        let b = synthesize_stage2(&mut seeded(9, stream::SYNTH), 2, 3, &cfg);
        assert_eq!(a, b);
    }
}
