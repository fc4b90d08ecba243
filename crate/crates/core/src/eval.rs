//! NLL evaluation over labeled points: region-level splits, dihedral
//! augmentation, summary statistics and paired model comparison.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotatedPoint, Dataset};
use crate::geometry::Point;
use crate::grounding::{GroundingError, GroundingModel};
use crate::lgn::nll;
use crate::map::Dihedral;
use crate::math::{mean, sample_sd, sqrt};
use crate::relation::Relation;

pub const HISTOGRAM_WIDTH: f64 = 0.05;
pub const HISTOGRAM_MAX: f64 = 2.0;
pub const HISTOGRAM_BINS: usize = 40;

/// Predictions are kept this far from 0 and 1 so a confident miss costs a
/// large but finite NLL.
const P_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("need at least two regions to split, got {0}")]
    TooFewRegions(usize),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("paired vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("grounding: {0}")]
    Grounding(#[from] GroundingError),
}

/// Number of training regions for `n` regions at the 3:2 ratio, keeping at
/// least one region on each side.
pub fn train_region_count(n: usize) -> Result<usize, EvalError> {
    if n < 2 {
        return Err(EvalError::TooFewRegions(n));
    }
    Ok(((3 * n + 2) / 5).clamp(1, n - 1))
}

/// Splits points by map id (one map per region). Regions are shuffled
/// with `rng` and the first 3/5 go to training.
pub fn split_by_region<R: Rng + ?Sized>(data: &Dataset, rng: &mut R) -> Result<(Dataset, Dataset), EvalError> {
    let mut regions: Vec<&String> = data.maps.keys().filter(|id| data.points.iter().any(|p| &p.map_id == *id)).collect();
    let n_train = train_region_count(regions.len())?;
    regions.shuffle(rng);
    let train_ids: Vec<String> = regions[..n_train].iter().map(|s| (*s).clone()).collect();
    let test_ids: Vec<String> = regions[n_train..].iter().map(|s| (*s).clone()).collect();
    Ok((restrict(data, &train_ids), restrict(data, &test_ids)))
}

fn restrict(data: &Dataset, ids: &[String]) -> Dataset {
    Dataset {
        maps: data.maps.iter().filter(|(k, _)| ids.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        points: data.points.iter().filter(|p| ids.contains(&p.map_id)).cloned().collect(),
    }
}

/// Id of `map_id` under `t`; the identity keeps the original id.
pub fn transformed_id(map_id: &str, t: Dihedral) -> String {
    if t == Dihedral::IDENTITY {
        map_id.into()
    } else {
        format!("{map_id}~{}", t.tag())
    }
}

/// Adds a transformed copy of every map and point for each of
/// `transforms`. Labels, relations and landmark ids are unchanged.
pub fn augment(data: &Dataset, transforms: &[Dihedral]) -> Dataset {
    let mut out = Dataset::new();
    for &t in transforms {
        for map in data.maps.values() {
            let mut m = t.apply_map(map);
            m.id = transformed_id(&map.id, t);
            out.add_map(m);
        }
    }
    for p in &data.points {
        let Some(map) = data.maps.get(&p.map_id) else { continue };
        for &t in transforms {
            out.points.push(AnnotatedPoint {
                map_id: transformed_id(&p.map_id, t),
                location: t.apply_point(p.location, map.width, map.height),
                ..p.clone()
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationNll {
    pub relation: Relation,
    pub n: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NllReport {
    pub model: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Counts per 0.05-wide bin over `[0, 2]`; 2.0 itself lands in the last bin.
    pub histogram: Vec<usize>,
    /// Points with NLL above 2.
    pub overflow: usize,
    pub per_relation: Vec<RelationNll>,
}

pub fn histogram(values: &[f64]) -> (Vec<usize>, usize) {
    let mut bins = alloc::vec![0usize; HISTOGRAM_BINS];
    let mut overflow = 0;
    for &v in values {
        if v > HISTOGRAM_MAX {
            overflow += 1;
        } else {
            let k = ((v.max(0.0) / HISTOGRAM_WIDTH) as usize).min(HISTOGRAM_BINS - 1);
            bins[k] += 1;
        }
    }
    (bins, overflow)
}

/// Per-point NLL in dataset order. Points sharing a map, landmark and
/// relation are predicted in one call.
pub fn point_nll(model: &dyn GroundingModel, data: &Dataset) -> Result<Vec<f64>, EvalError> {
    let mut groups: BTreeMap<(&str, &str, Relation), Vec<usize>> = BTreeMap::new();
    for (i, p) in data.points.iter().enumerate() {
        groups.entry((&p.map_id, &p.landmark_id, p.relation)).or_default().push(i);
    }
    let mut out = alloc::vec![0.0; data.points.len()];
    for ((map_id, lm, rel), idx) in groups {
        let map = data.maps.get(map_id).ok_or_else(|| GroundingError::UnknownMap(map_id.into()))?;
        let locs: Vec<Point> = idx.iter().map(|&i| data.points[i].location).collect();
        let p = model.predict_many(map, lm, rel, &locs)?;
        for (&i, p) in idx.iter().zip(p) {
            let y = data.points[i].positive() as u8 as f64;
            out[i] = nll(p.clamp(P_GUARD, 1.0 - P_GUARD), y);
        }
    }
    Ok(out)
}

/// Summary of `values`, which must be per-point NLLs for `points`.
pub fn summarize_nll(model: &str, points: &[AnnotatedPoint], values: &[f64]) -> Result<NllReport, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    if points.len() != values.len() {
        return Err(EvalError::LengthMismatch(points.len(), values.len()));
    }
    let (histogram, overflow) = histogram(values);
    let mut by_rel: BTreeMap<Relation, Vec<f64>> = BTreeMap::new();
    for (p, v) in points.iter().zip(values) {
        by_rel.entry(p.relation).or_default().push(*v);
    }
    Ok(NllReport {
        model: model.into(),
        n: values.len(),
        mean: mean(values),
        sd: sample_sd(values),
        histogram,
        overflow,
        per_relation: by_rel.into_iter().map(|(relation, v)| RelationNll { relation, n: v.len(), mean: mean(&v) }).collect(),
    })
}

pub fn eval_nll(model: &dyn GroundingModel, data: &Dataset) -> Result<(NllReport, Vec<f64>), EvalError> {
    if data.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let values = point_nll(model, data)?;
    let report = summarize_nll(&model.name(), &data.points, &values)?;
    Ok((report, values))
}

/// Paired differences `a - b`. `t` is `None` when the differences have no
/// spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedStats {
    pub n: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t: Option<f64>,
    pub df: usize,
}

pub fn paired_stats(a: &[f64], b: &[f64]) -> Result<PairedStats, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(EvalError::EmptyTestSet);
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let mean_diff = mean(&d);
    let sd_diff = sample_sd(&d);
    let t = (sd_diff > 0.0).then(|| mean_diff / (sd_diff / sqrt(n as f64)));
    Ok(PairedStats { n, mean_diff, sd_diff, t, df: n - 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use rand::Rng;
    use crate::expert::{ChanceModel, ExpertModel, ExpertParams};
    use crate::map::synth::{random_map, MapSynthConfig};
    use crate::map::{rasterize, GridSpec};
    use crate::rng::{seeded, stream};
    use proptest::prelude::*;

    fn dataset(n_maps: usize, per_map: usize, seed: u64) -> Dataset {
        let mut rng = seeded(seed, stream::SYNTH);
        let mut data = Dataset::new();
        for m in 0..n_maps {
            let map = random_map(&mut rng, &format!("r{m:02}"), &MapSynthConfig::default());
            for k in 0..per_map {
                let lm = &map.landmarks[k % map.landmarks.len()];
                data.points.push(AnnotatedPoint {
                    map_id: map.id.clone(),
                    landmark_id: lm.id.clone(),
                    location: Point::new(rng.gen_range(0.0..map.width), rng.gen_range(0.0..map.height)),
                    relation: Relation::ALL[k % Relation::ALL.len()],
                    label: rng.gen_range(0..2),
                    provenance: Provenance::Human,
                    annotator: Some(format!("a{}", k % 3)),
                });
            }
            data.add_map(map);
        }
        data
    }

    #[test]
    fn region_counts_follow_three_to_two() {
        assert_eq!(train_region_count(35).unwrap(), 21);
        assert_eq!(train_region_count(5).unwrap(), 3);
        assert_eq!(train_region_count(2).unwrap(), 1);
        assert_eq!(train_region_count(1), Err(EvalError::TooFewRegions(1)));
        assert_eq!(train_region_count(0), Err(EvalError::TooFewRegions(0)));
    }

    #[test]
    fn split_is_a_region_partition() {
        let data = dataset(35, 4, 1);
        let (train, test) = split_by_region(&data, &mut seeded(7, stream::SPLIT)).unwrap();
        assert_eq!((train.maps.len(), test.maps.len()), (21, 14));
        assert_eq!(train.len() + test.len(), data.len());
        assert!(train.points.iter().all(|p| train.maps.contains_key(&p.map_id) && !test.maps.contains_key(&p.map_id)));
        assert!(test.points.iter().all(|p| test.maps.contains_key(&p.map_id)));
        let again = split_by_region(&data, &mut seeded(7, stream::SPLIT)).unwrap();
        assert_eq!(again.0, train);

        let small = dataset(5, 2, 2);
        let (a, b) = split_by_region(&small, &mut seeded(1, stream::SPLIT)).unwrap();
        assert_eq!((a.maps.len(), b.maps.len()), (3, 2));
        let one = dataset(1, 3, 3);
        assert_eq!(split_by_region(&one, &mut seeded(1, stream::SPLIT)), Err(EvalError::TooFewRegions(1)));
    }

    #[test]
    fn full_augmentation_has_eight_records_per_point() {
        let data = dataset(1, 1, 4);
        let aug = augment(&data, &Dihedral::ALL);
        assert_eq!(aug.len(), 8);
        assert_eq!(aug.maps.len(), 8);
        assert!(aug.points.iter().all(|p| p.label == data.points[0].label && p.relation == data.points[0].relation));
        assert!(aug.points.iter().any(|p| p.map_id == data.points[0].map_id));
    }

    /// A transformed point falls in the transformed raster cell, and the
    /// raster of the transformed map matches the transformed raster.
    #[test]
    fn augmented_points_rasterize_consistently() {
        let data = dataset(1, 6, 5);
        let map = data.maps.values().next().unwrap();
        let spec = GridSpec::covering(map, 1.0);
        let aligned = map.width == (spec.cols as f64) && map.height == (spec.rows as f64);
        assert!(aligned, "synthetic maps have integer extents");
        let focus = &data.points[0].landmark_id;
        let base = rasterize(map, focus, &spec).unwrap().channels();
        let ch = base.len() / spec.len();
        for t in Dihedral::ALL {
            let aug = augment(&data, &[t]);
            let tmap = &aug.maps[&transformed_id(&map.id, t)];
            let tspec = GridSpec::covering(tmap, 1.0);
            for (p, q) in data.points.iter().zip(&aug.points) {
                let (r, c) = spec.cell_of(p.location).unwrap();
                assert_eq!(tspec.cell_of(q.location), Some(t.apply_cell(r, c, spec.rows, spec.cols)));
            }
            let traster = rasterize(tmap, focus, &tspec).unwrap().channels();
            let mut mismatched = 0;
            for r in 0..spec.rows {
                for c in 0..spec.cols {
                    let (tr, tc) = t.apply_cell(r, c, spec.rows, spec.cols);
                    for k in 0..ch {
                        if base[(r * spec.cols + c) * ch + k] != traster[(tr * tspec.cols + tc) * ch + k] {
                            mismatched += 1;
                        }
                    }
                }
            }
            // boundary cells whose centers sit exactly on an edge may flip
            assert!(mismatched * 100 <= spec.len() * ch, "{}: {mismatched}", t.tag());
        }
    }

    #[test]
    fn histogram_counts_and_overflow() {
        let (bins, over) = histogram(&[0.0, 0.049, 0.05, 1.99, 2.0, 2.01, 7.0]);
        assert_eq!(over, 2);
        assert_eq!(bins.iter().sum::<usize>(), 5);
        assert_eq!((bins[0], bins[1], bins[39]), (2, 1, 2));
    }

    #[test]
    fn chance_has_unit_mean_and_sd() {
        let data = dataset(4, 2500, 6);
        let (report, values) = eval_nll(&ChanceModel::new(11), &data).unwrap();
        assert_eq!(values.len(), 10_000);
        assert!((0.95..=1.05).contains(&report.mean), "{}", report.mean);
        assert!((0.9..=1.1).contains(&report.sd), "{}", report.sd);
        assert_eq!(report.histogram.iter().sum::<usize>() + report.overflow, 10_000);
        assert_eq!(report.per_relation.iter().map(|r| r.n).sum::<usize>(), 10_000);
    }

    /// Labels drawn from the clamped expert: a point labeled with the
    /// likelihood's own rounding costs `-ln(1 - 0.01)` when the expert
    /// saturates.
    #[test]
    fn saturated_expert_costs_the_floor() {
        let mut data = dataset(2, 200, 8);
        let expert = ExpertModel { params: ExpertParams::default() };
        let mut keep = Vec::new();
        for p in &data.points {
            let v = expert.predict(&data.maps[&p.map_id], &p.landmark_id, p.relation, p.location).unwrap();
            if v <= 0.01 || v >= 0.99 {
                keep.push(AnnotatedPoint { label: (v >= 0.99) as u8, ..p.clone() });
            }
        }
        assert!(keep.len() > 50);
        data.points = keep;
        let (report, _) = eval_nll(&expert, &data).unwrap();
        assert!((report.mean + libm::log(0.99)).abs() < 1e-9, "{}", report.mean);
    }

    #[test]
    fn empty_test_set_is_an_error() {
        assert_eq!(eval_nll(&ChanceModel::new(1), &Dataset::new()).unwrap_err(), EvalError::EmptyTestSet);
    }

    #[test]
    fn paired_stats_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let s = paired_stats(&a, &a).unwrap();
        assert_eq!((s.mean_diff, s.t), (0.0, None));
        let b = [0.5, 1.0, 2.0, 2.5];
        let ab = paired_stats(&a, &b).unwrap();
        let ba = paired_stats(&b, &a).unwrap();
        assert_eq!(ab.mean_diff, -ba.mean_diff);
        assert_eq!(ab.t.unwrap(), -ba.t.unwrap());
        // d = (0.5, 1, 1, 1.5): mean 1, sd sqrt(1/6), t = 1 / (sqrt(1/6) / 2)
        assert!((ab.t.unwrap() - 2.0 * libm::sqrt(6.0)).abs() < 1e-12);
        assert_eq!(ab.df, 3);
        assert_eq!(paired_stats(&a, &b[..3]), Err(EvalError::LengthMismatch(4, 3)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn augmentation_preserves_label_means(seed in 0u64..1000, k in 1usize..8) {
            let data = dataset(2, 10, seed);
            let aug = augment(&data, &Dihedral::ALL[..k]);
            let before = data.class_counts();
            let after = aug.class_counts();
            for (rel, (pos, n)) in before {
                let (apos, an) = after[&rel];
                prop_assert_eq!((apos, an), (pos * k, n * k));
            }
        }

        #[test]
        fn split_never_shares_a_region(n in 2usize..12, seed in 0u64..1000) {
            let data = dataset(n, 2, seed);
            let (train, test) = split_by_region(&data, &mut seeded(seed, stream::SPLIT)).unwrap();
            prop_assert!(train.maps.keys().all(|k| !test.maps.contains_key(k)));
            prop_assert_eq!(train.len() + test.len(), data.len());
            prop_assert_eq!(train.maps.len(), train_region_count(n).unwrap());
        }
    }

    #[test]
    fn transformed_ids() {
        assert_eq!(transformed_id("m", Dihedral::IDENTITY), "m");
        assert_eq!(transformed_id("m", Dihedral { rotations: 1, flip: true }), "m~r1f");
    }
}
