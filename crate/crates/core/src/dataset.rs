//! Labeled locations shared by expert fitting, network training and
//! evaluation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::map::WorldMap;
use crate::relation::Relation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Stage1Synthetic,
    Stage2Synthetic,
    Human,
}

/// One yes/no judgement of whether `relation` to `landmark_id` holds at
/// `location`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPoint {
    pub map_id: String,
    pub landmark_id: String,
    pub location: Point,
    pub relation: Relation,
    pub label: u8,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
}

impl AnnotatedPoint {
    pub fn positive(&self) -> bool {
        self.label != 0
    }
}

/// Points plus the maps they refer to, keyed by map id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub maps: BTreeMap<String, WorldMap>,
    pub points: Vec<AnnotatedPoint>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_map(&mut self, map: WorldMap) {
        self.maps.insert(map.id.clone(), map);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset of points, sharing the map table.
    pub fn select(&self, keep: impl Fn(&AnnotatedPoint) -> bool) -> Dataset {
        Dataset { maps: self.maps.clone(), points: self.points.iter().filter(|p| keep(p)).cloned().collect() }
    }

    /// Positive and total counts per relation.
    pub fn class_counts(&self) -> BTreeMap<Relation, (usize, usize)> {
        let mut out = BTreeMap::new();
        for p in &self.points {
            let e = out.entry(p.relation).or_insert((0, 0));
            e.0 += p.positive() as usize;
            e.1 += 1;
        }
        out
    }
}
