//! The interface between grounding models and the filter: a model maps
//! (relation, landmark, map) to a probability at any location.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::map::{occupancy_grid, GridSpec, MapError, WorldMap};
use crate::math::clamp;
use crate::relation::Relation;

/// Default probability floor applied to grounded fields.
pub const DEFAULT_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroundingError {
    #[error("unknown landmark {0:?}")]
    UnknownLandmark(String),
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("{0}")]
    Model(String),
}

/// Likelihood of one (relation, landmark) phrase over every cell of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodField {
    pub spec: GridSpec,
    pub relation: Relation,
    pub landmark_id: String,
    pub values: Vec<f64>,
}

impl LikelihoodField {
    /// Pointwise complement, used for negated observations.
    pub fn complement(&self) -> LikelihoodField {
        LikelihoodField {
            spec: self.spec,
            relation: self.relation,
            landmark_id: self.landmark_id.clone(),
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[self.spec.index(row, col)]
    }
}

pub trait GroundingModel {
    fn name(&self) -> String;

    /// Predicted probability that `relation` to `landmark_id` holds at each
    /// of `locations`.
    fn predict_many(
        &self,
        map: &WorldMap,
        landmark_id: &str,
        relation: Relation,
        locations: &[Point],
    ) -> Result<Vec<f64>, GroundingError>;

    fn predict(&self, map: &WorldMap, landmark_id: &str, relation: Relation, x: Point) -> Result<f64, GroundingError> {
        Ok(self.predict_many(map, landmark_id, relation, &[x])?[0])
    }

    /// Floor applied when the model's output is used as a filter field.
    fn floor(&self) -> f64 {
        DEFAULT_FLOOR
    }

    /// Field over `spec`: predictions at free-cell centers clamped to
    /// `[floor, 1 - floor]`, and the floor on occupied cells.
    fn ground_field(
        &self,
        map: &WorldMap,
        landmark_id: &str,
        relation: Relation,
        spec: &GridSpec,
    ) -> Result<LikelihoodField, GroundingError> {
        if map.landmark(landmark_id).is_none() {
            return Err(GroundingError::UnknownLandmark(landmark_id.into()));
        }
        let eps = self.floor();
        let occ = occupancy_grid(map, spec);
        let free: Vec<usize> = (0..spec.len()).filter(|&i| !occ[i]).collect();
        let pts: Vec<Point> = free.iter().map(|&i| spec.center_of(i)).collect();
        let p = self.predict_many(map, landmark_id, relation, &pts)?;
        let mut values = alloc::vec![eps; spec.len()];
        for (&i, v) in free.iter().zip(p) {
            values[i] = clamp(v, eps, 1.0 - eps);
        }
        Ok(LikelihoodField { spec: *spec, relation, landmark_id: landmark_id.into(), values })
    }
}
