//! Feature-pyramid likelihood grounding network.

pub mod data;
pub mod layers;
pub mod model;
pub mod synth;
pub mod train;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use data::{raster_spec, TrainGroup, TrainSet};
pub use model::{CellTarget, LgnConfig, LgnModel, PyramidCache};
pub use synth::{synthesize_stage1, synthesize_stage2, SynthConfig, SynthData, SynthLocation};
pub use train::{lr_at, train_curriculum, train_stage, GradientBackend, SerialBackend, TrainConfig, TrainLog};

use crate::geometry::Point;
use crate::grounding::{GroundingError, GroundingModel};
use crate::map::{rasterize, WorldMap};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LgnError {
    #[error("invalid configuration {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cell ({row}, {col}) outside the raster")]
    OutsideGrid { row: usize, col: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("architecture mismatch: {0}")]
    Architecture(String),
    #[error("checkpoint version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("empty dataset for stage {0}")]
    EmptyStage(u8),
    #[error("map: {0}")]
    Map(#[from] crate::map::MapError),
    #[error("unknown map {0:?}")]
    UnknownMap(String),
}

/// `−[y ln p + (1 − y) ln(1 − p)]` for `p` in (0, 1).
pub fn nll(p: f64, label: f64) -> f64 {
    let mut out = 0.0;
    if label > 0.0 {
        out -= label * crate::math::log(p);
    }
    if label < 1.0 {
        out -= (1.0 - label) * crate::math::log(1.0 - p);
    }
    out
}

pub const CHECKPOINT_FORMAT: &str = "groundfuse-lgn";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serializable model: architecture descriptor plus flat weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgnCheckpoint {
    pub format: String,
    pub version: u32,
    pub config: LgnConfig,
    pub params: Vec<f64>,
}

impl LgnModel {
    pub fn checkpoint(&self) -> LgnCheckpoint {
        LgnCheckpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config,
            params: self.params.clone(),
        }
    }

    /// Rebuilds a model; with `expect`, the stored architecture must match.
    pub fn from_checkpoint(ck: LgnCheckpoint, expect: Option<&LgnConfig>) -> Result<Self, LgnError> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(LgnError::Architecture(format!("format {:?}", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(LgnError::Version { found: ck.version, expected: CHECKPOINT_VERSION });
        }
        if let Some(want) = expect {
            if *want != ck.config {
                return Err(LgnError::Architecture(format!("checkpoint {:?}, expected {:?}", ck.config, want)));
            }
        }
        LgnModel::from_params(ck.config, ck.params)
    }
}

impl GroundingModel for LgnModel {
    fn name(&self) -> String {
        if self.config.single_level { "lgn-single".into() } else { "lgn".into() }
    }

    fn predict_many(
        &self,
        map: &WorldMap,
        landmark_id: &str,
        relation: Relation,
        locations: &[Point],
    ) -> Result<Vec<f64>, GroundingError> {
        let spec = raster_spec(map, &self.config);
        let raster = rasterize(map, landmark_id, &spec).map_err(|e| match e {
            crate::map::MapError::UnknownLandmark(id) => GroundingError::UnknownLandmark(id),
            other => GroundingError::Map(other),
        })?;
        let err = |e: LgnError| GroundingError::Model(format!("{e}"));
        let cache = self.build_pyramid(&raster.channels(), spec.rows, spec.cols).map_err(err)?;
        locations
            .iter()
            .map(|&x| {
                let (r, c) = spec.cell_of(x).ok_or_else(|| GroundingError::Model(format!("location {x:?} outside the raster")))?;
                self.predict_cell(&cache, r, c, relation).map_err(err)
            })
            .collect()
    }
}
