//! Spatial-language likelihood grounding and recursive Bayesian fusion.
//!
//! This crate holds the algorithmic core: map geometry and rasterization,
//! the spatial-relation parser, the expert rule likelihoods and their
//! maximum-likelihood fit, the feature-pyramid grounding network with its
//! curriculum trainer, the grid Bayes filter, the collaborative search
//! simulator and the evaluation protocol. It is `no_std` and only needs
//! `alloc`; file formats, the CLI and the session service live in the
//! `groundfuse` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod expert;
pub mod filter;
pub mod geometry;
pub mod grounding;
pub mod lgn;
pub mod map;
pub mod math;
pub mod parser;
pub mod relation;
pub mod rng;
pub mod search;

pub use dataset::{AnnotatedPoint, Dataset, Provenance};
pub use expert::{ExpertModel, ExpertParams};
pub use geometry::Point;
pub use grounding::{GroundingModel, LikelihoodField};
pub use map::{GridSpec, Landmark, RasterStack, SecurityCamera, WorldMap};
pub use parser::{Lexicon, SpatialObservation};
pub use relation::Relation;
