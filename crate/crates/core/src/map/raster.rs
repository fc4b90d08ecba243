use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{GridSpec, MapError, WorldMap};
use crate::geometry::{self, Point};

/// Number of network input channels produced by [`RasterStack::channels`].
pub const CHANNELS: usize = 5;

/// Multi-channel rasterization of a map around one focus landmark.
/// All grids are row-major over `spec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterStack {
    pub spec: GridSpec,
    pub focus_id: String,
    pub occupancy: Vec<f64>,
    pub focus: Vec<f64>,
    pub entrances: Vec<f64>,
    pub roads: Vec<f64>,
    /// Signed distance in meters to the focus boundary, negative inside.
    pub sdf: Vec<f64>,
    /// Scale used to bring `sdf` into roughly [-1, 1] for the network.
    pub sdf_scale: f64,
}

impl RasterStack {
    pub fn rows(&self) -> usize {
        self.spec.rows
    }

    pub fn cols(&self) -> usize {
        self.spec.cols
    }

    /// Network input in height-width-channel order: occupancy, focus mask,
    /// entrances, roads and sdf divided by the map diagonal.
    pub fn channels(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.spec.len() * CHANNELS);
        for i in 0..self.spec.len() {
            out.push(self.occupancy[i]);
            out.push(self.focus[i]);
            out.push(self.entrances[i]);
            out.push(self.roads[i]);
            out.push(self.sdf[i] / self.sdf_scale);
        }
        out
    }
}

/// Rasterizes `map` on `spec` with `focus` as the reference landmark.
pub fn rasterize(map: &WorldMap, focus: &str, spec: &GridSpec) -> Result<RasterStack, MapError> {
    let focus_lm = map
        .landmark(focus)
        .ok_or_else(|| MapError::UnknownLandmark(focus.into()))?;
    let n = spec.len();
    let mut occupancy = vec![0.0; n];
    let mut focus_mask = vec![0.0; n];
    let mut sdf = vec![0.0; n];
    let mut roads = vec![0.0; n];
    let mut entrance_core = vec![false; n];
    let half = spec.resolution / 2.0;

    for i in 0..n {
        let c = spec.center_of(i);
        if map.occupied(c) {
            occupancy[i] = 1.0;
        }
        let d = geometry::signed_distance(c, &focus_lm.polygon);
        sdf[i] = d;
        if focus_lm.contains(c) {
            focus_mask[i] = 1.0;
        }
        if map.roads.iter().any(|r| geometry::polyline_distance(c, r) <= half) {
            roads[i] = 1.0;
        }
        entrance_core[i] = focus_lm
            .entrances
            .iter()
            .any(|e: &Point| (e.x - c.x).abs() <= half && (e.y - c.y).abs() <= half);
    }

    // 3x3 dilation of the entrance cells
    let mut entrances = vec![0.0; n];
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if entrance_core[spec.index(r, c)] {
                entrances[spec.index(r, c)] = 1.0;
                for (nr, nc) in spec.neighbours(r, c) {
                    entrances[spec.index(nr, nc)] = 1.0;
                }
            }
        }
    }

    Ok(RasterStack {
        spec: *spec,
        focus_id: focus.into(),
        occupancy,
        focus: focus_mask,
        entrances,
        roads,
        sdf,
        sdf_scale: map.diagonal(),
    })
}
