//! The environment model: polygonal landmarks with entrances, roads and
//! security cameras, plus the grid it is rasterized onto.

mod raster;
pub mod synth;
mod transform;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point};

pub use raster::{rasterize, RasterStack, CHANNELS};
pub use transform::{transform_grid, Dihedral};

/// Maximum distance an entrance may sit from its landmark's boundary.
pub const ENTRANCE_TOLERANCE_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("duplicate landmark id `{0}`")]
    DuplicateLandmark(String),
    #[error("landmark `{0}` polygon is not simple")]
    NotSimple(String),
    #[error("landmark `{id}` entrance {index} is {distance:.3} m from the boundary")]
    EntranceOffBoundary { id: String, index: usize, distance: f64 },
    #[error("coordinate ({x}, {y}) lies outside the map extent")]
    OutOfExtent { x: f64, y: f64 },
    #[error("map extent must be positive and finite")]
    BadExtent,
    #[error("camera `{0}` has a non-positive range or field of view")]
    BadCamera(String),
    #[error("unknown landmark `{0}`")]
    UnknownLandmark(String),
    #[error("grid does not cover the map extent")]
    GridTooSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: String,
    pub name: String,
    pub polygon: Vec<Point>,
    #[serde(default)]
    pub entrances: Vec<Point>,
}

impl Landmark {
    /// Largest vertex-to-vertex distance; the scale used by proximity rules.
    pub fn diameter(&self) -> f64 {
        geometry::diameter(&self.polygon)
    }

    pub fn contains(&self, p: Point) -> bool {
        geometry::point_in_polygon(p, &self.polygon)
    }

    pub fn signed_distance(&self, p: Point) -> f64 {
        geometry::signed_distance(p, &self.polygon)
    }

    /// One outward unit normal per entrance, taken from the boundary edge
    /// nearest to the entrance. Empty when the landmark has no entrances.
    pub fn front_directions(&self) -> Vec<Point> {
        self.entrances
            .iter()
            .filter_map(|&e| geometry::nearest_edge(e, &self.polygon))
            .map(|(edge, _)| geometry::outward_normal(&self.polygon, edge))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityCamera {
    pub id: String,
    pub position: Point,
    /// Heading in radians, counter-clockwise from +x (east).
    pub heading: f64,
    /// Full cone angle in radians.
    pub fov: f64,
    pub range: f64,
}

impl SecurityCamera {
    pub const DEFAULT_FOV_DEG: f64 = 45.0;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    pub id: String,
    pub width: f64,
    pub height: f64,
    pub landmarks: Vec<Landmark>,
    #[serde(default)]
    pub roads: Vec<Vec<Point>>,
    #[serde(default)]
    pub cameras: Vec<SecurityCamera>,
}

impl WorldMap {
    /// Checks every structural invariant of a map.
    pub fn validate(&self) -> Result<(), MapError> {
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(MapError::BadExtent);
        }
        let in_extent = |p: &Point| -> Result<(), MapError> {
            if p.x.is_finite() && p.y.is_finite() && (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y) {
                Ok(())
            } else {
                Err(MapError::OutOfExtent { x: p.x, y: p.y })
            }
        };
        for (i, lm) in self.landmarks.iter().enumerate() {
            if self.landmarks[..i].iter().any(|o| o.id == lm.id) {
                return Err(MapError::DuplicateLandmark(lm.id.clone()));
            }
            lm.polygon.iter().try_for_each(in_extent)?;
            if !geometry::is_simple(&lm.polygon) {
                return Err(MapError::NotSimple(lm.id.clone()));
            }
            for (index, e) in lm.entrances.iter().enumerate() {
                in_extent(e)?;
                let distance = geometry::signed_distance(*e, &lm.polygon).abs();
                if distance > ENTRANCE_TOLERANCE_M {
                    return Err(MapError::EntranceOffBoundary { id: lm.id.clone(), index, distance });
                }
            }
        }
        self.roads.iter().flatten().try_for_each(in_extent)?;
        for cam in &self.cameras {
            in_extent(&cam.position)?;
            if !(cam.range > 0.0 && cam.fov > 0.0) {
                return Err(MapError::BadCamera(cam.id.clone()));
            }
        }
        Ok(())
    }

    pub fn landmark(&self, id: &str) -> Option<&Landmark> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    pub fn landmark_index(&self, id: &str) -> Option<usize> {
        self.landmarks.iter().position(|l| l.id == id)
    }

    /// Is `p` inside (or on the boundary of) any landmark?
    pub fn occupied(&self, p: Point) -> bool {
        self.landmarks.iter().any(|l| l.contains(p))
    }

    pub fn diagonal(&self) -> f64 {
        crate::math::sqrt(self.width * self.width + self.height * self.height)
    }

    /// Does the straight segment `a`-`b` touch any landmark?
    pub fn segment_blocked(&self, a: Point, b: Point) -> bool {
        self.landmarks
            .iter()
            .any(|l| geometry::segment_hits_polygon(a, b, &l.polygon))
    }
}

/// A regular grid laid over the map. Row 0 is the southern-most row and
/// column 0 the western-most; cells are indexed row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub resolution: f64,
    pub origin: Point,
}

impl GridSpec {
    pub const DEFAULT_RESOLUTION: f64 = 1.0;

    pub fn new(rows: usize, cols: usize, resolution: f64) -> Self {
        Self { rows, cols, resolution, origin: Point::default() }
    }

    /// Smallest grid at `resolution` anchored at the origin that covers the map.
    pub fn covering(map: &WorldMap, resolution: f64) -> Self {
        let rows = crate::math::round(map.height / resolution).max(1.0) as usize;
        let cols = crate::math::round(map.width / resolution).max(1.0) as usize;
        let mut spec = Self::new(rows, cols, resolution);
        if (rows as f64) * resolution < map.height {
            spec.rows += 1;
        }
        if (cols as f64) * resolution < map.width {
            spec.cols += 1;
        }
        spec
    }

    pub fn covers(&self, map: &WorldMap) -> bool {
        self.origin.x <= 0.0
            && self.origin.y <= 0.0
            && self.origin.x + self.cols as f64 * self.resolution >= map.width
            && self.origin.y + self.rows as f64 * self.resolution >= map.height
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn center(&self, row: usize, col: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn center_of(&self, index: usize) -> Point {
        let (r, c) = self.row_col(index);
        self.center(r, c)
    }

    /// Cell containing `p`, if any.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.resolution;
        let fy = (p.y - self.origin.y) / self.resolution;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (c, r) = (crate::math::floor(fx) as usize, crate::math::floor(fy) as usize);
        // points on the far edge belong to the last cell
        let c = if c == self.cols && fx == self.cols as f64 { c - 1 } else { c };
        let r = if r == self.rows && fy == self.rows as f64 { r - 1 } else { r };
        (r < self.rows && c < self.cols).then_some((r, c))
    }

    /// Centers of the 8-connected neighbours of `(row, col)`.
    pub fn neighbours(&self, row: usize, col: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        const OFFSETS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
        OFFSETS.iter().filter_map(move |&(dr, dc)| {
            let r = row as isize + dr;
            let c = col as isize + dc;
            (r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols)
                .then_some((r as usize, c as usize))
        })
    }
}

/// Per-cell occupancy of `map` on `spec` (cell center inside any landmark).
pub fn occupancy_grid(map: &WorldMap, spec: &GridSpec) -> Vec<bool> {
    (0..spec.len()).map(|i| map.occupied(spec.center_of(i))).collect()
}
