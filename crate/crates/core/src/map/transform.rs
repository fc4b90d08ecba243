use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::WorldMap;
use crate::geometry::Point;

/// An element of the square's symmetry group: an optional mirror about the
/// vertical center line followed by `rotations` quarter turns
/// counter-clockwise. Rotations swap width and height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Dihedral {
    pub rotations: u8,
    pub flip: bool,
}

impl Dihedral {
    pub const IDENTITY: Dihedral = Dihedral { rotations: 0, flip: false };

    pub const ALL: [Dihedral; 8] = [
        Dihedral { rotations: 0, flip: false },
        Dihedral { rotations: 1, flip: false },
        Dihedral { rotations: 2, flip: false },
        Dihedral { rotations: 3, flip: false },
        Dihedral { rotations: 0, flip: true },
        Dihedral { rotations: 1, flip: true },
        Dihedral { rotations: 2, flip: true },
        Dihedral { rotations: 3, flip: true },
    ];

    /// Short tag used to derive ids of transformed maps.
    pub fn tag(self) -> alloc::string::String {
        alloc::format!("r{}{}", self.rotations % 4, if self.flip { "f" } else { "" })
    }

    /// Extent after the transform.
    pub fn extent(self, width: f64, height: f64) -> (f64, f64) {
        if self.rotations % 2 == 1 {
            (height, width)
        } else {
            (width, height)
        }
    }

    pub fn apply_point(self, p: Point, width: f64, height: f64) -> Point {
        let (mut q, mut w, mut h) = (p, width, height);
        if self.flip {
            q = Point::new(w - q.x, q.y);
        }
        for _ in 0..self.rotations % 4 {
            q = Point::new(h - q.y, q.x);
            core::mem::swap(&mut w, &mut h);
        }
        q
    }

    /// Transforms every coordinate of the map. Mirroring reverses vertex
    /// order, so polygons stay simple but change orientation.
    pub fn apply_map(self, map: &WorldMap) -> WorldMap {
        let (w, h) = (map.width, map.height);
        let tp = |p: &Point| self.apply_point(*p, w, h);
        let (nw, nh) = self.extent(w, h);
        let mut out = map.clone();
        out.width = nw;
        out.height = nh;
        for lm in &mut out.landmarks {
            lm.polygon = lm.polygon.iter().map(tp).collect();
            lm.entrances = lm.entrances.iter().map(tp).collect();
        }
        for road in &mut out.roads {
            *road = road.iter().map(tp).collect();
        }
        for cam in &mut out.cameras {
            let tip = cam.position + Point::new(crate::math::cos(cam.heading), crate::math::sin(cam.heading));
            cam.position = tp(&cam.position);
            let dir = tp(&tip) - cam.position;
            cam.heading = crate::math::atan2(dir.y, dir.x);
        }
        out
    }

    /// Grid cell `(row, col)` of a `rows x cols` grid after the transform.
    pub fn apply_cell(self, row: usize, col: usize, rows: usize, cols: usize) -> (usize, usize) {
        let (mut r, mut c, mut nr, mut nc) = (row, col, rows, cols);
        if self.flip {
            c = nc - 1 - c;
        }
        for _ in 0..self.rotations % 4 {
            // (x, y) -> (H - y, x) on cell centers
            let new_c = nr - 1 - r;
            let new_r = c;
            r = new_r;
            c = new_c;
            core::mem::swap(&mut nr, &mut nc);
        }
        (r, c)
    }
}

/// Applies `t` to a row-major grid. Returns the grid in the transformed
/// shape (rows and columns swap for odd rotation counts).
pub fn transform_grid<T: Copy + Default>(grid: &[T], rows: usize, cols: usize, t: Dihedral) -> Vec<T> {
    let (nrows, ncols) = if t.rotations % 2 == 1 { (cols, rows) } else { (rows, cols) };
    let mut out = alloc::vec![T::default(); grid.len()];
    for r in 0..rows {
        for c in 0..cols {
            let (tr, tc) = t.apply_cell(r, c, rows, cols);
            debug_assert!(tr < nrows && tc < ncols);
            out[tr * ncols + tc] = grid[r * cols + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::GridSpec;

    #[test]
    fn cell_transform_matches_point_transform_on_centers() {
        let (rows, cols) = (4usize, 6usize);
        let spec = GridSpec::new(rows, cols, 1.0);
        for t in Dihedral::ALL {
            let (nw, nh) = t.extent(cols as f64, rows as f64);
            let tspec = GridSpec::new(nh as usize, nw as usize, 1.0);
            for r in 0..rows {
                for c in 0..cols {
                    let p = t.apply_point(spec.center(r, c), cols as f64, rows as f64);
                    let (tr, tc) = t.apply_cell(r, c, rows, cols);
                    assert_eq!(tspec.center(tr, tc), p, "{t:?}");
                }
            }
        }
    }

    #[test]
    fn four_quarter_turns_are_identity() {
        let p = Point::new(1.25, 3.5);
        let t = Dihedral { rotations: 1, flip: false };
        let mut q = p;
        let (mut w, mut h) = (10.0, 7.0);
        for _ in 0..4 {
            q = t.apply_point(q, w, h);
            core::mem::swap(&mut w, &mut h);
        }
        assert_eq!(q, p);
    }
}
