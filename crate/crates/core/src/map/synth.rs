//! Random rectilinear maps for synthetic training data and search scenarios.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Landmark, SecurityCamera, WorldMap};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSynthConfig {
    pub width: f64,
    pub height: f64,
    pub landmarks: (usize, usize),
    /// Side-length range (meters) of small buildings.
    pub small_side: (u32, u32),
    /// Side-length range (meters) of large buildings.
    pub large_side: (u32, u32),
    /// Probability that a building is drawn from the large range.
    pub large_fraction: f64,
    /// Probability that a building is an L shape rather than a rectangle.
    pub l_shape_fraction: f64,
    pub max_entrances: usize,
    pub gap: f64,
    pub roads: usize,
    pub cameras: usize,
    pub camera_range: (f64, f64),
}

impl Default for MapSynthConfig {
    fn default() -> Self {
        Self {
            width: 64.0,
            height: 64.0,
            landmarks: (3, 6),
            small_side: (3, 6),
            large_side: (12, 20),
            large_fraction: 0.4,
            l_shape_fraction: 0.3,
            max_entrances: 3,
            gap: 3.0,
            roads: 1,
            cameras: 0,
            camera_range: (30.0, 45.0),
        }
    }
}

impl MapSynthConfig {
    /// Larger, camera-equipped maps for the search simulator.
    pub fn search_scale(size: f64) -> Self {
        Self {
            width: size,
            height: size,
            landmarks: (10, 16),
            small_side: (4, 8),
            large_side: (10, 18),
            large_fraction: 0.35,
            l_shape_fraction: 0.3,
            max_entrances: 3,
            gap: 4.0,
            roads: 2,
            cameras: 6,
            camera_range: (30.0, 45.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn overlaps(&self, o: &Rect, gap: f64) -> bool {
        self.x0 < o.x1 + gap && o.x0 < self.x1 + gap && self.y0 < o.y1 + gap && o.y0 < self.y1 + gap
    }
}

fn rect_polygon(r: &Rect) -> Vec<Point> {
    vec![
        Point::new(r.x0, r.y0),
        Point::new(r.x1, r.y0),
        Point::new(r.x1, r.y1),
        Point::new(r.x0, r.y1),
    ]
}

/// Rectangle with one corner notched out, counter-clockwise.
fn l_polygon(r: &Rect, corner: u8, nx: f64, ny: f64) -> Vec<Point> {
    let Rect { x0, y0, x1, y1 } = *r;
    let pts: [(f64, f64); 6] = match corner % 4 {
        // notch at north-east
        0 => [(x0, y0), (x1, y0), (x1, y1 - ny), (x1 - nx, y1 - ny), (x1 - nx, y1), (x0, y1)],
        // north-west
        1 => [(x0, y0), (x1, y0), (x1, y1), (x0 + nx, y1), (x0 + nx, y1 - ny), (x0, y1 - ny)],
        // south-west
        2 => [(x0 + nx, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0 + ny), (x0 + nx, y0 + ny)],
        // south-east
        _ => [(x0, y0), (x1 - nx, y0), (x1 - nx, y0 + ny), (x1, y0 + ny), (x1, y1), (x0, y1)],
    };
    pts.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

fn uniform_int<R: Rng + ?Sized>(rng: &mut R, range: (u32, u32)) -> f64 {
    rng.gen_range(range.0..=range.1.max(range.0)) as f64
}

/// Draws one random map. Coordinates are integral so rasterization on a
/// 1 m grid is exact.
pub fn random_map<R: Rng + ?Sized>(rng: &mut R, id: &str, cfg: &MapSynthConfig) -> WorldMap {
    let mut roads: Vec<Vec<Point>> = Vec::new();
    let mut blocked: Vec<Rect> = Vec::new();
    for k in 0..cfg.roads {
        let horizontal = k % 2 == 0;
        let span = if horizontal { cfg.height } else { cfg.width };
        let at = rng.gen_range(0.25 * span..0.75 * span) as i64 as f64 + 0.5;
        let (line, corridor) = if horizontal {
            (
                vec![Point::new(0.0, at), Point::new(cfg.width, at)],
                Rect { x0: 0.0, y0: at - 1.5, x1: cfg.width, y1: at + 1.5 },
            )
        } else {
            (
                vec![Point::new(at, 0.0), Point::new(at, cfg.height)],
                Rect { x0: at - 1.5, y0: 0.0, x1: at + 1.5, y1: cfg.height },
            )
        };
        roads.push(line);
        blocked.push(corridor);
    }

    let target = rng.gen_range(cfg.landmarks.0..=cfg.landmarks.1.max(cfg.landmarks.0));
    let mut rects: Vec<Rect> = Vec::new();
    let mut landmarks = Vec::new();
    let margin = 2.0;
    let mut attempts = 0;
    while landmarks.len() < target && attempts < 400 {
        attempts += 1;
        let large = rng.gen_bool(cfg.large_fraction);
        let range = if large { cfg.large_side } else { cfg.small_side };
        let w = uniform_int(rng, range);
        let h = uniform_int(rng, range);
        if w + 2.0 * margin >= cfg.width || h + 2.0 * margin >= cfg.height {
            continue;
        }
        let x0 = rng.gen_range(margin..cfg.width - margin - w) as i64 as f64;
        let y0 = rng.gen_range(margin..cfg.height - margin - h) as i64 as f64;
        let r = Rect { x0, y0, x1: x0 + w, y1: y0 + h };
        if rects.iter().any(|o| o.overlaps(&r, cfg.gap)) || blocked.iter().any(|o| o.overlaps(&r, 0.0)) {
            continue;
        }
        let polygon = if w >= 6.0 && h >= 6.0 && rng.gen_bool(cfg.l_shape_fraction) {
            let nx = (w / 2.0) as i64 as f64;
            let ny = (h / 2.0) as i64 as f64;
            l_polygon(&r, rng.gen_range(0..4), nx, ny)
        } else {
            rect_polygon(&r)
        };
        let n_ent = rng.gen_range(1..=cfg.max_entrances.max(1));
        let mut edges: Vec<usize> = (0..polygon.len()).collect();
        let mut entrances = Vec::new();
        for _ in 0..n_ent.min(edges.len()) {
            let k = rng.gen_range(0..edges.len());
            let e = edges.swap_remove(k);
            let a = polygon[e];
            let b = polygon[(e + 1) % polygon.len()];
            entrances.push((a + b) * 0.5);
        }
        let k = landmarks.len() + 1;
        landmarks.push(Landmark { id: format!("b{k}"), name: format!("Building {k}"), polygon, entrances });
        rects.push(r);
    }

    let mut cameras = Vec::new();
    let mut tries = 0;
    while cameras.len() < cfg.cameras && tries < 200 {
        tries += 1;
        let p = Point::new(
            rng.gen_range(1.0..cfg.width - 1.0) as i64 as f64 + 0.5,
            rng.gen_range(1.0..cfg.height - 1.0) as i64 as f64 + 0.5,
        );
        if rects.iter().any(|r| p.x >= r.x0 - 1.0 && p.x <= r.x1 + 1.0 && p.y >= r.y0 - 1.0 && p.y <= r.y1 + 1.0) {
            continue;
        }
        // aim roughly at the map center so cones cover streets, not walls
        let c = Point::new(cfg.width / 2.0, cfg.height / 2.0) - p;
        let jitter = rng.gen_range(-0.6..0.6);
        cameras.push(SecurityCamera {
            id: format!("cam{}", cameras.len() + 1),
            position: p,
            heading: crate::math::atan2(c.y, c.x) + jitter,
            fov: SecurityCamera::DEFAULT_FOV_DEG.to_radians(),
            range: rng.gen_range(cfg.camera_range.0..=cfg.camera_range.1),
        });
    }

    WorldMap { id: String::from(id), width: cfg.width, height: cfg.height, landmarks, roads, cameras }
}

/// The three-building map used to demonstrate sequential language fusion.
/// Building 4 sits west, building 6 east and building 5 between them to the
/// south, with its entrance facing south.
pub fn demo_map() -> WorldMap {
    let rect = |id: &str, name: &str, x0: f64, y0: f64, x1: f64, y1: f64, entrances: Vec<Point>| Landmark {
        id: id.into(),
        name: name.into(),
        polygon: rect_polygon(&Rect { x0, y0, x1, y1 }),
        entrances,
    };
    WorldMap {
        id: "demo".into(),
        width: 64.0,
        height: 64.0,
        landmarks: vec![
            rect("b4", "Building 4", 10.0, 30.0, 22.0, 44.0, vec![Point::new(22.0, 37.0)]),
            rect("b6", "Building 6", 40.0, 30.0, 52.0, 42.0, vec![Point::new(40.0, 36.0)]),
            rect("b5", "Building 5", 26.0, 12.0, 36.0, 20.0, vec![Point::new(31.0, 12.0)]),
        ],
        roads: vec![vec![Point::new(0.0, 25.5), Point::new(64.0, 25.5)]],
        cameras: vec![SecurityCamera {
            id: "cam1".into(),
            position: Point::new(31.5, 60.5),
            heading: -core::f64::consts::FRAC_PI_2,
            fov: SecurityCamera::DEFAULT_FOV_DEG.to_radians(),
            range: 40.0,
        }],
    }
}
