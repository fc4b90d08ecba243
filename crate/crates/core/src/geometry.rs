//! Planar geometry in meters: points, segments and simple polygons.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::math::sqrt;

/// Tolerance used to decide that a point lies on a segment.
pub const ON_EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        if n > 0.0 {
            Some(Point::new(self.x / n, self.y / n))
        } else {
            None
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Euclidean distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = crate::math::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    p.dist(a + ab * t)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Iterator over the closed polygon's edges `(v[i], v[i+1])`.
pub fn edges(poly: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = poly.len();
    (0..n).map(move |i| (poly[i], poly[(i + 1) % n]))
}

/// True when `p` is within [`ON_EDGE_EPS`] of the polygon boundary.
pub fn on_boundary(p: Point, poly: &[Point]) -> bool {
    edges(poly).any(|(a, b)| point_segment_distance(p, a, b) <= ON_EDGE_EPS)
}

/// Even-odd containment. Points on the boundary count as inside.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    if on_boundary(p, poly) {
        return true;
    }
    let mut inside = false;
    for (a, b) in edges(poly) {
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance to the polygon boundary, negative inside and zero on it.
pub fn signed_distance(p: Point, poly: &[Point]) -> f64 {
    let d = edges(poly)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min);
    if d > 0.0 && point_in_polygon(p, poly) {
        -d
    } else {
        d
    }
}

/// Twice the signed area; positive for counter-clockwise vertex order.
pub fn signed_area2(poly: &[Point]) -> f64 {
    edges(poly).map(|(a, b)| a.cross(b)).sum()
}

/// Simple polygon check: at least three vertices, no zero-length edges and
/// no two non-adjacent edges touching.
pub fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    if edges(poly).any(|(a, b)| a == b) {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    // adjacent edges folding back on themselves
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        if orient(a, b, c) == 0.0 && (c - b).dot(a - b) > 0.0 {
            return false;
        }
    }
    signed_area2(poly) != 0.0
}

/// Largest distance between any two vertices.
pub fn diameter(poly: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in poly.iter().enumerate() {
        for b in &poly[i + 1..] {
            best = best.max(a.dist(*b));
        }
    }
    best
}

/// Index of the edge closest to `p` together with that distance.
pub fn nearest_edge(p: Point, poly: &[Point]) -> Option<(usize, f64)> {
    edges(poly)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .enumerate()
        .fold(None, |best, (i, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((i, d)),
        })
}

/// Outward unit normal of edge `i`.
pub fn outward_normal(poly: &[Point], i: usize) -> Point {
    let n = poly.len();
    let a = poly[i];
    let b = poly[(i + 1) % n];
    let t = b - a;
    // right-hand normal points outward for counter-clockwise polygons
    let right = Point::new(t.y, -t.x);
    let outward = if signed_area2(poly) > 0.0 { right } else { -right };
    outward.normalized().unwrap_or_default()
}

/// Does the closed segment `a`-`b` touch the polygon (boundary or interior)?
pub fn segment_hits_polygon(a: Point, b: Point, poly: &[Point]) -> bool {
    edges(poly).any(|(c, d)| segments_intersect(a, b, c, d)) || point_in_polygon(a, poly)
}

/// Distance from `p` to a polyline.
pub fn polyline_distance(p: Point, line: &[Point]) -> f64 {
    match line.len() {
        0 => f64::INFINITY,
        1 => p.dist(line[0]),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

pub fn polygon(coords: &[(f64, f64)]) -> Vec<Point> {
    coords.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn unit_square() -> Vec<Point> {
        polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    #[test]
    fn square_membership() {
        let sq = unit_square();
        assert!(point_in_polygon(Point::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Point::new(2.0, 2.0), &sq));
        // boundary counts as inside
        assert!(point_in_polygon(Point::new(0.5, 0.0), &sq));
        assert!(point_in_polygon(Point::new(1.0, 1.0), &sq));
    }

    #[test]
    fn signed_distance_examples() {
        let sq = polygon(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        assert_eq!(signed_distance(Point::new(1.0, 1.0), &sq), -1.0);
        assert_eq!(signed_distance(Point::new(5.0, 1.0), &sq), 3.0);
        assert_eq!(signed_distance(Point::new(2.0, 1.0), &sq), 0.0);
    }

    #[test]
    fn bow_tie_is_not_simple() {
        let bow = polygon(&[(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)]);
        assert!(!is_simple(&bow));
        assert!(is_simple(&unit_square()));
        assert!(!is_simple(&polygon(&[(0.0, 0.0), (1.0, 0.0)])));
        // collinear spike
        assert!(!is_simple(&polygon(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.0), (1.0, 1.0)])));
    }

    #[test]
    fn normals_point_outward_for_both_orientations() {
        let ccw = unit_square();
        let mut cw = ccw.clone();
        cw.reverse();
        let n = outward_normal(&ccw, 0);
        assert_eq!(n, Point::new(0.0, -1.0));
        // edge 0 of the reversed square runs (0,1)->(1,1): the north edge
        assert_eq!(outward_normal(&cw, 0), Point::new(0.0, 1.0));
    }

    #[test]
    fn diameter_of_square_is_diagonal() {
        let sq = polygon(&[(0.0, 0.0), (3.0, 0.0), (3.0, 4.0), (0.0, 4.0)]);
        assert_eq!(diameter(&sq), 5.0);
    }

    fn convex_polygon(n: usize, rot: f64, rx: f64, ry: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let a = rot + core::f64::consts::TAU * i as f64 / n as f64;
                Point::new(5.0 + rx * crate::math::cos(a), 5.0 + ry * crate::math::sin(a))
            })
            .collect()
    }

    // Half-plane oracle: a point is inside a convex CCW polygon iff it lies
    // left of (or on) every edge.
    fn half_plane_inside(p: Point, poly: &[Point]) -> bool {
        edges(poly).all(|(a, b)| (b - a).cross(p - a) >= 0.0)
    }

    // Dense boundary sampling oracle for the unsigned distance.
    fn sampled_boundary_distance(p: Point, poly: &[Point]) -> f64 {
        let mut best = f64::INFINITY;
        for (a, b) in edges(poly) {
            let len = a.dist(b);
            let steps = (len / 0.005) as usize + 1;
            for k in 0..=steps {
                let q = a + (b - a) * (k as f64 / steps as f64);
                best = best.min(p.dist(q));
            }
        }
        best
    }

    proptest! {
        #[test]
        fn pip_matches_half_plane_on_convex(
            n in 3usize..9, rot in 0.0f64..6.28, rx in 1.0f64..4.0, ry in 1.0f64..4.0,
            pts in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1000)
        ) {
            let poly = convex_polygon(n, rot, rx, ry);
            for (x, y) in pts {
                let p = Point::new(x, y);
                prop_assert_eq!(point_in_polygon(p, &poly), half_plane_inside(p, &poly));
            }
        }

        #[test]
        fn signed_distance_matches_boundary_sampling(
            n in 3usize..8, rot in 0.0f64..6.28, rx in 1.0f64..4.0, ry in 1.0f64..4.0,
            pts in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 500)
        ) {
            let poly = convex_polygon(n, rot, rx, ry);
            for (x, y) in pts {
                let p = Point::new(x, y);
                let sd = signed_distance(p, &poly);
                let oracle = sampled_boundary_distance(p, &poly);
                prop_assert!((sd.abs() - oracle).abs() <= 0.01);
                prop_assert_eq!(sd < 0.0, point_in_polygon(p, &poly) && sd != 0.0);
            }
        }

        #[test]
        fn bow_tie_matches_brute_force(a in 0.5f64..3.0, b in 0.5f64..3.0) {
            // self-crossing quadrilateral built from a rectangle by swapping two vertices
            let bow = vec![Point::new(0.0, 0.0), Point::new(a, b), Point::new(a, 0.0), Point::new(0.0, b)];
            let crossing = segments_intersect(bow[0], bow[1], bow[2], bow[3]);
            prop_assert!(crossing);
            prop_assert!(!is_simple(&bow));
        }
    }
}
