//! Exact 2D/3D primitives, measures and predicates.
//!
//! Every label the generators emit is derived from the functions in this
//! module, and the verification oracles recompute labels with them from
//! stored metadata alone.
//!
//! Coordinates are canvas units in screen convention: origin at the top-left
//! corner, `y` grows downward, so "above" means a smaller `y`.

mod stream;

pub use stream::{derive_stream, RandomStream, StreamPath};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::render::PaletteColor;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("ambiguous relative position: |dx| == |dy|")]
    AmbiguousPosition,
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2 { x: v[0], y: v[1] }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit direction at `deg` degrees, measured from +x toward +y.
    pub fn unit(deg: f64) -> Point2 {
        let r = deg.to_radians();
        Point2::new(r.cos(), r.sin())
    }

    /// Exact quarter-turn: (x, y) -> (-y, x). No rounding is involved.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub p0: Point2,
    pub p1: Point2,
    pub color: PaletteColor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<char>,
}

impl LineSegment {
    pub fn new(p0: Point2, p1: Point2, color: PaletteColor) -> Result<Self, GeometryError> {
        if p0 == p1 {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(LineSegment { p0, p1, color, label: None })
    }

    pub fn with_label(mut self, label: char) -> Self {
        self.label = Some(label);
        self
    }

    pub fn direction(&self) -> Point2 {
        self.p1.sub(self.p0)
    }

    pub fn midpoint(&self) -> Point2 {
        self.p0.add(self.p1).scale(0.5)
    }
}

/// A circular sector drawn as two radii plus an arc; the labeled quantity is
/// `sweep_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub vertex: Point2,
    pub start_deg: f64,
    pub sweep_deg: f64,
    pub radius: f64,
    pub color: PaletteColor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<char>,
}

impl Wedge {
    pub fn arm_start(&self) -> Point2 {
        self.vertex.add(Point2::unit(self.start_deg).scale(self.radius))
    }

    pub fn arm_end(&self) -> Point2 {
        self.vertex
            .add(Point2::unit(self.start_deg + self.sweep_deg).scale(self.radius))
    }

    /// Angle between the two drawn arms, recomputed from their endpoints.
    pub fn measured_sweep(&self) -> f64 {
        vector_angle_deg(self.arm_start().sub(self.vertex), self.arm_end().sub(self.vertex))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirclePair {
    pub a_center: Point2,
    pub b_center: Point2,
    pub radius: f64,
    pub color: PaletteColor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Circle,
    Square,
    Triangle,
    Star,
    Pentagon,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Circle,
        ShapeKind::Square,
        ShapeKind::Triangle,
        ShapeKind::Star,
        ShapeKind::Pentagon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Square => "square",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Star => "star",
            ShapeKind::Pentagon => "pentagon",
        }
    }

    pub fn from_name(s: &str) -> Option<ShapeKind> {
        ShapeKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// A filled 2D shape. `size` is the circumradius (the radius for circles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeInstance {
    pub kind: ShapeKind,
    pub color: PaletteColor,
    pub center: Point2,
    pub size: f64,
}

const STAR_INNER_RATIO: f64 = 0.45;

impl ShapeInstance {
    /// Outline vertices in drawing order; `None` for circles.
    pub fn polygon(&self) -> Option<Vec<Point2>> {
        let (n, phase, radii): (usize, f64, &[f64]) = match self.kind {
            ShapeKind::Circle => return None,
            ShapeKind::Square => (4, -135.0, &[1.0]),
            ShapeKind::Triangle => (3, -90.0, &[1.0]),
            ShapeKind::Pentagon => (5, -90.0, &[1.0]),
            ShapeKind::Star => (10, -90.0, &[1.0, STAR_INNER_RATIO]),
        };
        let step = 360.0 / n as f64;
        Some(
            (0..n)
                .map(|i| {
                    let r = self.size * radii[i % radii.len()];
                    self.center
                        .add(Point2::unit(phase + step * i as f64).scale(r))
                })
                .collect(),
        )
    }

    /// Signed distance to the closed region; negative inside.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        match self.polygon() {
            None => p.dist(self.center) - self.size,
            Some(poly) => polygon_signed_distance(&poly, p),
        }
    }

    /// Distance from the center to the nearest boundary point.
    pub fn inradius(&self) -> f64 {
        -self.signed_distance(self.center)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolidKind {
    Cube,
    Sphere,
    Cylinder,
}

impl SolidKind {
    pub const ALL: [SolidKind; 3] = [SolidKind::Cube, SolidKind::Sphere, SolidKind::Cylinder];

    pub fn name(self) -> &'static str {
        match self {
            SolidKind::Cube => "cube",
            SolidKind::Sphere => "sphere",
            SolidKind::Cylinder => "cylinder",
        }
    }

    pub fn from_name(s: &str) -> Option<SolidKind> {
        SolidKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolidDims {
    Cube { edge: f64 },
    Sphere { radius: f64 },
    Cylinder { radius: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solid {
    pub dims: SolidDims,
    pub color: PaletteColor,
}

impl Solid {
    pub fn new(dims: SolidDims, color: PaletteColor) -> Result<Self, GeometryError> {
        let ok = match dims {
            SolidDims::Cube { edge } => edge > 0.0,
            SolidDims::Sphere { radius } => radius > 0.0,
            SolidDims::Cylinder { radius, height } => radius > 0.0 && height > 0.0,
        };
        if !ok {
            return Err(GeometryError::InvalidDims(format!("{dims:?}")));
        }
        Ok(Solid { dims, color })
    }

    pub fn kind(&self) -> SolidKind {
        match self.dims {
            SolidDims::Cube { .. } => SolidKind::Cube,
            SolidDims::Sphere { .. } => SolidKind::Sphere,
            SolidDims::Cylinder { .. } => SolidKind::Cylinder,
        }
    }
}

/// A piecewise-linear chart in data space (y axis spans 0..=100).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartScene {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dot_x: f64,
    pub dot_y: f64,
    pub y_tick_step: f64,
}

impl ChartScene {
    pub const Y_MIN: f64 = 0.0;
    pub const Y_MAX: f64 = 100.0;
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`. `None` if `x` lies
/// outside `[xs[0], xs[n-1]]` or the breakpoints are malformed.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| w[0] >= w[1]) {
        return None;
    }
    if x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    let k = xs.windows(2).position(|w| x <= w[1])?;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    Some(ys[k] + t * (ys[k + 1] - ys[k]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelPosition {
    LeftOf,
    RightOf,
    Above,
    Below,
}

impl RelPosition {
    pub const ALL: [RelPosition; 4] = [
        RelPosition::LeftOf,
        RelPosition::RightOf,
        RelPosition::Above,
        RelPosition::Below,
    ];

    pub fn opposite(self) -> RelPosition {
        match self {
            RelPosition::LeftOf => RelPosition::RightOf,
            RelPosition::RightOf => RelPosition::LeftOf,
            RelPosition::Above => RelPosition::Below,
            RelPosition::Below => RelPosition::Above,
        }
    }
}

pub fn measure_length(seg: &LineSegment) -> f64 {
    seg.p0.dist(seg.p1)
}

/// Angle in `[0, 180]` degrees between two vectors.
pub fn vector_angle_deg(u: Point2, v: Point2) -> f64 {
    u.cross(v).abs().atan2(u.dot(v)).to_degrees()
}

/// Acute angle in `[0, 90]` degrees between the carrier lines of `a` and `b`.
pub fn measure_angle_between(a: &LineSegment, b: &LineSegment) -> f64 {
    let (u, v) = (a.direction(), b.direction());
    u.cross(v).abs().atan2(u.dot(v).abs()).to_degrees()
}

/// Carrier-line direction in `[0, 180)` degrees. Two segments "have the same
/// slope" when their orientations agree, which sidesteps infinite slopes.
pub fn orientation_deg(seg: &LineSegment) -> f64 {
    let d = seg.direction();
    let deg = d.y.atan2(d.x).to_degrees().rem_euclid(180.0);
    if deg >= 180.0 {
        0.0
    } else {
        deg
    }
}

/// Difference between two orientations modulo 180, in `[0, 90]`.
pub fn orientation_gap_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

pub fn center_distance(p: &CirclePair) -> f64 {
    p.a_center.dist(p.b_center)
}

pub fn solid_volume(s: &Solid) -> f64 {
    match s.dims {
        SolidDims::Cube { edge } => edge * edge * edge,
        SolidDims::Sphere { radius } => 4.0 * PI * radius.powi(3) / 3.0,
        SolidDims::Cylinder { radius, height } => PI * radius * radius * height,
    }
}

/// Relation of `a` with respect to `b` along the axis of larger |delta|.
pub fn relative_position(a: &ShapeInstance, b: &ShapeInstance) -> Result<RelPosition, GeometryError> {
    relative_position_of_points(a.center, b.center)
}

pub fn relative_position_of_points(a: Point2, b: Point2) -> Result<RelPosition, GeometryError> {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    if dx.abs() == dy.abs() {
        return Err(GeometryError::AmbiguousPosition);
    }
    Ok(if dx.abs() > dy.abs() {
        if dx < 0.0 {
            RelPosition::LeftOf
        } else {
            RelPosition::RightOf
        }
    } else if dy < 0.0 {
        RelPosition::Above
    } else {
        RelPosition::Below
    })
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

/// Closest point to `p` on segment `ab`.
pub fn closest_point_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return a;
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    a.add(ab.scale(t))
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test using exact orientation signs.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub fn segment_segment_distance(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Even-odd point-in-polygon test (boundary points may land either way).
pub fn point_in_polygon(poly: &[Point2], p: Point2) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn polygon_signed_distance(poly: &[Point2], p: Point2) -> f64 {
    let n = poly.len();
    let d = (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if point_in_polygon(poly, p) {
        -d
    } else {
        d
    }
}

/// Distance between a segment and the closed region of a shape; zero iff
/// they meet.
pub fn segment_shape_distance(seg: &LineSegment, s: &ShapeInstance) -> f64 {
    match s.polygon() {
        None => (point_segment_distance(s.center, seg.p0, seg.p1) - s.size).max(0.0),
        Some(poly) => {
            if point_in_polygon(&poly, seg.p0) || point_in_polygon(&poly, seg.p1) {
                return 0.0;
            }
            let n = poly.len();
            (0..n)
                .map(|i| segment_segment_distance(seg.p0, seg.p1, poly[i], poly[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// True iff the segment meets the closed region of the shape.
pub fn intersects(seg: &LineSegment, s: &ShapeInstance) -> bool {
    match s.polygon() {
        None => point_segment_distance(s.center, seg.p0, seg.p1) <= s.size,
        Some(_) => segment_shape_distance(seg, s) == 0.0,
    }
}

/// How far the segment reaches inside the shape (max of -signed distance
/// along the segment), estimated from `samples` evenly spaced points plus
/// the point closest to the shape center. Negative when the segment misses.
pub fn penetration_depth(seg: &LineSegment, s: &ShapeInstance, samples: usize) -> f64 {
    let mut best = -s.signed_distance(closest_point_on_segment(s.center, seg.p0, seg.p1));
    let n = samples.max(2);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let p = seg.p0.add(seg.direction().scale(t));
        best = best.max(-s.signed_distance(p));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64) -> LineSegment {
        LineSegment::new(Point2::new(x0, y0), Point2::new(x1, y1), PaletteColor::Black).unwrap()
    }

    fn rotate(p: Point2, deg: f64) -> Point2 {
        let (s, c) = deg.to_radians().sin_cos();
        Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
    }

    #[test]
    fn pythagorean_length() {
        assert_eq!(measure_length(&seg(0.0, 0.0, 3.0, 4.0)), 5.0);
    }

    #[test]
    fn degenerate_segment_rejected() {
        let p = Point2::new(1.0, 1.0);
        assert_eq!(
            LineSegment::new(p, p, PaletteColor::Red).unwrap_err(),
            GeometryError::DegenerateSegment
        );
    }

    #[test]
    fn length_matches_sum_of_subchords() {
        let mut s = derive_stream(3, StreamPath::new(0, 0, 0));
        for _ in 0..20 {
            let a = Point2::new(s.uniform(0.0, 400.0), s.uniform(0.0, 400.0));
            let b = Point2::new(s.uniform(0.0, 400.0), s.uniform(0.0, 400.0));
            let sg = LineSegment::new(a, b, PaletteColor::Black).unwrap();
            let n = 10_000;
            let mut total = 0.0;
            let mut prev = a;
            for i in 1..=n {
                let p = a.add(b.sub(a).scale(i as f64 / n as f64));
                total += p.dist(prev);
                prev = p;
            }
            assert!((total - measure_length(&sg)).abs() < 1e-6);
        }
    }

    #[test]
    fn angle_examples() {
        assert_eq!(measure_angle_between(&seg(0.0, 0.0, 5.0, 0.0), &seg(0.0, 0.0, 0.0, 5.0)), 90.0);
        assert_eq!(measure_angle_between(&seg(0.0, 0.0, 3.0, 1.0), &seg(5.0, 5.0, 8.0, 6.0)), 0.0);
        let a = LineSegment::new(Point2::new(0.0, 0.0), Point2::unit(10.0), PaletteColor::Black).unwrap();
        let b = LineSegment::new(Point2::new(0.0, 0.0), Point2::unit(170.0), PaletteColor::Black).unwrap();
        assert!((measure_angle_between(&a, &b) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn orientation_examples() {
        assert!((orientation_deg(&seg(0.0, 0.0, 1.0, 1.0)) - 45.0).abs() < 1e-12);
        assert_eq!(orientation_deg(&seg(0.0, 0.0, 0.0, 5.0)), 90.0);
        // arctangent oracle: atan(1/2) in degrees
        let expected = (0.5f64).atan() * 180.0 / PI;
        assert!((orientation_deg(&seg(0.0, 0.0, 2.0, 1.0)) - expected).abs() < 1e-9);
        assert!((expected - 26.565_051_177_077_99).abs() < 1e-9);
        // reversed segment has the same carrier line
        assert!((orientation_deg(&seg(2.0, 1.0, 0.0, 0.0)) - expected).abs() < 1e-9);
    }

    #[test]
    fn orientation_gap_wraps() {
        assert!((orientation_gap_deg(5.0, 175.0) - 10.0).abs() < 1e-12);
        assert_eq!(orientation_gap_deg(30.0, 30.0), 0.0);
    }

    #[test]
    fn circle_pair_distance() {
        let p = CirclePair {
            a_center: Point2::new(0.0, 0.0),
            b_center: Point2::new(6.0, 8.0),
            radius: 1.0,
            color: PaletteColor::Red,
        };
        assert_eq!(center_distance(&p), 10.0);
        let q = CirclePair { b_center: Point2::new(37.5, 0.0), ..p.clone() };
        assert_eq!(center_distance(&q), 37.5);
    }

    #[test]
    fn circle_pair_distance_matches_segment_length() {
        let mut s = derive_stream(11, StreamPath::new(1, 0, 0));
        for _ in 0..500 {
            let a = Point2::new(s.uniform(0.0, 448.0), s.uniform(0.0, 448.0));
            let b = Point2::new(s.uniform(0.0, 448.0), s.uniform(0.0, 448.0));
            let p = CirclePair { a_center: a, b_center: b, radius: 3.0, color: PaletteColor::Blue };
            let sg = LineSegment::new(a, b, PaletteColor::Blue).unwrap();
            assert_eq!(center_distance(&p), measure_length(&sg));
        }
    }

    #[test]
    fn volumes() {
        let cube = Solid::new(SolidDims::Cube { edge: 2.0 }, PaletteColor::Red).unwrap();
        assert_eq!(solid_volume(&cube), 8.0);
        let sphere = Solid::new(SolidDims::Sphere { radius: 1.0 }, PaletteColor::Red).unwrap();
        assert!((solid_volume(&sphere) - 4.188_790_204_786_391).abs() < 1e-12);
        assert!(Solid::new(SolidDims::Sphere { radius: 0.0 }, PaletteColor::Red).is_err());
    }

    #[test]
    fn cylinder_volume_monte_carlo() {
        let cyl = Solid::new(SolidDims::Cylinder { radius: 1.0, height: 3.0 }, PaletteColor::Red).unwrap();
        let mut s = derive_stream(5, StreamPath::new(2, 0, 0));
        let n = 1_000_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let x = s.uniform(-1.0, 1.0);
            let y = s.uniform(-1.0, 1.0);
            let _z = s.uniform(0.0, 3.0);
            if x * x + y * y <= 1.0 {
                hits += 1;
            }
        }
        let estimate = 2.0 * 2.0 * 3.0 * hits as f64 / n as f64;
        let exact = solid_volume(&cyl);
        assert!((estimate - exact).abs() / exact < 0.01, "{estimate} vs {exact}");
    }

    fn shape(kind: ShapeKind, x: f64, y: f64, size: f64) -> ShapeInstance {
        ShapeInstance { kind, color: PaletteColor::Red, center: Point2::new(x, y), size }
    }

    #[test]
    fn relative_position_examples() {
        let a = shape(ShapeKind::Circle, 10.0, 50.0, 5.0);
        let b = shape(ShapeKind::Square, 90.0, 50.0, 5.0);
        assert_eq!(relative_position(&a, &b).unwrap(), RelPosition::LeftOf);
        assert_eq!(relative_position(&b, &a).unwrap(), RelPosition::RightOf);
        let c = shape(ShapeKind::Circle, 50.0, 10.0, 5.0);
        let d = shape(ShapeKind::Circle, 50.0, 90.0, 5.0);
        assert_eq!(relative_position(&c, &d).unwrap(), RelPosition::Above);
        let e = shape(ShapeKind::Circle, 60.0, 60.0, 5.0);
        let f = shape(ShapeKind::Circle, 50.0, 50.0, 5.0);
        assert_eq!(relative_position(&e, &f).unwrap_err(), GeometryError::AmbiguousPosition);
    }

    #[test]
    fn intersects_basic_cases() {
        for kind in ShapeKind::ALL {
            let s = shape(kind, 200.0, 200.0, 30.0);
            assert!(intersects(&seg(100.0, 200.0, 300.0, 200.0), &s), "{kind:?}");
            assert!(!intersects(&seg(100.0, 160.0, 300.0, 160.0), &s), "{kind:?}");
            // fully inside
            assert!(intersects(&seg(198.0, 200.0, 202.0, 201.0), &s), "{kind:?}");
        }
    }

    #[test]
    fn shape_polygons_are_centered() {
        let s = shape(ShapeKind::Star, 100.0, 100.0, 40.0);
        let poly = s.polygon().unwrap();
        assert_eq!(poly.len(), 10);
        assert!(s.inradius() > 10.0);
        assert!(s.signed_distance(Point2::new(100.0, 100.0)) < 0.0);
    }

    /// Dense point-sampling oracle for `intersects`.
    #[test]
    fn intersects_agrees_with_sampling_oracle() {
        let mut s = derive_stream(17, StreamPath::new(3, 0, 0));
        let mut checked = 0;
        for _ in 0..1000 {
            let kind = ShapeKind::ALL[s.index(5)];
            let sh = shape(kind, s.uniform(100.0, 348.0), s.uniform(100.0, 348.0), s.uniform(10.0, 60.0));
            let a = Point2::new(s.uniform(0.0, 448.0), s.uniform(0.0, 448.0));
            let b = Point2::new(s.uniform(0.0, 448.0), s.uniform(0.0, 448.0));
            let sg = LineSegment::new(a, b, PaletteColor::Black).unwrap();
            let n = 10_000;
            let min_sd = (0..n)
                .map(|i| sh.signed_distance(a.add(b.sub(a).scale(i as f64 / (n - 1) as f64))))
                .fold(f64::INFINITY, f64::min);
            if min_sd.abs() < 0.5 {
                continue;
            }
            checked += 1;
            assert_eq!(intersects(&sg, &sh), min_sd <= 0.0, "{sh:?} {sg:?} {min_sd}");
        }
        assert!(checked > 900);
    }

    #[test]
    fn interpolation() {
        let xs = [0.0, 10.0, 20.0];
        let ys = [0.0, 100.0, 50.0];
        assert_eq!(interpolate(&xs, &ys, 5.0), Some(50.0));
        assert_eq!(interpolate(&xs, &ys, 15.0), Some(75.0));
        assert_eq!(interpolate(&xs, &ys, 20.0), Some(50.0));
        assert_eq!(interpolate(&xs, &ys, 21.0), None);
        assert_eq!(interpolate(&[1.0, 1.0], &[0.0, 1.0], 1.0), None);
    }

    proptest! {
        #[test]
        fn length_invariant_under_isometry(
            x0 in -500.0..500.0f64, y0 in -500.0..500.0f64,
            x1 in -500.0..500.0f64, y1 in -500.0..500.0f64,
            deg in 0.0..360.0f64, tx in -500.0..500.0f64, ty in -500.0..500.0f64,
        ) {
            prop_assume!((x0 - x1).abs() + (y0 - y1).abs() > 1e-3);
            let a = Point2::new(x0, y0);
            let b = Point2::new(x1, y1);
            let t = Point2::new(tx, ty);
            let s1 = LineSegment::new(a, b, PaletteColor::Black).unwrap();
            let s2 = LineSegment::new(rotate(a, deg).add(t), rotate(b, deg).add(t), PaletteColor::Black).unwrap();
            prop_assert!((measure_length(&s1) - measure_length(&s2)).abs() < 1e-9);
        }

        #[test]
        fn angle_between_symmetric_and_bounded(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64, bx in -50.0..50.0f64, by in -50.0..50.0f64,
        ) {
            prop_assume!(ax.abs() + ay.abs() > 1e-6 && bx.abs() + by.abs() > 1e-6);
            let a = seg(0.0, 0.0, ax, ay);
            let b = seg(1.0, 1.0, 1.0 + bx, 1.0 + by);
            let ab = measure_angle_between(&a, &b);
            prop_assert_eq!(ab, measure_angle_between(&b, &a));
            prop_assert!((0.0..=90.0).contains(&ab));
        }

        #[test]
        fn exact_quarter_turn_is_perpendicular(deg in 0.0..360.0f64, len in 1.0..300.0f64) {
            let d = Point2::unit(deg).scale(len);
            let a = seg(10.0, 10.0, 10.0 + d.x, 10.0 + d.y);
            let q = d.perp();
            let b = seg(50.0, 50.0, 50.0 + q.x, 50.0 + q.y);
            prop_assert!((measure_angle_between(&a, &b) - 90.0).abs() < 1e-6);
        }

        #[test]
        fn relative_position_antisymmetric(
            ax in 0.0..448.0f64, ay in 0.0..448.0f64, bx in 0.0..448.0f64, by in 0.0..448.0f64,
        ) {
            let a = Point2::new(ax, ay);
            let b = Point2::new(bx, by);
            if let Ok(r) = relative_position_of_points(a, b) {
                prop_assert_eq!(relative_position_of_points(b, a).unwrap(), r.opposite());
            }
        }
    }
}
