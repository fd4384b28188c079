use std::f64::consts::{FRAC_PI_2, TAU};

use super::font::{text_strokes, text_width};
use super::{CanvasSpec, PaletteColor, RenderError};
use crate::geometry::{ChartScene, Point2, Solid, SolidDims};
use crate::scene::{Element, Scene};

/// One drawing primitive. Strokes use round caps and joins.
#[derive(Debug, Clone, PartialEq)]
pub enum Prim {
    Line { a: Point2, b: Point2, width: f64, color: PaletteColor },
    Polyline { points: Vec<Point2>, closed: bool, width: f64, color: PaletteColor },
    Polygon { points: Vec<Point2>, color: PaletteColor },
    Disc { center: Point2, radius: f64, color: PaletteColor },
    Ring { center: Point2, radius: f64, width: f64, color: PaletteColor },
    /// Circular arc from `from` to `to` turning in the positive-angle
    /// direction (clockwise on screen), never more than a half turn.
    Arc { from: Point2, to: Point2, radius: f64, width: f64, color: PaletteColor },
    Text { text: String, strokes: Vec<Vec<Point2>>, width: f64, color: PaletteColor },
}

pub(crate) fn q(x: f64) -> f64 {
    let v = (x * 1000.0).round() / 1000.0;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn qp(p: Point2) -> Point2 {
    Point2::new(q(p.x), q(p.y))
}

/// Center and effective radius of a short positive-direction arc, following
/// the SVG endpoint-to-center conversion for circles. A radius shorter than
/// half the chord is scaled up, as SVG renderers do.
pub fn arc_center(from: Point2, to: Point2, radius: f64) -> (Point2, f64) {
    let half = from.sub(to).scale(0.5);
    let mid = from.add(to).scale(0.5);
    let h2 = half.dot(half);
    if h2 == 0.0 {
        return (from, radius);
    }
    let r = radius.max(h2.sqrt());
    let coef = ((r * r - h2) / h2).max(0.0).sqrt();
    (Point2::new(coef * half.y, -coef * half.x).add(mid), r)
}

/// Start angle and sweep (radians, sweep in `[0, 2pi)`) of an arc prim.
pub(crate) fn arc_angles(from: Point2, to: Point2, center: Point2) -> (f64, f64) {
    let s = from.sub(center);
    let e = to.sub(center);
    let a0 = s.y.atan2(s.x);
    let sweep = s.cross(e).atan2(s.dot(e)).rem_euclid(TAU);
    (a0, sweep)
}

/// `(x0, y0, x1, y1)` in canvas units.
pub type BBox = (f64, f64, f64, f64);

fn bbox_points<'a>(pts: impl IntoIterator<Item = &'a Point2>, pad: f64) -> BBox {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        b.0 = b.0.min(p.x);
        b.1 = b.1.min(p.y);
        b.2 = b.2.max(p.x);
        b.3 = b.3.max(p.y);
    }
    (b.0 - pad, b.1 - pad, b.2 + pad, b.3 + pad)
}

impl Prim {
    /// Axis-aligned bounds of the painted area, including stroke width.
    pub fn bbox(&self) -> BBox {
        match self {
            Prim::Line { a, b, width, .. } => bbox_points([a, b], width / 2.0),
            Prim::Polyline { points, width, .. } => bbox_points(points, width / 2.0),
            Prim::Polygon { points, .. } => bbox_points(points, 0.0),
            Prim::Disc { center, radius, .. } => bbox_points([center], *radius),
            Prim::Ring { center, radius, width, .. } => bbox_points([center], radius + width / 2.0),
            Prim::Arc { from, to, radius, width, .. } => {
                let (c, r) = arc_center(*from, *to, *radius);
                let (a0, sweep) = arc_angles(*from, *to, c);
                let mut pts = vec![*from, *to];
                for k in -4..8 {
                    let a = k as f64 * FRAC_PI_2;
                    let rel = (a - a0).rem_euclid(TAU);
                    if rel <= sweep {
                        pts.push(c.add(Point2::new(a.cos(), a.sin()).scale(r)));
                    }
                }
                bbox_points(&pts, width / 2.0)
            }
            Prim::Text { strokes, width, .. } => bbox_points(strokes.iter().flatten(), width / 2.0),
        }
    }

    pub fn color(&self) -> PaletteColor {
        match self {
            Prim::Line { color, .. }
            | Prim::Polyline { color, .. }
            | Prim::Polygon { color, .. }
            | Prim::Disc { color, .. }
            | Prim::Ring { color, .. }
            | Prim::Arc { color, .. }
            | Prim::Text { color, .. } => *color,
        }
    }
}

fn line(a: Point2, b: Point2, width: f64, color: PaletteColor) -> Prim {
    Prim::Line { a: qp(a), b: qp(b), width: q(width), color }
}

fn text(s: &str, center: Point2, height: f64, color: PaletteColor) -> Prim {
    let strokes = text_strokes(s, center, height)
        .into_iter()
        .map(|st| st.into_iter().map(qp).collect())
        .collect();
    Prim::Text { text: s.to_string(), strokes, width: q((height / 7.0).max(1.5)), color }
}

fn ellipse_points(c: Point2, rx: f64, ry: f64, from: f64, to: f64, n: usize) -> Vec<Point2> {
    (0..=n)
        .map(|i| {
            let t = from + (to - from) * i as f64 / n as f64;
            qp(Point2::new(c.x + rx * t.cos(), c.y + ry * t.sin()))
        })
        .collect()
}

const LABEL_HEIGHT: f64 = 14.0;
const OUTLINE: f64 = 2.0;

/// Plot rectangle used for charts on a given canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartLayout {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl ChartLayout {
    pub fn for_canvas(canvas: &CanvasSpec) -> Self {
        let (w, h) = (canvas.width as f64, canvas.height as f64);
        ChartLayout { left: q(0.14 * w), right: q(0.95 * w), top: q(0.05 * h), bottom: q(0.91 * h) }
    }

    pub fn map(&self, chart: &ChartScene, x: f64, y: f64) -> Point2 {
        let x0 = chart.xs[0];
        let x1 = chart.xs[chart.xs.len() - 1];
        let px = self.left + (x - x0) / (x1 - x0) * (self.right - self.left);
        let py = self.bottom
            - (y - ChartScene::Y_MIN) / (ChartScene::Y_MAX - ChartScene::Y_MIN) * (self.bottom - self.top);
        Point2::new(px, py)
    }
}

fn chart_prims(chart: &ChartScene, canvas: &CanvasSpec, out: &mut Vec<Prim>) {
    let lay = ChartLayout::for_canvas(canvas);
    // tick furniture shrinks with the canvas; 448 px is the reference size
    let k = f64::from(canvas.width.min(canvas.height)) / 448.0;
    let black = PaletteColor::Black;
    out.push(line(Point2::new(lay.left, lay.top), Point2::new(lay.left, lay.bottom), OUTLINE, black));
    out.push(line(Point2::new(lay.left, lay.bottom), Point2::new(lay.right, lay.bottom), OUTLINE, black));
    let step = if chart.y_tick_step > 0.0 { chart.y_tick_step } else { 10.0 };
    let n_ticks = ((ChartScene::Y_MAX - ChartScene::Y_MIN) / step).round() as i64;
    for i in 0..=n_ticks {
        let v = ChartScene::Y_MIN + i as f64 * step;
        let y = lay.bottom - (v - ChartScene::Y_MIN) / (ChartScene::Y_MAX - ChartScene::Y_MIN) * (lay.bottom - lay.top);
        out.push(line(Point2::new(lay.left - 6.0 * k, y), Point2::new(lay.left, y), OUTLINE, black));
        let label = format!("{}", v.round() as i64);
        let tw = text_width(&label, 10.0 * k);
        out.push(text(&label, Point2::new(lay.left - 10.0 * k - tw / 2.0, y), 10.0 * k, black));
    }
    let points = chart.xs.iter().zip(&chart.ys).map(|(&x, &y)| qp(lay.map(chart, x, y))).collect();
    out.push(Prim::Polyline { points, closed: false, width: q(canvas.stroke_width), color: black });
    out.push(Prim::Disc {
        center: qp(lay.map(chart, chart.dot_x, chart.dot_y)),
        radius: q(5.0 * k),
        color: PaletteColor::Red,
    });
}

/// Isometric projection of a 3D point (z up) around `c`.
fn iso(c: Point2, x: f64, y: f64, z: f64) -> Point2 {
    let (cos30, sin30) = (3f64.sqrt() / 2.0, 0.5);
    Point2::new(c.x + (x - y) * cos30, c.y + (x + y) * sin30 - z)
}

fn solid_prims(solid: &Solid, c: Point2, out: &mut Vec<Prim>) {
    let black = PaletteColor::Black;
    match solid.dims {
        SolidDims::Cube { edge } => {
            let h = edge / 2.0;
            let v = |x: f64, y: f64, z: f64| qp(iso(c, x, y, z));
            let top = vec![v(-h, -h, h), v(h, -h, h), v(h, h, h), v(-h, h, h)];
            let right = vec![v(h, -h, h), v(h, h, h), v(h, h, -h), v(h, -h, -h)];
            let left = vec![v(-h, h, h), v(h, h, h), v(h, h, -h), v(-h, h, -h)];
            for face in [top, right, left] {
                out.push(Prim::Polygon { points: face.clone(), color: solid.color });
                out.push(Prim::Polyline { points: face, closed: true, width: OUTLINE, color: black });
            }
        }
        SolidDims::Sphere { radius } => {
            out.push(Prim::Disc { center: qp(c), radius: q(radius), color: solid.color });
            out.push(Prim::Ring { center: qp(c), radius: q(radius), width: OUTLINE, color: black });
            let eq = ellipse_points(c, radius, radius / 2.0, 0.0, std::f64::consts::PI, 32);
            out.push(Prim::Polyline { points: eq, closed: false, width: q(1.5), color: black });
        }
        SolidDims::Cylinder { radius, height } => {
            let top_c = Point2::new(c.x, c.y - height / 2.0);
            let bot_c = Point2::new(c.x, c.y + height / 2.0);
            let (rx, ry) = (radius, radius / 2.0);
            // body: top half-ellipse back to front, down the right side, bottom front arc
            let mut body = ellipse_points(top_c, rx, ry, std::f64::consts::PI, TAU, 32);
            body.extend(ellipse_points(bot_c, rx, ry, 0.0, std::f64::consts::PI, 32));
            out.push(Prim::Polygon { points: body, color: solid.color });
            let top = ellipse_points(top_c, rx, ry, 0.0, TAU, 64);
            out.push(Prim::Polygon { points: top[..64].to_vec(), color: solid.color });
            out.push(Prim::Polyline { points: top[..64].to_vec(), closed: true, width: OUTLINE, color: black });
            out.push(line(Point2::new(c.x - rx, top_c.y), Point2::new(c.x - rx, bot_c.y), OUTLINE, black));
            out.push(line(Point2::new(c.x + rx, top_c.y), Point2::new(c.x + rx, bot_c.y), OUTLINE, black));
            let front = ellipse_points(bot_c, rx, ry, 0.0, std::f64::consts::PI, 32);
            out.push(Prim::Polyline { points: front, closed: false, width: OUTLINE, color: black });
        }
    }
}

fn element_prims(e: &Element, canvas: &CanvasSpec, out: &mut Vec<Prim>) {
    let sw = canvas.stroke_width;
    match e {
        Element::Segment(seg) => {
            out.push(line(seg.p0, seg.p1, sw, seg.color));
            if let Some(l) = seg.label {
                let d = seg.direction().scale(1.0 / seg.direction().norm());
                let mut n = d.perp();
                if n.y > 0.0 || (n.y == 0.0 && n.x > 0.0) {
                    n = n.scale(-1.0);
                }
                out.push(text(&l.to_string(), seg.midpoint().add(n.scale(16.0)), LABEL_HEIGHT, seg.color));
            }
        }
        Element::Wedge(w) => {
            out.push(line(w.vertex, w.arm_start(), sw, w.color));
            out.push(line(w.vertex, w.arm_end(), sw, w.color));
            out.push(Prim::Arc {
                from: qp(w.arm_start()),
                to: qp(w.arm_end()),
                radius: q(w.radius),
                width: q(sw),
                color: w.color,
            });
            if let Some(l) = w.label {
                let bis = Point2::unit(w.start_deg + w.sweep_deg / 2.0);
                out.push(text(&l.to_string(), w.vertex.sub(bis.scale(20.0)), LABEL_HEIGHT, w.color));
            }
        }
        Element::CirclePair(p) => {
            for c in [p.a_center, p.b_center] {
                out.push(Prim::Disc { center: qp(c), radius: q(p.radius), color: p.color });
            }
        }
        Element::Shape(s) => match s.polygon() {
            None => out.push(Prim::Disc { center: qp(s.center), radius: q(s.size), color: s.color }),
            Some(poly) => out.push(Prim::Polygon { points: poly.into_iter().map(qp).collect(), color: s.color }),
        },
        Element::Solid { solid, center } => solid_prims(solid, *center, out),
        Element::Chart(chart) => chart_prims(chart, canvas, out),
        Element::Dot { center, radius, color } => {
            out.push(Prim::Disc { center: qp(*center), radius: q(*radius), color: *color })
        }
        Element::Text { center, height, text: s, color } => out.push(text(s, *center, *height, *color)),
    }
}

/// Union of the painted bounds of every element, without a canvas check.
pub fn scene_bounds(scene: &Scene, canvas: &CanvasSpec) -> BBox {
    let mut out = Vec::new();
    for e in &scene.elements {
        element_prims(e, canvas, &mut out);
    }
    out.iter().map(Prim::bbox).fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |a, b| (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)),
    )
}

/// True when everything painted stays at least `margin` inside the canvas.
pub fn fits_canvas(scene: &Scene, canvas: &CanvasSpec, margin: f64) -> bool {
    let (x0, y0, x1, y1) = scene_bounds(scene, canvas);
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    x0 >= margin && y0 >= margin && x1 <= w - margin && y1 <= h - margin
}

/// Lower a scene to primitives, rejecting any element that leaves the canvas.
pub fn display_list(scene: &Scene, canvas: &CanvasSpec) -> Result<Vec<Prim>, RenderError> {
    let mut out = Vec::new();
    let (w, h) = (canvas.width as f64, canvas.height as f64);
    for (index, e) in scene.elements.iter().enumerate() {
        let start = out.len();
        element_prims(e, canvas, &mut out);
        for p in &out[start..] {
            let (x0, y0, x1, y1) = p.bbox();
            let finite = x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite();
            if !finite || x0 < 0.0 || y0 < 0.0 || x1 > w || y1 > h {
                return Err(RenderError::OutOfBounds {
                    index,
                    what: e.kind_name().to_string(),
                    width: canvas.width,
                    height: canvas.height,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_center_recovers_circle() {
        let c = Point2::new(100.0, 120.0);
        for (a, sweep) in [(0.0f64, 90.0f64), (37.0, 150.0), (200.0, 180.0), (300.0, 20.0)] {
            let from = c.add(Point2::unit(a).scale(50.0));
            let to = c.add(Point2::unit(a + sweep).scale(50.0));
            let (cc, r) = arc_center(from, to, 50.0);
            assert!(cc.dist(c) < 1e-6, "{a} {sweep}: {cc:?}");
            assert!((r - 50.0).abs() < 1e-6);
            let (_, sw) = arc_angles(from, to, cc);
            assert!((sw.to_degrees() - sweep).abs() < 1e-4, "{sweep} vs {}", sw.to_degrees());
        }
    }

    #[test]
    fn quantization_is_idempotent() {
        for x in [0.1234567, 447.9996, -0.0004, 123.457] {
            assert_eq!(q(q(x)), q(x));
        }
        assert_eq!(q(-0.0001).to_bits(), 0f64.to_bits());
    }

    #[test]
    fn arc_bbox_contains_extreme_point() {
        let c = Point2::new(200.0, 200.0);
        let p = Prim::Arc {
            from: c.add(Point2::unit(-45.0).scale(100.0)),
            to: c.add(Point2::unit(45.0).scale(100.0)),
            radius: 100.0,
            width: 2.0,
            color: PaletteColor::Black,
        };
        let (_, _, x1, _) = p.bbox();
        assert!((x1 - 301.0).abs() < 1e-6);
    }
}
