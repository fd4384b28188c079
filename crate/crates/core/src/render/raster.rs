//! Scanline coverage rasterizer.
//!
//! Each pixel row is split into `ss` sub-rows. On every sub-row the exact
//! x-intervals covered by each part of a primitive are computed, merged (so
//! overlapping parts of one primitive are unioned rather than double-blended)
//! and deposited into pixels by exact horizontal overlap. Coverage is the mean
//! over sub-rows. Along straight edges this is exact up to the corners where
//! an edge leaves a pixel, so thin strokes keep their ink area at any slope.

use super::display::{arc_angles, arc_center, Prim};
use super::{CanvasSpec, PaletteColor};
use crate::geometry::Point2;

/// Largest sagitta allowed when an arc stroke is split into straight pieces.
const ARC_SAGITTA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Rgb8Image {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

enum Part<'a> {
    Capsule { a: Point2, b: Point2, r: f64 },
    Disc { c: Point2, r: f64 },
    Ring { c: Point2, r: f64, hw: f64 },
    Polygon { pts: &'a [Point2] },
}

fn interval_linear(coef: f64, c0: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    // { x : lo <= coef * x + c0 <= hi }
    if coef == 0.0 {
        return (lo <= c0 && c0 <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let x1 = (lo - c0) / coef;
    let x2 = (hi - c0) / coef;
    Some((x1.min(x2), x1.max(x2)))
}

fn chord(c: Point2, r: f64, y: f64) -> Option<(f64, f64)> {
    let dy = y - c.y;
    let k = r * r - dy * dy;
    (k >= 0.0).then(|| {
        let s = k.sqrt();
        (c.x - s, c.x + s)
    })
}

fn capsule_interval(a: Point2, b: Point2, r: f64, y: f64) -> Option<(f64, f64)> {
    // the capsule is convex, so its row section is the hull of the end
    // discs' chords and the body's band-slab intersection
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |iv: Option<(f64, f64)>| {
        if let Some((l, h)) = iv {
            lo = lo.min(l);
            hi = hi.max(h);
        }
    };
    take(chord(a, r, y));
    take(chord(b, r, y));
    let d = b.sub(a);
    let len = d.norm();
    if len > 0.0 {
        let u = d.scale(1.0 / len);
        let n = u.perp();
        let band = interval_linear(n.x, n.y * (y - a.y) - n.x * a.x, -r, r);
        let slab = interval_linear(u.x, u.y * (y - a.y) - u.x * a.x, 0.0, len);
        if let (Some(b1), Some(b2)) = (band, slab) {
            let l = b1.0.max(b2.0);
            let h = b1.1.min(b2.1);
            if l <= h {
                take(Some((l, h)));
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

impl Part<'_> {
    fn y_range(&self) -> (f64, f64) {
        match self {
            Part::Capsule { a, b, r } => (a.y.min(b.y) - r, a.y.max(b.y) + r),
            Part::Disc { c, r } => (c.y - r, c.y + r),
            Part::Ring { c, r, hw } => (c.y - r - hw, c.y + r + hw),
            Part::Polygon { pts } => pts
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y))),
        }
    }

    /// Push the x-intervals covered on the horizontal line `y`.
    fn intervals(&self, y: f64, out: &mut Vec<(f64, f64)>) {
        match self {
            Part::Capsule { a, b, r } => out.extend(capsule_interval(*a, *b, *r, y)),
            Part::Disc { c, r } => out.extend(chord(*c, *r, y)),
            Part::Ring { c, r, hw } => {
                let Some((ol, oh)) = chord(*c, r + hw, y) else { return };
                match chord(*c, r - hw, y).filter(|_| r - hw > 0.0) {
                    Some((il, ih)) => out.extend([(ol, il), (ih, oh)]),
                    None => out.push((ol, oh)),
                }
            }
            Part::Polygon { pts } => {
                // even-odd crossings, half-open in y
                let mut xs = Vec::new();
                let n = pts.len();
                for i in 0..n {
                    let (p, q) = (pts[i], pts[(i + 1) % n]);
                    if (p.y > y) != (q.y > y) {
                        xs.push(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
                    }
                }
                xs.sort_by(f64::total_cmp);
                out.extend(xs.chunks_exact(2).map(|w| (w[0], w[1])));
            }
        }
    }
}

/// Straight pieces following an arc stroke's centerline.
fn arc_points(from: Point2, to: Point2, radius: f64) -> Vec<Point2> {
    let (c, r) = arc_center(from, to, radius);
    let (a0, sweep) = arc_angles(from, to, c);
    let step = 2.0 * (1.0 - ARC_SAGITTA / r).max(-1.0).acos();
    let n = ((sweep / step).ceil() as usize).max(1);
    let mut pts = vec![from];
    for i in 1..n {
        let t = a0 + sweep * i as f64 / n as f64;
        pts.push(c.add(Point2::new(t.cos(), t.sin()).scale(r)));
    }
    pts.push(to);
    pts
}

struct Raster {
    width: usize,
    height: usize,
    ss: usize,
    accum: Vec<f32>,
    /// Summed sub-row overlap per pixel, in `[0, ss]`.
    cov: Vec<f64>,
    touched: Vec<u32>,
    row: Vec<(f64, f64)>,
}

impl Raster {
    fn new(canvas: &CanvasSpec) -> Self {
        let (w, h) = (canvas.width as usize, canvas.height as usize);
        let bg = canvas.background.rgb();
        let mut accum = Vec::with_capacity(w * h * 3);
        for _ in 0..w * h {
            accum.extend(bg.iter().map(|&c| c as f32));
        }
        Raster {
            width: w,
            height: h,
            ss: canvas.supersample as usize,
            accum,
            cov: vec![0.0; w * h],
            touched: Vec::new(),
            row: Vec::new(),
        }
    }

    fn cover(&mut self, parts: &[Part]) {
        let (y0, y1) = parts
            .iter()
            .map(Part::y_range)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
        if y0 > y1 {
            return;
        }
        let py0 = y0.floor().max(0.0) as usize;
        let py1 = (y1.floor() + 1.0).clamp(0.0, self.height as f64) as usize;
        let width = self.width as f64;
        for py in py0..py1 {
            for j in 0..self.ss {
                let y = py as f64 + (j as f64 + 0.5) / self.ss as f64;
                self.row.clear();
                for p in parts {
                    p.intervals(y, &mut self.row);
                }
                self.row.retain(|&(l, h)| l < h && h > 0.0 && l < width);
                self.row.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut k = 0;
                while k < self.row.len() {
                    let (l, mut h) = self.row[k];
                    k += 1;
                    while k < self.row.len() && self.row[k].0 <= h {
                        h = h.max(self.row[k].1);
                        k += 1;
                    }
                    self.deposit(py, l.max(0.0), h.min(width));
                }
            }
        }
    }

    fn deposit(&mut self, py: usize, l: f64, h: f64) {
        let px0 = l.floor() as usize;
        let px1 = (h.ceil() as usize).min(self.width);
        for px in px0..px1 {
            let x = px as f64;
            let overlap = h.min(x + 1.0) - l.max(x);
            if overlap > 0.0 {
                let idx = py * self.width + px;
                if self.cov[idx] == 0.0 {
                    self.touched.push(idx as u32);
                }
                self.cov[idx] += overlap;
            }
        }
    }

    fn composite(&mut self, color: PaletteColor) {
        let rgb = color.rgb().map(|c| c as f32);
        let ss = self.ss as f64;
        for &idx in &self.touched {
            let idx = idx as usize;
            let c = (self.cov[idx] / ss).min(1.0) as f32;
            self.cov[idx] = 0.0;
            let px = &mut self.accum[idx * 3..idx * 3 + 3];
            for k in 0..3 {
                px[k] += (rgb[k] - px[k]) * c;
            }
        }
        self.touched.clear();
    }

    fn stroke(&mut self, points: &[Point2], closed: bool, width: f64) {
        let r = width / 2.0;
        let mut parts: Vec<Part> = points.windows(2).map(|w| Part::Capsule { a: w[0], b: w[1], r }).collect();
        if closed && points.len() > 2 {
            parts.push(Part::Capsule { a: points[points.len() - 1], b: points[0], r });
        }
        if points.len() == 1 {
            parts.push(Part::Disc { c: points[0], r });
        }
        self.cover(&parts);
    }

    fn draw(&mut self, prim: &Prim) {
        match prim {
            Prim::Line { a, b, width, .. } => self.cover(&[Part::Capsule { a: *a, b: *b, r: width / 2.0 }]),
            Prim::Polyline { points, closed, width, .. } => self.stroke(points, *closed, *width),
            Prim::Polygon { points, .. } => {
                if points.len() >= 3 {
                    self.cover(&[Part::Polygon { pts: points }]);
                }
            }
            Prim::Disc { center, radius, .. } => self.cover(&[Part::Disc { c: *center, r: *radius }]),
            Prim::Ring { center, radius, width, .. } => {
                self.cover(&[Part::Ring { c: *center, r: *radius, hw: width / 2.0 }])
            }
            Prim::Arc { from, to, radius, width, .. } => {
                let pts = arc_points(*from, *to, *radius);
                self.stroke(&pts, false, *width);
            }
            Prim::Text { strokes, width, color, .. } => {
                // each stroke is its own element, as in the SVG output
                for s in strokes {
                    self.stroke(s, false, *width);
                    self.composite(*color);
                }
                return;
            }
        }
        self.composite(prim.color());
    }

    fn finish(self) -> Rgb8Image {
        let pixels = self.accum.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
        Rgb8Image { width: self.width as u32, height: self.height as u32, pixels }
    }
}

/// Rasterize primitives in order onto the canvas background.
pub fn rasterize(prims: &[Prim], canvas: &CanvasSpec) -> Rgb8Image {
    let mut r = Raster::new(canvas);
    for p in prims {
        r.draw(p);
    }
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point_segment_distance;
    use std::f64::consts::PI;

    fn canvas(ss: u32) -> CanvasSpec {
        CanvasSpec { width: 64, height: 64, supersample: ss, ..Default::default() }
    }

    fn coverage_sum(img: &Rgb8Image) -> f64 {
        img.pixels.chunks(3).map(|p| (255.0 - p[0] as f64) / 255.0).sum()
    }

    #[test]
    fn disc_area_matches_pi_r_squared() {
        let prims = [Prim::Disc { center: Point2::new(32.3, 31.7), radius: 12.0, color: PaletteColor::Black }];
        let img = rasterize(&prims, &canvas(4));
        let area = PI * 144.0;
        assert!((coverage_sum(&img) - area).abs() / area < 0.01);
    }

    #[test]
    fn capsule_interval_matches_distance_test() {
        // dense sampling along rows against the plain distance definition
        let (a, b, r) = (Point2::new(5.2, 50.1), Point2::new(58.7, 9.3), 1.5);
        for k in 0..640 {
            let y = k as f64 * 0.1 + 0.05;
            let iv = capsule_interval(a, b, r, y);
            for i in 0..6400 {
                let x = i as f64 * 0.01 + 0.005;
                let d = point_segment_distance(Point2::new(x, y), a, b) - r;
                if d.abs() < 1e-9 {
                    continue;
                }
                let inside = iv.is_some_and(|(l, h)| l <= x && x <= h);
                assert_eq!(inside, d < 0.0, "({x},{y}) interval {iv:?}");
            }
        }
    }

    #[test]
    fn polygon_and_ring_areas() {
        let tri = vec![Point2::new(10.0, 10.0), Point2::new(50.0, 14.0), Point2::new(22.0, 55.0)];
        let shoelace = 0.5 * ((50.0 - 10.0) * (55.0 - 10.0) - (22.0 - 10.0) * (14.0 - 10.0));
        let img = rasterize(&[Prim::Polygon { points: tri, color: PaletteColor::Black }], &canvas(4));
        assert!((coverage_sum(&img) - shoelace).abs() < 1.0);

        let ring = [Prim::Ring { center: Point2::new(31.6, 32.2), radius: 20.0, width: 3.0, color: PaletteColor::Black }];
        let area = PI * (21.5f64.powi(2) - 18.5f64.powi(2));
        let img = rasterize(&ring, &canvas(4));
        assert!((coverage_sum(&img) - area).abs() / area < 0.005);
    }

    #[test]
    fn arc_pieces_stay_on_the_circle() {
        let (from, to) = (Point2::new(40.0, 20.0), Point2::new(20.0, 40.0));
        let (c, r) = arc_center(from, to, 20.0);
        let pts = arc_points(from, to, 20.0);
        assert!(pts.len() > 2);
        for w in pts.windows(2) {
            let mid = w[0].add(w[1]).scale(0.5);
            assert!(r - mid.dist(c) <= ARC_SAGITTA + 1e-12);
        }
    }

    #[test]
    fn overlapping_polyline_segments_are_unioned() {
        // a folded-back polyline covers the same pixels twice; union keeps it identical to one line
        let a = Point2::new(10.0, 32.0);
        let b = Point2::new(50.0, 32.0);
        let once = rasterize(&[Prim::Line { a, b, width: 3.0, color: PaletteColor::Red }], &canvas(4));
        let twice = rasterize(
            &[Prim::Polyline { points: vec![a, b, a], closed: false, width: 3.0, color: PaletteColor::Red }],
            &canvas(4),
        );
        assert_eq!(once, twice);
    }

    #[test]
    fn all_supersample_levels_render() {
        for ss in [1, 2, 4] {
            let (a, b) = (Point2::new(4.3, 4.1), Point2::new(60.2, 51.7));
            let prims = [Prim::Line { a, b, width: 3.0, color: PaletteColor::Black }];
            let img = rasterize(&prims, &canvas(ss));
            let cov = coverage_sum(&img);
            let expected = 3.0 * a.dist(b) + PI * 2.25;
            assert!((cov - expected).abs() / expected < 0.01, "ss={ss}: {cov} vs {expected}");
        }
    }

    #[test]
    fn stroke_area_holds_at_every_slope() {
        let c = CanvasSpec { width: 128, height: 128, supersample: 4, ..Default::default() };
        for k in 0..90 {
            let t = k as f64 * PI / 90.0 + 0.003;
            let d = Point2::new(t.cos(), t.sin()).scale(50.0);
            let mid = Point2::new(64.17, 63.71);
            let prims = [Prim::Line { a: mid.sub(d), b: mid.add(d), width: 3.0, color: PaletteColor::Black }];
            let cov = coverage_sum(&rasterize(&prims, &c));
            let expected = 3.0 * 100.0 + PI * 2.25;
            // 8-bit rounding alone can move the sum by about 0.002 per edge pixel
            assert!((cov - expected).abs() < 1.0, "angle {t}: {cov} vs {expected}");
        }
    }
}
