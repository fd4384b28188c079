//! Embedded stroke font: digits and the uppercase letters used as labels.
//!
//! Glyphs live on a 4x6 grid (x right, y down, baseline at y = 6) and are
//! drawn as round-capped polylines, so no system font is ever consulted.

use crate::geometry::Point2;

pub const GLYPH_CHARS: &str = "0123456789ABCSX";

const GRID_W: f64 = 4.0;
const GRID_H: f64 = 6.0;
const ADVANCE: f64 = 6.0;

type Stroke = &'static [(f64, f64)];

pub fn glyph_strokes(c: char) -> Option<&'static [Stroke]> {
    let g: &'static [Stroke] = match c {
        '0' => &[&[(1.0, 0.0), (3.0, 0.0), (4.0, 1.0), (4.0, 5.0), (3.0, 6.0), (1.0, 6.0), (0.0, 5.0), (0.0, 1.0), (1.0, 0.0)]],
        '1' => &[&[(1.0, 1.0), (2.0, 0.0), (2.0, 6.0)], &[(1.0, 6.0), (3.0, 6.0)]],
        '2' => &[&[(0.0, 1.0), (1.0, 0.0), (3.0, 0.0), (4.0, 1.0), (4.0, 2.0), (0.0, 6.0), (4.0, 6.0)]],
        '3' => &[&[(0.0, 0.0), (4.0, 0.0), (2.0, 2.5), (3.0, 2.5), (4.0, 3.5), (4.0, 5.0), (3.0, 6.0), (1.0, 6.0), (0.0, 5.0)]],
        '4' => &[&[(3.0, 6.0), (3.0, 0.0), (0.0, 4.0), (4.0, 4.0)]],
        '5' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 2.5), (3.0, 2.5), (4.0, 3.5), (4.0, 5.0), (3.0, 6.0), (0.0, 6.0)]],
        '6' => &[&[(3.5, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 5.0), (1.0, 6.0), (3.0, 6.0), (4.0, 5.0), (4.0, 3.5), (3.0, 2.5), (0.0, 2.5)]],
        '7' => &[&[(0.0, 0.0), (4.0, 0.0), (1.5, 6.0)]],
        '8' => &[&[
            (1.0, 3.0), (0.0, 2.0), (0.0, 1.0), (1.0, 0.0), (3.0, 0.0), (4.0, 1.0), (4.0, 2.0), (3.0, 3.0),
            (1.0, 3.0), (0.0, 4.0), (0.0, 5.0), (1.0, 6.0), (3.0, 6.0), (4.0, 5.0), (4.0, 4.0), (3.0, 3.0),
        ]],
        '9' => &[&[(4.0, 3.5), (1.0, 3.5), (0.0, 2.5), (0.0, 1.0), (1.0, 0.0), (3.0, 0.0), (4.0, 1.0), (4.0, 5.0), (3.0, 6.0), (0.5, 6.0)]],
        'A' => &[&[(0.0, 6.0), (2.0, 0.0), (4.0, 6.0)], &[(0.7, 4.0), (3.3, 4.0)]],
        'B' => &[
            &[(0.0, 6.0), (0.0, 0.0), (3.0, 0.0), (4.0, 1.0), (4.0, 2.0), (3.0, 3.0), (0.0, 3.0)],
            &[(3.0, 3.0), (4.0, 4.0), (4.0, 5.0), (3.0, 6.0), (0.0, 6.0)],
        ],
        'C' => &[&[(4.0, 1.0), (3.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 5.0), (1.0, 6.0), (3.0, 6.0), (4.0, 5.0)]],
        'S' => &[&[
            (4.0, 1.0), (3.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 2.0), (1.0, 3.0), (3.0, 3.0), (4.0, 4.0),
            (4.0, 5.0), (3.0, 6.0), (1.0, 6.0), (0.0, 5.0),
        ]],
        'X' => &[&[(0.0, 0.0), (4.0, 6.0)], &[(4.0, 0.0), (0.0, 6.0)]],
        _ => return None,
    };
    Some(g)
}

/// Width in canvas units of `text` rendered at glyph height `height`.
pub fn text_width(text: &str, height: f64) -> f64 {
    let n = text.chars().count() as f64;
    if n == 0.0 {
        return 0.0;
    }
    (ADVANCE * n - (ADVANCE - GRID_W)) * height / GRID_H
}

/// Polylines for `text` centered on `center`. Unknown characters are
/// skipped but still advance the pen.
pub fn text_strokes(text: &str, center: Point2, height: f64) -> Vec<Vec<Point2>> {
    let scale = height / GRID_H;
    let x0 = center.x - text_width(text, height) / 2.0;
    let y0 = center.y - height / 2.0;
    let mut out = Vec::new();
    for (i, c) in text.chars().enumerate() {
        let Some(strokes) = glyph_strokes(c) else { continue };
        let ox = x0 + i as f64 * ADVANCE * scale;
        for s in strokes {
            out.push(s.iter().map(|&(x, y)| Point2::new(ox + x * scale, y0 + y * scale)).collect());
        }
    }
    out
}
