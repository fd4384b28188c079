//! Rejection-sampling helpers shared by every scene generator. Sizes are
//! authored for a 448 px canvas and scaled by the shorter canvas side.

use crate::geometry::{LineSegment, Point2, RandomStream};
use crate::render::{CanvasSpec, PaletteColor};

/// Inner margin every painted pixel keeps from the canvas edge.
pub const EDGE_MARGIN: f64 = 8.0;
const PLACEMENT_RETRIES: u32 = 100;
const MAX_RESAMPLES: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("placement failed after {resamples} resamples for {task} index {index}")]
pub struct PlacementExhausted {
    pub task: &'static str,
    pub index: u64,
    pub resamples: u32,
}

pub fn canvas_scale(canvas: &CanvasSpec) -> f64 {
    f64::from(canvas.width.min(canvas.height)) / 448.0
}

/// Draws parameters, then tries up to 100 placements; on failure the
/// parameters are redrawn and the resample counter bumped.
pub fn place_with_retries<P, T>(
    stream: &mut RandomStream,
    task: &'static str,
    mut sample: impl FnMut(&mut RandomStream) -> P,
    mut place: impl FnMut(&mut RandomStream, &P) -> Option<T>,
) -> Result<(T, u32), PlacementExhausted> {
    let mut resamples = 0;
    loop {
        let params = sample(stream);
        for _ in 0..PLACEMENT_RETRIES {
            if let Some(t) = place(stream, &params) {
                return Ok((t, resamples));
            }
        }
        resamples += 1;
        log::debug!("{task} index {}: placement failed, resample {resamples}", stream.path().index);
        if resamples >= MAX_RESAMPLES {
            return Err(PlacementExhausted { task, index: stream.path().index, resamples });
        }
    }
}

/// Uniform point whose disc of radius `r` stays inside the canvas margin
/// (stroke included).
pub fn interior_point(stream: &mut RandomStream, r: f64, canvas: &CanvasSpec) -> Option<Point2> {
    let pad = EDGE_MARGIN + canvas.stroke_width / 2.0 + r;
    let (w, h) = (f64::from(canvas.width), f64::from(canvas.height));
    if 2.0 * pad > w || 2.0 * pad > h {
        return None;
    }
    Some(Point2::new(stream.uniform(pad, w - pad), stream.uniform(pad, h - pad)))
}

/// Segment of length `len` along `dir` with a random midpoint that keeps the
/// stroke inside the canvas margin.
pub fn place_segment(
    stream: &mut RandomStream,
    dir: Point2,
    len: f64,
    canvas: &CanvasSpec,
    color: PaletteColor,
) -> Option<LineSegment> {
    let half = dir.scale(len / 2.0);
    let pad = EDGE_MARGIN + canvas.stroke_width / 2.0;
    let (hx, hy) = (half.x.abs(), half.y.abs());
    let (w, h) = (f64::from(canvas.width), f64::from(canvas.height));
    if 2.0 * (hx + pad) > w || 2.0 * (hy + pad) > h {
        return None;
    }
    let mid = Point2::new(stream.uniform(hx + pad, w - hx - pad), stream.uniform(hy + pad, h - hy - pad));
    LineSegment::new(mid.sub(half), mid.add(half), color).ok()
}
