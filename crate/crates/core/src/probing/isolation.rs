//! Single-object image sets with one class value per image: wedges with a
//! fixed sweep, and segments with a fixed length relative to canvas width.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::verify::{Disagreement, VerifyReport};
use super::ProbingError;
use crate::geometry::{derive_stream, measure_length, LineSegment, Point2, RandomStream, StreamPath, Wedge};
use crate::jsonl::{create_dir, read_json, read_jsonl, write_json, write_jsonl, JsonlError};
use crate::placement::{place_segment, PlacementExhausted, EDGE_MARGIN};
use crate::render::{fits_canvas, render_png, CanvasSpec, PaletteColor};
use crate::scene::{Element, Scene};

pub const ANGLE_CLASSES: [f64; 10] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];
pub const LINE_CLASSES: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const MAX_ATTEMPTS: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolationKind {
    Angle,
    Line,
}

impl IsolationKind {
    pub fn name(self) -> &'static str {
        match self {
            IsolationKind::Angle => "angle",
            IsolationKind::Line => "line",
        }
    }

    pub fn task_name(self) -> &'static str {
        match self {
            IsolationKind::Angle => "isolation_angle",
            IsolationKind::Line => "isolation_line",
        }
    }

    pub fn classes(self) -> &'static [f64; 10] {
        match self {
            IsolationKind::Angle => &ANGLE_CLASSES,
            IsolationKind::Line => &LINE_CLASSES,
        }
    }

    fn stream_id(self) -> u32 {
        match self {
            IsolationKind::Angle => 20,
            IsolationKind::Line => 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsolationMeta {
    Angle { wedge: Wedge },
    Line { segment: LineSegment, length: f64 },
}

impl IsolationMeta {
    pub fn scene(&self) -> Scene {
        match self {
            IsolationMeta::Angle { wedge } => Scene::new(vec![Element::Wedge(wedge.clone())]),
            IsolationMeta::Line { segment, .. } => Scene::new(vec![Element::Segment(segment.clone())]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationRecord {
    pub id: String,
    pub task: String,
    pub class: f64,
    pub image: String,
    pub meta: IsolationMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationHeader {
    pub kind: IsolationKind,
    pub seed: u64,
    pub per_class: usize,
    pub classes: Vec<f64>,
    pub generator_version: String,
    pub canvas: CanvasSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationManifest {
    pub kind: IsolationKind,
    pub records: Vec<IsolationRecord>,
}

/// One image of class `class` (a sweep in degrees, or a fraction of the
/// canvas width).
pub fn isolation_instance(
    kind: IsolationKind,
    class: f64,
    stream: &mut RandomStream,
    canvas: &CanvasSpec,
) -> Result<IsolationMeta, ProbingError> {
    let (w, h) = (f64::from(canvas.width), f64::from(canvas.height));
    let s = w.min(h) / 448.0;
    for _ in 0..MAX_ATTEMPTS {
        let meta = match kind {
            IsolationKind::Angle => {
                let radius = stream.uniform(80.0, 160.0) * s;
                let vertex = Point2::new(stream.uniform(0.0, w), stream.uniform(0.0, h));
                let start_deg = stream.uniform(0.0, 360.0);
                let wedge = Wedge { vertex, start_deg, sweep_deg: class, radius, color: PaletteColor::Black, label: None };
                IsolationMeta::Angle { wedge }
            }
            IsolationKind::Line => {
                let len = class * w;
                let dir = Point2::unit(stream.uniform(0.0, 180.0));
                let Some(segment) = place_segment(stream, dir, len, canvas, PaletteColor::Black) else { continue };
                IsolationMeta::Line { length: measure_length(&segment), segment }
            }
        };
        if fits_canvas(&meta.scene(), canvas, EDGE_MARGIN) {
            return Ok(meta);
        }
    }
    Err(PlacementExhausted { task: kind.task_name(), index: stream.path().index, resamples: MAX_ATTEMPTS }.into())
}

fn build(kind: IsolationKind, seed: u64, per_class: usize, canvas: &CanvasSpec, dir: &Path) -> Result<IsolationManifest, ProbingError> {
    create_dir(dir)?;
    let n = per_class * kind.classes().len();
    let records = (0..n)
        .into_par_iter()
        .map(|i| {
            let class = kind.classes()[i / per_class];
            let mut st = derive_stream(seed, StreamPath::new(kind.stream_id(), 0, i as u64));
            let meta = isolation_instance(kind, class, &mut st, canvas)?;
            let image = format!("{i:06}.png");
            let path = dir.join(&image);
            let png = render_png(&meta.scene(), canvas)?;
            std::fs::write(&path, png).map_err(|e| JsonlError::io(&path, e))?;
            Ok(IsolationRecord { id: format!("{}-{i:06}", kind.task_name()), task: kind.task_name().into(), class, image, meta })
        })
        .collect::<Result<Vec<_>, ProbingError>>()?;
    let header = IsolationHeader {
        kind,
        seed,
        per_class,
        classes: kind.classes().to_vec(),
        generator_version: super::GENERATOR_VERSION.to_string(),
        canvas: canvas.clone(),
    };
    write_jsonl(&dir.join("manifest.jsonl"), &records)?;
    write_json(&dir.join("manifest.header.json"), &header)?;
    log::info!("{}: {} images in {} classes", kind.task_name(), records.len(), kind.classes().len());
    Ok(IsolationManifest { kind, records })
}

/// Both isolation sets under `<out>/isolation/{angle,line}/`, `per_class`
/// images for each of the ten classes.
pub fn generate_isolation_sets(
    seed: u64,
    per_class: usize,
    canvas: &CanvasSpec,
    out: &Path,
) -> Result<[IsolationManifest; 2], ProbingError> {
    canvas.validate()?;
    let root = out.join("isolation");
    Ok([
        build(IsolationKind::Angle, seed, per_class, canvas, &root.join("angle"))?,
        build(IsolationKind::Line, seed, per_class, canvas, &root.join("line"))?,
    ])
}

fn check_record(r: &IsolationRecord, canvas: &CanvasSpec) -> Option<String> {
    match &r.meta {
        IsolationMeta::Angle { wedge } => {
            if !ANGLE_CLASSES.contains(&r.class) {
                Some(format!("class {} is not on the angle grid", r.class))
            } else if wedge.sweep_deg != r.class || (wedge.measured_sweep() - r.class).abs() > 1e-6 {
                Some(format!("wedge sweep {} does not match class {}", wedge.measured_sweep(), r.class))
            } else {
                None
            }
        }
        IsolationMeta::Line { segment, length } => {
            let want = r.class * f64::from(canvas.width);
            let got = measure_length(segment);
            if !LINE_CLASSES.contains(&r.class) {
                Some(format!("class {} is not on the line grid", r.class))
            } else if (got - want).abs() > 1e-6 * want || (got - length).abs() > 1e-9 * want {
                Some(format!("segment length {got} does not match class length {want}"))
            } else {
                None
            }
        }
    }
}

/// Check an isolation `manifest.jsonl` against its sibling header: class
/// values on the grid, per-class counts, and meta that realizes each class.
pub fn verify_isolation_file(path: &Path) -> Result<VerifyReport, ProbingError> {
    let header: IsolationHeader = read_json(&path.with_file_name("manifest.header.json"))?;
    let records: Vec<IsolationRecord> = read_jsonl(path)?;
    let mut report = VerifyReport::default();
    for r in &records {
        match check_record(r, &header.canvas) {
            None => report.agree += 1,
            Some(reason) => report.disagree.push(Disagreement { id: r.id.clone(), reason }),
        }
    }
    for &c in header.kind.classes() {
        let n = records.iter().filter(|r| r.class == c).count();
        if n != header.per_class {
            report.disagree.push(Disagreement { id: format!("class {c}"), reason: format!("{n} images, want {}", header.per_class) });
        }
    }
    Ok(report)
}
