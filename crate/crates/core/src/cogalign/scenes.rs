//! Scene construction for the eight preference tasks, one outcome class at a
//! time.

use serde::{Deserialize, Serialize};

use super::{CogError, CogTask, Outcome};
use crate::geometry::{
    relative_position, segment_segment_distance, CirclePair, LineSegment, Point2, RandomStream, ShapeInstance,
    ShapeKind, Solid, SolidDims, SolidKind, Wedge,
};
use crate::placement::{canvas_scale, interior_point, place_segment, place_with_retries, EDGE_MARGIN};
use crate::render::{fits_canvas, scene_bounds, CanvasSpec, PaletteColor};
use crate::scene::{Element, Scene};

/// Letters used to tag angles and lines.
pub const LETTERS: [char; 5] = ['A', 'B', 'C', 'S', 'X'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantityGroup {
    pub color: PaletteColor,
    pub kind: ShapeKind,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CogObjects {
    Angle { wedges: [Wedge; 2] },
    Length { segments: [LineSegment; 2] },
    Distance { pairs: [CirclePair; 2] },
    Quantity { groups: [QuantityGroup; 2], shapes: Vec<ShapeInstance> },
    Volume { solids: [Solid; 2], centers: [Point2; 2] },
    Position { shapes: [ShapeInstance; 2] },
    /// A black reference segment and two colored candidates.
    Slope { reference: LineSegment, lines: [LineSegment; 2] },
    Intersection { line: LineSegment, shape: ShapeInstance },
}

/// How statements can name one object of a scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RefInfo {
    pub color: PaletteColor,
    pub letter: Option<char>,
    pub noun: Option<String>,
}

impl CogObjects {
    pub fn task(&self) -> CogTask {
        match self {
            CogObjects::Angle { .. } => CogTask::Angle,
            CogObjects::Length { .. } => CogTask::Length,
            CogObjects::Distance { .. } => CogTask::Distance,
            CogObjects::Quantity { .. } => CogTask::Quantity,
            CogObjects::Volume { .. } => CogTask::Volume,
            CogObjects::Position { .. } => CogTask::Position,
            CogObjects::Slope { .. } => CogTask::Slope,
            CogObjects::Intersection { .. } => CogTask::Intersection,
        }
    }

    pub fn scene(&self) -> Scene {
        let elements = match self {
            CogObjects::Angle { wedges } => wedges.iter().cloned().map(Element::Wedge).collect(),
            CogObjects::Length { segments } => segments.iter().cloned().map(Element::Segment).collect(),
            CogObjects::Distance { pairs } => pairs.iter().cloned().map(Element::CirclePair).collect(),
            CogObjects::Quantity { shapes, .. } => shapes.iter().cloned().map(Element::Shape).collect(),
            CogObjects::Volume { solids, centers } => solids
                .iter()
                .zip(centers)
                .map(|(s, &c)| Element::Solid { solid: s.clone(), center: c })
                .collect(),
            CogObjects::Position { shapes } => shapes.iter().cloned().map(Element::Shape).collect(),
            CogObjects::Slope { reference, lines } => std::iter::once(reference)
                .chain(lines)
                .cloned()
                .map(Element::Segment)
                .collect(),
            CogObjects::Intersection { line, shape } => {
                // line on top so the crossing stays visible over a filled shape
                vec![Element::Shape(shape.clone()), Element::Segment(line.clone())]
            }
        };
        Scene::new(elements)
    }

    pub(crate) fn refs(&self) -> Vec<RefInfo> {
        let plain = |color| RefInfo { color, letter: None, noun: None };
        let shape = |s: &ShapeInstance| RefInfo { color: s.color, letter: None, noun: Some(s.kind.name().into()) };
        match self {
            CogObjects::Angle { wedges } => {
                wedges.iter().map(|w| RefInfo { color: w.color, letter: w.label, noun: None }).collect()
            }
            CogObjects::Length { segments } => {
                segments.iter().map(|s| RefInfo { color: s.color, letter: s.label, noun: None }).collect()
            }
            CogObjects::Distance { pairs } => pairs.iter().map(|p| plain(p.color)).collect(),
            CogObjects::Quantity { groups, .. } => groups
                .iter()
                .map(|g| RefInfo { color: g.color, letter: None, noun: Some(g.kind.name().into()) })
                .collect(),
            CogObjects::Volume { solids, .. } => solids
                .iter()
                .map(|s| RefInfo { color: s.color, letter: None, noun: Some(s.kind().name().into()) })
                .collect(),
            CogObjects::Position { shapes } => shapes.iter().map(shape).collect(),
            CogObjects::Slope { lines, .. } => lines.iter().map(|l| plain(l.color)).collect(),
            CogObjects::Intersection { shape: s, .. } => vec![shape(s)],
        }
    }
}

/// Two magnitudes for a comparison outcome: equal for `Same`, otherwise drawn
/// until `ok` accepts them and ordered so object A wins for `AGreater`.
fn ordered_pair(
    st: &mut RandomStream,
    outcome: Outcome,
    mut draw: impl FnMut(&mut RandomStream) -> f64,
    ok: impl Fn(f64, f64) -> bool,
) -> [f64; 2] {
    if outcome == Outcome::Same {
        let v = draw(st);
        return [v, v];
    }
    let (a, b) = loop {
        let (a, b) = (draw(st), draw(st));
        if ok(a, b) {
            break (a.max(b), a.min(b));
        }
    };
    if outcome == Outcome::AGreater {
        [a, b]
    } else {
        [b, a]
    }
}

fn rel_gap_ok(margin: f64) -> impl Fn(f64, f64) -> bool {
    move |a, b| (a - b).abs() / a.max(b) >= margin
}

fn angle_scene(st: &mut RandomStream, outcome: Outcome, canvas: &CanvasSpec) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let sample = |st: &mut RandomStream| {
        let sweeps = ordered_pair(st, outcome, |st| st.uniform(20.0, 160.0), |a, b| (a - b).abs() >= 10.0);
        let radii = [st.uniform(55.0, 95.0) * s, st.uniform(55.0, 95.0) * s];
        let starts = [st.uniform(0.0, 360.0), st.uniform(0.0, 360.0)];
        (sweeps, radii, starts, st.pick_two(&PaletteColor::CHROMATIC), st.pick_two(&LETTERS))
    };
    let place = |st: &mut RandomStream, p: &([f64; 2], [f64; 2], [f64; 2], (PaletteColor, PaletteColor), (char, char))| {
        let (sweeps, radii, starts, colors, letters) = *p;
        let va = interior_point(st, radii[0], canvas)?;
        let vb = interior_point(st, radii[1], canvas)?;
        if va.dist(vb) < radii[0] + radii[1] + canvas.stroke_width + 10.0 * s {
            return None;
        }
        let mk = |v, i: usize, color, label| Wedge {
            vertex: v,
            start_deg: starts[i],
            sweep_deg: sweeps[i],
            radius: radii[i],
            color,
            label: Some(label),
        };
        let objects = CogObjects::Angle { wedges: [mk(va, 0, colors.0, letters.0), mk(vb, 1, colors.1, letters.1)] };
        fits_canvas(&objects.scene(), canvas, EDGE_MARGIN).then_some(objects)
    };
    Ok(place_with_retries(st, CogTask::Angle.name(), sample, place)?)
}

fn length_scene(st: &mut RandomStream, outcome: Outcome, canvas: &CanvasSpec) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let sample = |st: &mut RandomStream| {
        let lens = ordered_pair(st, outcome, |st| st.uniform(60.0, 300.0) * s, rel_gap_ok(0.1));
        let dirs = [Point2::unit(st.uniform(0.0, 180.0)), Point2::unit(st.uniform(0.0, 180.0))];
        (lens, dirs, st.pick_two(&PaletteColor::CHROMATIC), st.pick_two(&LETTERS))
    };
    let place = |st: &mut RandomStream, p: &([f64; 2], [Point2; 2], (PaletteColor, PaletteColor), (char, char))| {
        let (lens, dirs, colors, letters) = *p;
        let a = place_segment(st, dirs[0], lens[0], canvas, colors.0)?.with_label(letters.0);
        let b = place_segment(st, dirs[1], lens[1], canvas, colors.1)?.with_label(letters.1);
        // leave room for the letter tags between the lines
        if segment_segment_distance(a.p0, a.p1, b.p0, b.p1) < 40.0 * s {
            return None;
        }
        let objects = CogObjects::Length { segments: [a, b] };
        fits_canvas(&objects.scene(), canvas, EDGE_MARGIN).then_some(objects)
    };
    Ok(place_with_retries(st, CogTask::Length.name(), sample, place)?)
}

fn distance_scene(st: &mut RandomStream, outcome: Outcome, canvas: &CanvasSpec) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let (w, h) = (f64::from(canvas.width), f64::from(canvas.height));
    let sample = |st: &mut RandomStream| {
        let dists = ordered_pair(st, outcome, |st| st.uniform(50.0, 220.0) * s, rel_gap_ok(0.1));
        let radius = st.uniform(10.0, 16.0) * s;
        (dists, radius, st.pick_two(&PaletteColor::CHROMATIC))
    };
    let place = |st: &mut RandomStream, p: &([f64; 2], f64, (PaletteColor, PaletteColor))| {
        let (dists, r, colors) = *p;
        let pad = EDGE_MARGIN + canvas.stroke_width / 2.0 + r;
        let inside = |q: Point2| q.x >= pad && q.x <= w - pad && q.y >= pad && q.y <= h - pad;
        let mut pairs = Vec::with_capacity(2);
        for (i, color) in [colors.0, colors.1].into_iter().enumerate() {
            let a = interior_point(st, r, canvas)?;
            let b = a.add(Point2::unit(st.uniform(0.0, 360.0)).scale(dists[i]));
            if !inside(b) {
                return None;
            }
            pairs.push(CirclePair { a_center: a, b_center: b, radius: r, color });
        }
        let centers: Vec<Point2> = pairs.iter().flat_map(|p| [p.a_center, p.b_center]).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                if centers[i].dist(centers[j]) < 2.0 * r + 10.0 * s {
                    return None;
                }
            }
        }
        let pairs: [CirclePair; 2] = pairs.try_into().ok()?;
        Some(CogObjects::Distance { pairs })
    };
    Ok(place_with_retries(st, CogTask::Distance.name(), sample, place)?)
}

fn quantity_scene(st: &mut RandomStream, outcome: Outcome, canvas: &CanvasSpec) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let sample = |st: &mut RandomStream| {
        let counts = ordered_pair(st, outcome, |st| st.int_inclusive(2, 9) as f64, |a, b| a != b);
        let colors = st.pick_two(&PaletteColor::CHROMATIC);
        let kinds = st.pick_two(&ShapeKind::ALL);
        [
            QuantityGroup { color: colors.0, kind: kinds.0, count: counts[0] as u32 },
            QuantityGroup { color: colors.1, kind: kinds.1, count: counts[1] as u32 },
        ]
    };
    let place = |st: &mut RandomStream, groups: &[QuantityGroup; 2]| {
        let mut shapes: Vec<ShapeInstance> = Vec::new();
        for g in groups {
            for _ in 0..g.count {
                let size = st.uniform(14.0, 20.0) * s;
                let mut placed = false;
                for _ in 0..100 {
                    let center = interior_point(st, size, canvas)?;
                    if shapes.iter().all(|o| o.center.dist(center) >= o.size + size + 6.0 * s) {
                        shapes.push(ShapeInstance { kind: g.kind, color: g.color, center, size });
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    return None;
                }
            }
        }
        Some(CogObjects::Quantity { groups: *groups, shapes })
    };
    Ok(place_with_retries(st, CogTask::Quantity.name(), sample, place)?)
}

/// Dimensions of a solid of kind `kind` whose volume is `side^3`.
fn solid_dims(kind: SolidKind, side: f64, aspect: f64) -> SolidDims {
    use std::f64::consts::PI;
    match kind {
        SolidKind::Cube => SolidDims::Cube { edge: side },
        SolidKind::Sphere => SolidDims::Sphere { radius: side * (3.0 / (4.0 * PI)).cbrt() },
        SolidKind::Cylinder => {
            let radius = side / (PI * aspect).cbrt();
            SolidDims::Cylinder { radius, height: aspect * radius }
        }
    }
}

fn volume_scene(st: &mut RandomStream, outcome: Outcome, canvas: &CanvasSpec) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let sample = |st: &mut RandomStream| {
        // volumes differ by at least 20 percent
        let sides = ordered_pair(st, outcome, |st| st.uniform(45.0, 90.0) * s, |a, b| {
            let r = a.max(b) / a.min(b);
            r * r * r >= 1.2
        });
        let kinds = st.pick_two(&SolidKind::ALL);
        let colors = st.pick_two(&PaletteColor::CHROMATIC);
        let aspects = [st.uniform(0.8, 1.6), st.uniform(0.8, 1.6)];
        let mk = |i: usize, k, c| Solid::new(solid_dims(k, sides[i], aspects[i]), c).expect("positive dims");
        [mk(0, kinds.0, colors.0), mk(1, kinds.1, colors.1)]
    };
    let place = |st: &mut RandomStream, solids: &[Solid; 2]| {
        let centers = [interior_point(st, 0.0, canvas)?, interior_point(st, 0.0, canvas)?];
        let objects = CogObjects::Volume { solids: solids.clone(), centers };
        if !fits_canvas(&objects.scene(), canvas, EDGE_MARGIN) {
            return None;
        }
        let boxes: Vec<_> = solids
            .iter()
            .zip(centers)
            .map(|(sol, c)| scene_bounds(&Scene::new(vec![Element::Solid { solid: sol.clone(), center: c }]), canvas))
            .collect();
        let gap = 12.0 * s;
        let (a, b) = (boxes[0], boxes[1]);
        let apart = a.2 + gap <= b.0 || b.2 + gap <= a.0 || a.3 + gap <= b.1 || b.3 + gap <= a.1;
        apart.then_some(objects)
    };
    Ok(place_with_retries(st, CogTask::Volume.name(), sample, place)?)
}

fn position_scene(st: &mut RandomStream, outcome: Outcome, canvas: &CanvasSpec) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let rel = outcome.rel().ok_or(CogError::WrongTask(CogTask::Position))?;
    let sample = |st: &mut RandomStream| {
        let kinds = st.pick_two(&ShapeKind::ALL);
        let colors = st.pick_two(&PaletteColor::CHROMATIC);
        let sizes = [st.uniform(18.0, 28.0) * s, st.uniform(18.0, 28.0) * s];
        (kinds, colors, sizes)
    };
    let place = |st: &mut RandomStream, p: &((ShapeKind, ShapeKind), (PaletteColor, PaletteColor), [f64; 2])| {
        let (kinds, colors, sizes) = *p;
        let a = interior_point(st, sizes[0], canvas)?;
        let d = st.uniform(90.0, 220.0) * s;
        let o = st.uniform(-0.4, 0.4) * d;
        // offset from A to B: A left of B means B lies further right
        let off = match rel {
            crate::geometry::RelPosition::LeftOf => Point2::new(d, o),
            crate::geometry::RelPosition::RightOf => Point2::new(-d, o),
            crate::geometry::RelPosition::Above => Point2::new(o, d),
            crate::geometry::RelPosition::Below => Point2::new(o, -d),
        };
        let shapes = [
            ShapeInstance { kind: kinds.0, color: colors.0, center: a, size: sizes[0] },
            ShapeInstance { kind: kinds.1, color: colors.1, center: a.add(off), size: sizes[1] },
        ];
        if relative_position(&shapes[0], &shapes[1]).ok() != Some(rel) {
            return None;
        }
        let objects = CogObjects::Position { shapes };
        fits_canvas(&objects.scene(), canvas, EDGE_MARGIN).then_some(objects)
    };
    Ok(place_with_retries(st, CogTask::Position.name(), sample, place)?)
}

fn slope_scene(st: &mut RandomStream, outcome: Outcome, canvas: &CanvasSpec) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let parallel = match outcome {
        Outcome::OnlyA => [true, false],
        Outcome::OnlyB => [false, true],
        Outcome::Both => [true, true],
        Outcome::Neither => [false, false],
        _ => return Err(CogError::WrongTask(CogTask::Slope)),
    };
    let sample = |st: &mut RandomStream| {
        let theta = st.uniform(0.0, 180.0);
        let dir = |st: &mut RandomStream, par: bool| {
            if par {
                Point2::unit(theta)
            } else {
                let sign = if st.coin() { 1.0 } else { -1.0 };
                Point2::unit(theta + sign * st.uniform(10.0, 90.0))
            }
        };
        let dirs = [Point2::unit(theta), dir(st, parallel[0]), dir(st, parallel[1])];
        let lens = [st.uniform(120.0, 200.0) * s, st.uniform(100.0, 200.0) * s, st.uniform(100.0, 200.0) * s];
        (dirs, lens, st.pick_two(&PaletteColor::CHROMATIC))
    };
    let place = |st: &mut RandomStream, p: &([Point2; 3], [f64; 3], (PaletteColor, PaletteColor))| {
        let (dirs, lens, colors) = *p;
        let reference = place_segment(st, dirs[0], lens[0], canvas, PaletteColor::Black)?;
        let a = place_segment(st, dirs[1], lens[1], canvas, colors.0)?;
        let b = place_segment(st, dirs[2], lens[2], canvas, colors.1)?;
        let segs = [&reference, &a, &b];
        for i in 0..3 {
            for j in i + 1..3 {
                if segment_segment_distance(segs[i].p0, segs[i].p1, segs[j].p0, segs[j].p1) < 24.0 * s {
                    return None;
                }
            }
        }
        Some(CogObjects::Slope { reference, lines: [a, b] })
    };
    Ok(place_with_retries(st, CogTask::Slope.name(), sample, place)?)
}

fn intersection_scene(
    st: &mut RandomStream,
    outcome: Outcome,
    canvas: &CanvasSpec,
) -> Result<(CogObjects, u32), CogError> {
    let s = canvas_scale(canvas);
    let yes = match outcome {
        Outcome::Yes => true,
        Outcome::No => false,
        _ => return Err(CogError::WrongTask(CogTask::Intersection)),
    };
    let sample = |st: &mut RandomStream| {
        let kind = *st.pick(&ShapeKind::ALL);
        let color = *st.pick(&PaletteColor::CHROMATIC);
        let size = st.uniform(30.0, 60.0) * s;
        let len = st.uniform(160.0, 300.0) * s;
        (kind, color, size, len)
    };
    let place = |st: &mut RandomStream, p: &(ShapeKind, PaletteColor, f64, f64)| {
        let (kind, color, size, len) = *p;
        let center = interior_point(st, size, canvas)?;
        let shape = ShapeInstance { kind, color, center, size };
        let d = Point2::unit(st.uniform(0.0, 180.0));
        let n = d.perp();
        // the line's closest approach to the center sits at perpendicular offset o
        let o = if yes {
            let max = shape.inradius() - 6.0;
            if max <= 0.0 {
                return None;
            }
            st.uniform(-max, max)
        } else {
            let sign = if st.coin() { 1.0 } else { -1.0 };
            sign * (size + st.uniform(6.0, 60.0 * s + 6.0))
        };
        // keep the whole chord through the shape on the segment
        let slack = len / 2.0 - size - 6.0;
        if slack <= 0.0 {
            return None;
        }
        let t = st.uniform(-slack, slack);
        let mid = center.add(n.scale(o)).add(d.scale(t));
        let half = d.scale(len / 2.0);
        let line = LineSegment::new(mid.sub(half), mid.add(half), PaletteColor::Black).ok()?;
        let objects = CogObjects::Intersection { line, shape };
        fits_canvas(&objects.scene(), canvas, EDGE_MARGIN).then_some(objects)
    };
    Ok(place_with_retries(st, CogTask::Intersection.name(), sample, place)?)
}

/// Objects realizing `outcome` for `task`, plus the resample count.
pub fn generate_scene(
    task: CogTask,
    outcome: Outcome,
    stream: &mut RandomStream,
    canvas: &CanvasSpec,
) -> Result<(CogObjects, u32), CogError> {
    if !task.outcomes().contains(&outcome) {
        return Err(CogError::WrongTask(task));
    }
    match task {
        CogTask::Angle => angle_scene(stream, outcome, canvas),
        CogTask::Length => length_scene(stream, outcome, canvas),
        CogTask::Distance => distance_scene(stream, outcome, canvas),
        CogTask::Quantity => quantity_scene(stream, outcome, canvas),
        CogTask::Volume => volume_scene(stream, outcome, canvas),
        CogTask::Position => position_scene(stream, outcome, canvas),
        CogTask::Slope => slope_scene(stream, outcome, canvas),
        CogTask::Intersection => intersection_scene(stream, outcome, canvas),
    }
}
