//! Response templates, their structured claims, and truth evaluation of a
//! claim against scene objects.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::scenes::CogObjects;
use super::{CogError, CogTask};
use crate::geometry::{
    center_distance, intersects, measure_length, orientation_deg, orientation_gap_deg, penetration_depth,
    relative_position, segment_shape_distance, solid_volume, Point2, RelPosition, ShapeKind, SolidKind,
};
use crate::render::PaletteColor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponseTemplate {
    pub task: CogTask,
    pub row: u8,
    pub text: &'static str,
}

const fn t(task: CogTask, row: u8, text: &'static str) -> ResponseTemplate {
    ResponseTemplate { task, row, text }
}

/// The full response template table.
pub const TEMPLATES: &[ResponseTemplate] = &[
    t(CogTask::Angle, 1, "The angle with the [COLOR] color is larger."),
    t(CogTask::Angle, 2, "The angle X is larger."),
    t(CogTask::Angle, 3, "The angle with the [COLOR] color is smaller."),
    t(CogTask::Angle, 4, "The angle X is smaller."),
    t(CogTask::Angle, 5, "These two angles are the same."),
    t(CogTask::Length, 1, "The line with the [COLOR] color is longer."),
    t(CogTask::Length, 2, "The line X is longer."),
    t(CogTask::Length, 3, "The line with the [COLOR] color is shorter."),
    t(CogTask::Length, 4, "The line X is shorter."),
    t(CogTask::Length, 5, "These two lines are the same length."),
    t(CogTask::Distance, 1, "The pair of circles with the [COLOR] color has the longer distance."),
    t(CogTask::Distance, 2, "The pair of circles with the [COLOR] color has the smaller distance."),
    t(CogTask::Distance, 3, "These two pair of circles have the same distance."),
    t(CogTask::Quantity, 1, "The [COLOR] [SHAPE] appears more times."),
    t(CogTask::Quantity, 2, "The [COLOR] [SHAPE] appears less times."),
    t(CogTask::Quantity, 3, "The [COLOR-A] [SHAPE-A] and [COLOR-B] [SHAPE-B] appear the same number of times."),
    t(CogTask::Volume, 1, "The [COLOR] [SHAPE] has the larger volume."),
    t(CogTask::Volume, 2, "The [COLOR] [SHAPE] has the smaller volume."),
    t(CogTask::Volume, 3, "These two shapes have the same volume."),
    t(CogTask::Slope, 1, "The line with the [COLOR] has the same slope."),
    t(CogTask::Slope, 2, "Both lines have the same slope as the black line."),
    t(CogTask::Slope, 3, "Neither line has the same slope as the black line."),
    t(CogTask::Position, 1, "The [COLOR-A] [SHAPE-A] is [POSITION] of [COLOR-B] [SHAPE-B]."),
    t(CogTask::Position, 2, "They occupy the exact same position in the image."),
    t(CogTask::Position, 3, "The [COLOR-A] [SHAPE-A] is [WRONG-POSITION] of [COLOR-B] [SHAPE-B]."),
    t(CogTask::Intersection, 1, "Yes, the line does intersect the [COLOR] [SHAPE]."),
    t(CogTask::Intersection, 2, "No, the line does not intersect the [COLOR] [SHAPE]."),
];

/// Query phrasings per task; index 0 is the canonical one.
pub const PROMPTS: [(CogTask, [&str; 5]); 8] = [
    (CogTask::Angle, [
        "Compare the two angles shown. Which is larger, or are they the same?",
        "Which of the two angles in the image is larger?",
        "Look at the two angles. Is one of them larger than the other?",
        "Are the two angles equal, or is one larger?",
        "How do the sizes of the two angles compare?",
    ]),
    (CogTask::Length, [
        "Compare the two lines shown. Which is longer, or are they the same length?",
        "Which of the two lines in the image is longer?",
        "Look at the two lines. Is one of them longer than the other?",
        "Are the two lines equal in length, or is one longer?",
        "How do the lengths of the two lines compare?",
    ]),
    (CogTask::Distance, [
        "Compare the two pairs of circles. Which pair is farther apart, or are the distances the same?",
        "Which pair of circles has the longer distance between its circles?",
        "Look at the two pairs of circles. Is one pair farther apart than the other?",
        "Are the distances within the two circle pairs equal, or is one longer?",
        "How do the distances of the two circle pairs compare?",
    ]),
    (CogTask::Quantity, [
        "Compare the two kinds of shapes. Which appears more times, or do they appear equally often?",
        "Which shape appears more often in the image?",
        "Count the two kinds of shapes. Is one more frequent than the other?",
        "Do the two kinds of shapes appear the same number of times?",
        "How do the counts of the two kinds of shapes compare?",
    ]),
    (CogTask::Volume, [
        "Compare the two solids shown. Which has the larger volume, or are they the same?",
        "Which of the two solids has the larger volume?",
        "Look at the two solids. Does one hold more volume than the other?",
        "Are the volumes of the two solids equal, or is one larger?",
        "How do the volumes of the two solids compare?",
    ]),
    (CogTask::Position, [
        "Describe where the two shapes are relative to each other.",
        "Where is one shape located relative to the other?",
        "How are the two shapes positioned relative to each other?",
        "What is the relative position of the two shapes?",
        "Look at the two shapes. Where does one sit relative to the other?",
    ]),
    (CogTask::Slope, [
        "Compare the colored lines with the black line. Which of them has the same slope?",
        "Which colored line has the same slope as the black line?",
        "Do any of the colored lines share the slope of the black line?",
        "Look at the black line. Which colored lines are parallel to it?",
        "How do the slopes of the colored lines compare with the black line?",
    ]),
    (CogTask::Intersection, [
        "Does the line intersect the shape?",
        "Does the black line cross the shape in the image?",
        "Look at the line and the shape. Do they intersect?",
        "Is there an intersection between the line and the shape?",
        "Does the line pass through the shape?",
    ]),
];

pub(crate) fn prompts(task: CogTask) -> &'static [&'static str; 5] {
    &PROMPTS.iter().find(|(t, _)| *t == task).expect("every task has prompts").1
}

/// How a statement names one object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjRef {
    Color(PaletteColor),
    Letter(char),
    /// Color plus shape noun, e.g. red cube.
    ColorShape(PaletteColor, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "claim", rename_all = "snake_case")]
pub enum Claim {
    /// Larger, longer, more, longer distance or larger volume.
    Greater { subject: ObjRef },
    Smaller { subject: ObjRef },
    Same,
    SameCount { a: ObjRef, b: ObjRef },
    SlopeOnly { color: PaletteColor },
    SlopeBoth,
    SlopeNeither,
    Position { a: ObjRef, rel: RelPosition, b: ObjRef },
    SamePosition,
    Intersects { yes: bool, target: ObjRef },
}

pub(crate) fn position_words(r: RelPosition) -> &'static str {
    match r {
        RelPosition::LeftOf => "to the left",
        RelPosition::RightOf => "to the right",
        RelPosition::Above => "on top",
        RelPosition::Below => "at the bottom",
    }
}

fn position_from_words(s: &str) -> Option<RelPosition> {
    RelPosition::ALL.into_iter().find(|&r| position_words(r) == s)
}

fn template(task: CogTask, row: u8) -> &'static ResponseTemplate {
    TEMPLATES.iter().find(|t| t.task == task && t.row == row).expect("template row exists")
}

fn fill_ref(text: &str, r: &ObjRef, suffix: &str) -> String {
    match r {
        ObjRef::Color(c) => text.replace(&format!("[COLOR{suffix}]"), c.name()),
        ObjRef::Letter(l) => text.replace(" X ", &format!(" {l} ")),
        ObjRef::ColorShape(c, s) => {
            text.replace(&format!("[COLOR{suffix}]"), c.name()).replace(&format!("[SHAPE{suffix}]"), s)
        }
    }
}

/// Template row a claim is rendered with. Position claims use row 3 when
/// `wrong_position` is set.
pub(crate) fn claim_row(task: CogTask, claim: &Claim, wrong_position: bool) -> Result<u8, CogError> {
    let two_styles = matches!(task, CogTask::Angle | CogTask::Length);
    let row = match (task, claim) {
        (_, Claim::Greater { subject }) if two_styles => {
            if matches!(subject, ObjRef::Letter(_)) { 2 } else { 1 }
        }
        (_, Claim::Smaller { subject }) if two_styles => {
            if matches!(subject, ObjRef::Letter(_)) { 4 } else { 3 }
        }
        (CogTask::Angle | CogTask::Length, Claim::Same) => 5,
        (CogTask::Distance | CogTask::Quantity | CogTask::Volume, Claim::Greater { .. }) => 1,
        (CogTask::Distance | CogTask::Quantity | CogTask::Volume, Claim::Smaller { .. }) => 2,
        (CogTask::Distance | CogTask::Volume, Claim::Same) => 3,
        (CogTask::Quantity, Claim::SameCount { .. }) => 3,
        (CogTask::Slope, Claim::SlopeOnly { .. }) => 1,
        (CogTask::Slope, Claim::SlopeBoth) => 2,
        (CogTask::Slope, Claim::SlopeNeither) => 3,
        (CogTask::Position, Claim::Position { .. }) => if wrong_position { 3 } else { 1 },
        (CogTask::Position, Claim::SamePosition) => 2,
        (CogTask::Intersection, Claim::Intersects { yes, .. }) => if *yes { 1 } else { 2 },
        _ => return Err(CogError::WrongTask(task)),
    };
    Ok(row)
}

/// Fill the template for `claim` at `row`.
pub fn render_claim(task: CogTask, claim: &Claim, row: u8) -> String {
    let text = template(task, row).text.to_string();
    match claim {
        Claim::Greater { subject } | Claim::Smaller { subject } => fill_ref(&text, subject, ""),
        Claim::SameCount { a, b } => fill_ref(&fill_ref(&text, a, "-A"), b, "-B"),
        Claim::SlopeOnly { color } => text.replace("[COLOR]", color.name()),
        Claim::Position { a, rel, b } => {
            let t = fill_ref(&fill_ref(&text, a, "-A"), b, "-B");
            t.replace("[POSITION]", position_words(*rel)).replace("[WRONG-POSITION]", position_words(*rel))
        }
        Claim::Intersects { target, .. } => fill_ref(&text, target, ""),
        Claim::Same | Claim::SlopeBoth | Claim::SlopeNeither | Claim::SamePosition => text,
    }
}

const COLOR_RE: &str = "[a-z]+";
const SHAPE_RE: &str = "[a-z]+";

fn placeholder_pattern(ph: &str) -> String {
    match ph {
        "[COLOR]" => format!("(?P<c>{COLOR_RE})"),
        "[SHAPE]" => format!("(?P<s>{SHAPE_RE})"),
        "[COLOR-A]" => format!("(?P<ca>{COLOR_RE})"),
        "[COLOR-B]" => format!("(?P<cb>{COLOR_RE})"),
        "[SHAPE-A]" => format!("(?P<sa>{SHAPE_RE})"),
        "[SHAPE-B]" => format!("(?P<sb>{SHAPE_RE})"),
        "[POSITION]" | "[WRONG-POSITION]" => "(?P<pos>[a-z ]+?)".to_string(),
        " X " => " (?P<l>[A-Z]) ".to_string(),
        other => unreachable!("unknown placeholder {other}"),
    }
}

fn template_regex(t: &ResponseTemplate) -> Regex {
    let ph = Regex::new(r"\[[A-Z-]+\]| X ").expect("placeholder regex");
    let mut pat = String::from("^");
    let mut last = 0;
    for m in ph.find_iter(t.text) {
        pat.push_str(&regex::escape(&t.text[last..m.start()]));
        pat.push_str(&placeholder_pattern(m.as_str()));
        last = m.end();
    }
    pat.push_str(&regex::escape(&t.text[last..]));
    pat.push('$');
    Regex::new(&pat).expect("template regex compiles")
}

fn regexes() -> &'static Vec<(ResponseTemplate, Regex)> {
    static CELL: OnceLock<Vec<(ResponseTemplate, Regex)>> = OnceLock::new();
    CELL.get_or_init(|| TEMPLATES.iter().map(|t| (*t, template_regex(t))).collect())
}

fn known_noun(s: &str) -> bool {
    ShapeKind::from_name(s).is_some() || SolidKind::from_name(s).is_some()
}

/// Parse a template-realized statement back into its claim and row.
pub fn parse_statement(task: CogTask, text: &str) -> Result<(Claim, u8), CogError> {
    let unparsed = || CogError::Unparsed { task, text: text.to_string() };
    for (tpl, re) in regexes().iter().filter(|(t, _)| t.task == task) {
        let Some(cap) = re.captures(text.trim()) else { continue };
        let color = |name: &str| -> Result<PaletteColor, CogError> {
            cap.name(name).and_then(|m| PaletteColor::from_name(m.as_str())).ok_or_else(unparsed)
        };
        let noun = |name: &str| -> Result<String, CogError> {
            let s = cap.name(name).map(|m| m.as_str()).ok_or_else(unparsed)?;
            if known_noun(s) {
                Ok(s.to_string())
            } else {
                Err(unparsed())
            }
        };
        let single = || -> Result<ObjRef, CogError> {
            if let Some(l) = cap.name("l") {
                return Ok(ObjRef::Letter(l.as_str().chars().next().ok_or_else(unparsed)?));
            }
            let c = color("c")?;
            if cap.name("s").is_some() {
                Ok(ObjRef::ColorShape(c, noun("s")?))
            } else {
                Ok(ObjRef::Color(c))
            }
        };
        let pair = || -> Result<(ObjRef, ObjRef), CogError> {
            Ok((ObjRef::ColorShape(color("ca")?, noun("sa")?), ObjRef::ColorShape(color("cb")?, noun("sb")?)))
        };
        let claim = match (task, tpl.row) {
            (CogTask::Angle | CogTask::Length, 1 | 2) => Claim::Greater { subject: single()? },
            (CogTask::Angle | CogTask::Length, 3 | 4) => Claim::Smaller { subject: single()? },
            (CogTask::Angle | CogTask::Length, 5) => Claim::Same,
            (CogTask::Distance | CogTask::Quantity | CogTask::Volume, 1) => Claim::Greater { subject: single()? },
            (CogTask::Distance | CogTask::Quantity | CogTask::Volume, 2) => Claim::Smaller { subject: single()? },
            (CogTask::Distance | CogTask::Volume, 3) => Claim::Same,
            (CogTask::Quantity, 3) => {
                let (a, b) = pair()?;
                Claim::SameCount { a, b }
            }
            (CogTask::Slope, 1) => Claim::SlopeOnly { color: color("c")? },
            (CogTask::Slope, 2) => Claim::SlopeBoth,
            (CogTask::Slope, 3) => Claim::SlopeNeither,
            (CogTask::Position, 1 | 3) => {
                let (a, b) = pair()?;
                let rel = cap.name("pos").and_then(|m| position_from_words(m.as_str())).ok_or_else(unparsed)?;
                Claim::Position { a, rel, b }
            }
            (CogTask::Position, 2) => Claim::SamePosition,
            (CogTask::Intersection, r) => Claim::Intersects { yes: r == 1, target: single()? },
            _ => return Err(unparsed()),
        };
        return Ok((claim, tpl.row));
    }
    Err(unparsed())
}

const REL_EPS: f64 = 1e-9;
/// Orientation tolerance in degrees for "same slope".
pub(crate) const SLOPE_EPS_DEG: f64 = 1e-6;

fn resolve(objects: &CogObjects, r: &ObjRef) -> Result<usize, CogError> {
    let refs = objects.refs();
    let hits: Vec<usize> = refs
        .iter()
        .enumerate()
        .filter(|(_, o)| match (r, o) {
            (ObjRef::Color(c), o) => o.color == *c,
            (ObjRef::Letter(l), o) => o.letter == Some(*l),
            (ObjRef::ColorShape(c, s), o) => o.color == *c && o.noun.as_deref() == Some(s.as_str()),
        })
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [i] => Ok(*i),
        _ => Err(CogError::UnknownRef(format!("{r:?}"))),
    }
}

/// The compared quantity for each of the two objects.
pub(crate) fn magnitudes(objects: &CogObjects) -> Option<[f64; 2]> {
    Some(match objects {
        CogObjects::Angle { wedges } => [wedges[0].sweep_deg, wedges[1].sweep_deg],
        CogObjects::Length { segments } => [measure_length(&segments[0]), measure_length(&segments[1])],
        CogObjects::Distance { pairs } => [center_distance(&pairs[0]), center_distance(&pairs[1])],
        CogObjects::Quantity { shapes, groups } => {
            let count = |g: usize| {
                shapes.iter().filter(|s| s.color == groups[g].color && s.kind == groups[g].kind).count() as f64
            };
            [count(0), count(1)]
        }
        CogObjects::Volume { solids, .. } => [solid_volume(&solids[0]), solid_volume(&solids[1])],
        _ => return None,
    })
}

pub(crate) fn same_magnitude(m: [f64; 2]) -> bool {
    (m[0] - m[1]).abs() <= REL_EPS * m[0].abs().max(m[1].abs())
}

/// Whether each colored line shares the reference orientation.
pub(crate) fn parallel_flags(objects: &CogObjects) -> Option<[bool; 2]> {
    let CogObjects::Slope { reference, lines } = objects else { return None };
    let r = orientation_deg(reference);
    Some([0, 1].map(|i| orientation_gap_deg(r, orientation_deg(&lines[i])) <= SLOPE_EPS_DEG))
}

/// Truth value of `claim` for the scene objects, from geometry alone.
pub fn evaluate(claim: &Claim, objects: &CogObjects) -> Result<bool, CogError> {
    let task = objects.task();
    let wrong = || CogError::WrongTask(task);
    Ok(match claim {
        Claim::Greater { subject } | Claim::Smaller { subject } => {
            let m = magnitudes(objects).ok_or_else(wrong)?;
            let i = resolve(objects, subject)?;
            if same_magnitude(m) {
                false
            } else if matches!(claim, Claim::Greater { .. }) {
                m[i] > m[1 - i]
            } else {
                m[i] < m[1 - i]
            }
        }
        Claim::Same => same_magnitude(magnitudes(objects).ok_or_else(wrong)?),
        Claim::SameCount { a, b } => {
            if task != CogTask::Quantity {
                return Err(wrong());
            }
            let (i, j) = (resolve(objects, a)?, resolve(objects, b)?);
            let m = magnitudes(objects).ok_or_else(wrong)?;
            i != j && m[i] == m[j]
        }
        Claim::SlopeOnly { color } => {
            let p = parallel_flags(objects).ok_or_else(wrong)?;
            let i = resolve(objects, &ObjRef::Color(*color))?;
            p[i] && !p[1 - i]
        }
        Claim::SlopeBoth => parallel_flags(objects).ok_or_else(wrong)?.iter().all(|&p| p),
        Claim::SlopeNeither => parallel_flags(objects).ok_or_else(wrong)?.iter().all(|&p| !p),
        Claim::Position { a, rel, b } => {
            let CogObjects::Position { shapes } = objects else { return Err(wrong()) };
            let (i, j) = (resolve(objects, a)?, resolve(objects, b)?);
            i != j && relative_position(&shapes[i], &shapes[j]).ok() == Some(*rel)
        }
        Claim::SamePosition => {
            let CogObjects::Position { shapes } = objects else { return Err(wrong()) };
            shapes[0].center == shapes[1].center
        }
        Claim::Intersects { yes, target } => {
            let CogObjects::Intersection { line, shape } = objects else { return Err(wrong()) };
            resolve(objects, target)?;
            intersects(line, shape) == *yes
        }
    })
}

/// How far the scene sits from making `claim` false, in units of the
/// generation margin and clamped to [-2, 2]. Positive for every claim the
/// generator can emit as true, negative for the ones it emits as false.
pub fn signed_margin(claim: &Claim, objects: &CogObjects) -> Result<f64, CogError> {
    let task = objects.task();
    let wrong = || CogError::WrongTask(task);
    let clamp = |x: f64| x.clamp(-2.0, 2.0);
    // relative difference of subject over the other, in tenths
    let contrast = |subject: &ObjRef| -> Result<f64, CogError> {
        let m = magnitudes(objects).ok_or_else(wrong)?;
        let i = resolve(objects, subject)?;
        Ok(clamp((m[i] - m[1 - i]) / m[0].abs().max(m[1].abs()) / 0.1))
    };
    let gaps = || -> Result<[f64; 2], CogError> {
        let CogObjects::Slope { reference, lines } = objects else { return Err(wrong()) };
        let r = orientation_deg(reference);
        Ok([0, 1].map(|i| (orientation_gap_deg(r, orientation_deg(&lines[i])) / 10.0).min(2.0)))
    };
    Ok(match claim {
        Claim::Greater { subject } => contrast(subject)? - 0.5,
        Claim::Smaller { subject } => -contrast(subject)? - 0.5,
        Claim::Same | Claim::SameCount { .. } => {
            let m = magnitudes(objects).ok_or_else(wrong)?;
            0.5 - clamp((m[0] - m[1]).abs() / m[0].abs().max(m[1].abs()) / 0.1)
        }
        Claim::SlopeOnly { color } => {
            let g = gaps()?;
            let i = resolve(objects, &ObjRef::Color(*color))?;
            g[1 - i].min(1.0) - g[i] - 0.5
        }
        Claim::SlopeBoth => 0.5 - gaps()?.iter().fold(0.0f64, |a, &b| a.max(b)),
        Claim::SlopeNeither => gaps()?.iter().fold(1.0f64, |a, &b| a.min(b)) - 0.5,
        Claim::Position { a, rel, b } => {
            let CogObjects::Position { shapes } = objects else { return Err(wrong()) };
            let (i, j) = (resolve(objects, a)?, resolve(objects, b)?);
            let d = shapes[i].center.sub(shapes[j].center);
            // screen y grows downward
            let u = match rel {
                RelPosition::LeftOf => Point2::new(-1.0, 0.0),
                RelPosition::RightOf => Point2::new(1.0, 0.0),
                RelPosition::Above => Point2::new(0.0, -1.0),
                RelPosition::Below => Point2::new(0.0, 1.0),
            };
            let n = d.norm();
            if n == 0.0 {
                -2.0
            } else {
                clamp(2.0 * d.dot(u) / n - 1.0)
            }
        }
        Claim::SamePosition => {
            let CogObjects::Position { shapes } = objects else { return Err(wrong()) };
            0.5 - clamp(shapes[0].center.dist(shapes[1].center) / 10.0)
        }
        Claim::Intersects { yes, target } => {
            let CogObjects::Intersection { line, shape } = objects else { return Err(wrong()) };
            resolve(objects, target)?;
            let s = if intersects(line, shape) {
                penetration_depth(line, shape, 512) / 5.0
            } else {
                -segment_shape_distance(line, shape) / 5.0
            };
            clamp(if *yes { s } else { -s })
        }
    })
}
