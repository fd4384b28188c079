//! Oracle for preference pairs: the chosen statement must evaluate true and
//! the rejected one false against the stored objects.

use std::path::Path;

use super::paraphrase::binding_signature;
use super::scenes::CogObjects;
use super::templates::{evaluate, magnitudes, parallel_flags, parse_statement, same_magnitude};
use super::{CogError, Outcome, PreferencePair};
use crate::geometry::{
    orientation_deg, orientation_gap_deg, penetration_depth, relative_position, segment_shape_distance,
};
use crate::jsonl::read_jsonl;
use crate::probing::{Disagreement, VerifyReport};

const EPS: f64 = 1e-9;

/// The outcome class the objects realize, from geometry alone.
pub fn outcome_of(objects: &CogObjects) -> Result<Outcome, CogError> {
    if let Some(m) = magnitudes(objects) {
        return Ok(if same_magnitude(m) {
            Outcome::Same
        } else if m[0] > m[1] {
            Outcome::AGreater
        } else {
            Outcome::BGreater
        });
    }
    if let Some(p) = parallel_flags(objects) {
        return Ok(match p {
            [true, false] => Outcome::OnlyA,
            [false, true] => Outcome::OnlyB,
            [true, true] => Outcome::Both,
            [false, false] => Outcome::Neither,
        });
    }
    match objects {
        CogObjects::Position { shapes } => relative_position(&shapes[0], &shapes[1])
            .map(Outcome::from_rel)
            .map_err(|e| CogError::UnknownRef(e.to_string())),
        CogObjects::Intersection { line, shape } => {
            Ok(if crate::geometry::intersects(line, shape) { Outcome::Yes } else { Outcome::No })
        }
        _ => Err(CogError::WrongTask(objects.task())),
    }
}

/// Margin rule violations that would make the outcome fragile at raster
/// resolution.
fn audit(objects: &CogObjects) -> Option<String> {
    let rel_gap = |m: [f64; 2]| (m[0] - m[1]).abs() / m[0].max(m[1]);
    match objects {
        CogObjects::Angle { wedges } => {
            let m = [wedges[0].sweep_deg, wedges[1].sweep_deg];
            if let Some(w) = wedges.iter().find(|w| (w.measured_sweep() - w.sweep_deg).abs() > 1e-6) {
                return Some(format!("drawn arms measure {} not {}", w.measured_sweep(), w.sweep_deg));
            }
            (!same_magnitude(m) && (m[0] - m[1]).abs() < 10.0 - EPS).then(|| "sweep gap below 10 degrees".into())
        }
        CogObjects::Length { .. } | CogObjects::Distance { .. } => {
            let m = magnitudes(objects)?;
            (!same_magnitude(m) && rel_gap(m) < 0.1 - EPS).then(|| format!("relative gap {} below 10%", rel_gap(m)))
        }
        CogObjects::Volume { solids, .. } => {
            let m = magnitudes(objects)?;
            if solids[0].kind() == solids[1].kind() {
                return Some("both solids have the same kind".into());
            }
            (!same_magnitude(m) && m[0].max(m[1]) / m[0].min(m[1]) < 1.2 - EPS)
                .then(|| "volume ratio below 1.2".into())
        }
        CogObjects::Quantity { groups, .. } => {
            let m = magnitudes(objects)?;
            for (g, &n) in groups.iter().zip(&m) {
                if f64::from(g.count) != n {
                    return Some(format!("group lists {} shapes but scene holds {n}", g.count));
                }
                if !(2..=9).contains(&g.count) {
                    return Some(format!("count {} outside 2..=9", g.count));
                }
            }
            None
        }
        CogObjects::Position { shapes } => {
            let d = shapes[0].center.sub(shapes[1].center);
            let (major, minor) = (d.x.abs().max(d.y.abs()), d.x.abs().min(d.y.abs()));
            (minor > 0.5 * major).then(|| "relative position is close to diagonal".into())
        }
        CogObjects::Slope { reference, lines } => {
            let r = orientation_deg(reference);
            lines.iter().find_map(|l| {
                let gap = orientation_gap_deg(r, orientation_deg(l));
                (gap > 1e-6 && gap < 10.0 - EPS).then(|| format!("orientation gap {gap} below 10 degrees"))
            })
        }
        CogObjects::Intersection { line, shape } => {
            if crate::geometry::intersects(line, shape) {
                let depth = penetration_depth(line, shape, 512);
                (depth < 5.0 - EPS).then(|| format!("line reaches only {depth} inside the shape"))
            } else {
                let gap = segment_shape_distance(line, shape);
                (gap < 5.0 - EPS).then(|| format!("line passes only {gap} from the shape"))
            }
        }
    }
}

fn normalized(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn check_pair(pair: &PreferencePair) -> Result<(), String> {
    let objects = &pair.meta.objects;
    if objects.task() != pair.task {
        return Err(format!("meta describes {} objects", objects.task()));
    }
    if normalized(&pair.chosen) == normalized(&pair.rejected) {
        return Err("chosen equals rejected".into());
    }
    // paraphrased variants are judged through the statements they rewrite
    let (chosen, rejected) = match &pair.provenance.base {
        Some(base) => {
            for (v, b) in [(&pair.chosen, &base.chosen), (&pair.rejected, &base.rejected)] {
                if binding_signature(v) != binding_signature(b) {
                    return Err(format!("variant {v:?} changes the bindings of {b:?}"));
                }
            }
            (base.chosen.as_str(), base.rejected.as_str())
        }
        None => (pair.chosen.as_str(), pair.rejected.as_str()),
    };
    let truth = |text: &str| -> Result<bool, String> {
        let (claim, _) = parse_statement(pair.task, text).map_err(|e| e.to_string())?;
        evaluate(&claim, objects).map_err(|e| e.to_string())
    };
    if !truth(chosen)? {
        return Err(format!("chosen {chosen:?} is false"));
    }
    if truth(rejected)? {
        return Err(format!("rejected {rejected:?} is true"));
    }
    let outcome = outcome_of(objects).map_err(|e| e.to_string())?;
    if outcome != pair.meta.outcome {
        return Err(format!("stored outcome {} but objects give {outcome}", pair.meta.outcome));
    }
    audit(objects).map_or(Ok(()), Err)
}

pub fn verify_pairs(pairs: &[PreferencePair]) -> VerifyReport {
    let mut report = VerifyReport::default();
    for p in pairs {
        match check_pair(p) {
            Ok(()) => report.agree += 1,
            Err(reason) => report.disagree.push(Disagreement { id: p.id.clone(), reason }),
        }
    }
    report
}

pub fn verify_pairs_file(path: &Path) -> Result<VerifyReport, CogError> {
    let pairs: Vec<PreferencePair> = read_jsonl(path)?;
    Ok(verify_pairs(&pairs))
}
