//! Label oracle: recomputes every label from the stored objects using only
//! geometry measures, never generator state.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ManifestHeader, Margins, ProbeInstance, ProbeMeta, ProbingError};
use crate::geometry::{interpolate, measure_angle_between, measure_length};
use crate::jsonl::{read_json, read_jsonl};

const SWEEP_EPS: f64 = 1e-9;
const RIGHT_ANGLE_EPS: f64 = 1e-6;
const LENGTH_REL_EPS: f64 = 1e-9;
const DERIVED_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub agree: usize,
    pub disagree: Vec<Disagreement>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.disagree.is_empty()
    }

    pub fn merge(&mut self, other: VerifyReport) {
        self.agree += other.agree;
        self.disagree.extend(other.disagree);
    }
}

fn sweeps(meta: &ProbeMeta) -> Option<[f64; 2]> {
    match meta {
        ProbeMeta::Angle { wedges } => Some([wedges[0].sweep_deg, wedges[1].sweep_deg]),
        _ => None,
    }
}

/// The label implied by the objects alone.
pub fn recompute_label(meta: &ProbeMeta) -> u8 {
    let yes = match meta {
        ProbeMeta::Angle { .. } => {
            let [a, b] = sweeps(meta).unwrap_or_default();
            (a - b).abs() <= SWEEP_EPS
        }
        ProbeMeta::Perpendicular { segments, .. } => {
            (measure_angle_between(&segments[0], &segments[1]) - 90.0).abs() <= RIGHT_ANGLE_EPS
        }
        ProbeMeta::Length { segments, .. } => {
            let (a, b) = (measure_length(&segments[0]), measure_length(&segments[1]));
            (a - b).abs() <= LENGTH_REL_EPS * a.max(b)
        }
        ProbeMeta::Chart { chart } => match interpolate(&chart.xs, &chart.ys, chart.dot_x) {
            Some(y) => (60.0..=70.0).contains(&y),
            None => false,
        },
    };
    u8::from(yes)
}

/// Why an instance breaks its margin rule or carries a stale derived value.
fn audit(meta: &ProbeMeta, label: u8, m: &Margins) -> Option<String> {
    match meta {
        ProbeMeta::Angle { wedges } => {
            for w in wedges {
                if (w.measured_sweep() - w.sweep_deg).abs() > 1e-6 {
                    return Some(format!("drawn arms measure {} not {}", w.measured_sweep(), w.sweep_deg));
                }
            }
            let d = (wedges[0].sweep_deg - wedges[1].sweep_deg).abs();
            (label == 0 && d < m.angle_deg).then(|| format!("sweep gap {d} below margin"))
        }
        ProbeMeta::Perpendicular { segments, angle_deg } => {
            let a = measure_angle_between(&segments[0], &segments[1]);
            if (a - angle_deg).abs() > DERIVED_EPS {
                return Some(format!("stored angle {angle_deg} but measured {a}"));
            }
            (label == 0 && a > m.perpendicular_max_deg + DERIVED_EPS).then(|| format!("angle {a} inside excluded band"))
        }
        ProbeMeta::Length { segments, lengths } => {
            let (a, b) = (measure_length(&segments[0]), measure_length(&segments[1]));
            if (a - lengths[0]).abs() > DERIVED_EPS * a || (b - lengths[1]).abs() > DERIVED_EPS * b {
                return Some("stored lengths disagree with segments".into());
            }
            let rel = (a - b).abs() / a.max(b);
            (label == 0 && rel < m.length_rel - DERIVED_EPS).then(|| format!("length gap {rel} below margin"))
        }
        ProbeMeta::Chart { chart } => {
            let Some(y) = interpolate(&chart.xs, &chart.ys, chart.dot_x) else {
                return Some("dot outside chart domain".into());
            };
            if (y - chart.dot_y).abs() > DERIVED_EPS {
                return Some(format!("dot drawn at {} but line passes {y}", chart.dot_y));
            }
            let b = m.chart_band;
            let in_band = (60.0 - b < y && y < 60.0 + b) || (70.0 - b < y && y < 70.0 + b);
            in_band.then(|| format!("dot value {y} inside excluded boundary band"))
        }
    }
}

/// Check every instance; an instance disagrees if its stored label differs
/// from the recomputed one, or if it breaks a margin rule.
pub fn verify_labels(instances: &[ProbeInstance], margins: &Margins) -> VerifyReport {
    let mut report = VerifyReport::default();
    for inst in instances {
        let meta = &inst.meta.objects;
        let recomputed = recompute_label(meta);
        let reason = if meta.task() != inst.task {
            Some(format!("meta describes {} objects", meta.task()))
        } else if recomputed != inst.label {
            Some(format!("stored label {} but objects give {recomputed}", inst.label))
        } else {
            audit(meta, inst.label, margins)
        };
        match reason {
            None => report.agree += 1,
            Some(reason) => report.disagree.push(Disagreement { id: inst.id.clone(), reason }),
        }
    }
    report
}

/// Verify a `manifest.jsonl`, taking margins from the sibling header when
/// present.
pub fn verify_manifest_file(path: &Path) -> Result<VerifyReport, ProbingError> {
    let header_path = path.with_file_name("manifest.header.json");
    let margins = if header_path.exists() {
        read_json::<ManifestHeader>(&header_path)?.margins
    } else {
        Margins::default()
    };
    let instances: Vec<ProbeInstance> = read_jsonl(path)?;
    Ok(verify_labels(&instances, &margins))
}
