//! Histograms of manifest meta values, written as JSON and as SVG bar
//! plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cogalign::PreferencePair;
use crate::geometry::measure_angle_between;
use crate::jsonl::{read_jsonl, JsonlError};
use crate::probing::{IsolationRecord, ProbeInstance, ProbeMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `<task>/<quantity>`.
    pub name: String,
    pub bins: Vec<Bin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    pub count: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Counts per category, sorted by label.
fn categorical(name: String, values: impl IntoIterator<Item = String>) -> Histogram {
    let mut m: BTreeMap<String, usize> = BTreeMap::new();
    for v in values {
        *m.entry(v).or_default() += 1;
    }
    Histogram { name, bins: m.into_iter().map(|(label, count)| Bin { label, count }).collect() }
}

/// Fixed-width bins over `[lo, hi)`; the top value falls into the last bin.
fn numeric(name: String, values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, n: usize) -> Histogram {
    let w = (hi - lo) / n as f64;
    let mut counts = vec![0usize; n];
    for v in values {
        let i = (((v - lo) / w).floor().max(0.0) as usize).min(n - 1);
        counts[i] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| Bin { label: format!("{}", lo + w * i as f64), count })
        .collect();
    Histogram { name, bins }
}

/// Which kind of manifest a JSONL file holds, judged by its first record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestKind {
    Probing,
    Cogalign,
    Isolation,
}

pub fn detect_kind(path: &Path) -> Result<Option<ManifestKind>, JsonlError> {
    let text = std::fs::read_to_string(path).map_err(|e| JsonlError::io(path, e))?;
    let Some(first) = text.lines().find(|l| !l.trim().is_empty()) else { return Ok(None) };
    let v: serde_json::Value =
        serde_json::from_str(first).map_err(|e| JsonlError::Parse { path: path.into(), line: 1, source: e })?;
    Ok(if v.get("chosen").is_some() {
        Some(ManifestKind::Cogalign)
    } else if v.get("class").is_some() {
        Some(ManifestKind::Isolation)
    } else if v.get("label").is_some() {
        Some(ManifestKind::Probing)
    } else {
        None
    })
}

pub fn probing_histograms(instances: &[ProbeInstance]) -> Vec<Histogram> {
    let mut by_task: BTreeMap<String, Vec<&ProbeInstance>> = BTreeMap::new();
    for i in instances {
        by_task.entry(i.task.name().to_string()).or_default().push(i);
    }
    let mut out = Vec::new();
    for (task, insts) in by_task {
        out.push(categorical(format!("{task}/label"), insts.iter().map(|i| format!("{}:{}", i.split.name(), i.label))));
        let (quantity, values, lo, hi): (&str, Vec<f64>, f64, f64) = match &insts[0].meta.objects {
            ProbeMeta::Angle { .. } => (
                "sweep_gap_deg",
                insts
                    .iter()
                    .filter_map(|i| match &i.meta.objects {
                        ProbeMeta::Angle { wedges } => Some((wedges[0].sweep_deg - wedges[1].sweep_deg).abs()),
                        _ => None,
                    })
                    .collect(),
                0.0,
                150.0,
            ),
            ProbeMeta::Perpendicular { .. } => (
                "angle_deg",
                insts
                    .iter()
                    .filter_map(|i| match &i.meta.objects {
                        ProbeMeta::Perpendicular { segments, .. } => {
                            Some(measure_angle_between(&segments[0], &segments[1]))
                        }
                        _ => None,
                    })
                    .collect(),
                0.0,
                90.0,
            ),
            ProbeMeta::Length { .. } => (
                "relative_gap",
                insts
                    .iter()
                    .filter_map(|i| match &i.meta.objects {
                        ProbeMeta::Length { lengths, .. } => {
                            Some((lengths[0] - lengths[1]).abs() / lengths[0].max(lengths[1]))
                        }
                        _ => None,
                    })
                    .collect(),
                0.0,
                1.0,
            ),
            ProbeMeta::Chart { .. } => (
                "dot_value",
                insts
                    .iter()
                    .filter_map(|i| match &i.meta.objects {
                        ProbeMeta::Chart { chart } => Some(chart.dot_y),
                        _ => None,
                    })
                    .collect(),
                0.0,
                100.0,
            ),
        };
        out.push(numeric(format!("{task}/{quantity}"), values, lo, hi, 10));
    }
    out
}

pub fn cogalign_histograms(pairs: &[PreferencePair]) -> Vec<Histogram> {
    let mut by_task: BTreeMap<String, Vec<&PreferencePair>> = BTreeMap::new();
    for p in pairs {
        by_task.entry(p.task.name().to_string()).or_default().push(p);
    }
    let mut out = Vec::new();
    for (task, ps) in by_task {
        out.push(categorical(format!("{task}/outcome"), ps.iter().map(|p| p.meta.outcome.name().to_string())));
        out.push(categorical(
            format!("{task}/template"),
            ps.iter().flat_map(|p| {
                [format!("chosen:{}", p.provenance.chosen_template), format!("rejected:{}", p.provenance.rejected_template)]
            }),
        ));
        out.push(categorical(
            format!("{task}/strategy"),
            ps.iter().map(|p| serde_json::to_value(p.provenance.strategy).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()),
        ));
    }
    out
}

pub fn isolation_histograms(records: &[IsolationRecord]) -> Vec<Histogram> {
    let mut by_task: BTreeMap<String, Vec<&IsolationRecord>> = BTreeMap::new();
    for r in records {
        by_task.entry(r.task.clone()).or_default().push(r);
    }
    by_task
        .into_iter()
        .map(|(task, rs)| categorical(format!("{task}/class"), rs.iter().map(|r| format!("{:05.1}", r.class))))
        .collect()
}

/// Histograms for any manifest kind; `None` if the file is empty or of an
/// unknown kind.
pub fn manifest_histograms(path: &Path) -> Result<Option<Vec<Histogram>>, JsonlError> {
    Ok(match detect_kind(path)? {
        Some(ManifestKind::Probing) => Some(probing_histograms(&read_jsonl(path)?)),
        Some(ManifestKind::Cogalign) => Some(cogalign_histograms(&read_jsonl(path)?)),
        Some(ManifestKind::Isolation) => Some(isolation_histograms(&read_jsonl(path)?)),
        None => None,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// A plain vertical bar plot.
pub fn histogram_svg(h: &Histogram) -> String {
    let bar_w = 36.0;
    let (left, top, plot_h) = (40.0, 30.0, 200.0);
    let width = left + bar_w * h.bins.len().max(1) as f64 + 20.0;
    let height = top + plot_h + 90.0;
    let max = h.bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="18" font-family="sans-serif" font-size="13">{}</text>"#,
        escape(&h.name)
    );
    let base = top + plot_h;
    let _ = writeln!(s, r#"<line x1="{left}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, width - 20.0);
    for (i, b) in h.bins.iter().enumerate() {
        let bh = plot_h * b.count as f64 / max;
        let x = left + bar_w * i as f64 + 3.0;
        let _ = writeln!(
            s,
            r##"<rect x="{x}" y="{}" width="{}" height="{bh}" fill="#4878a8"/>"##,
            base - bh,
            bar_w - 6.0
        );
        let cx = x + (bar_w - 6.0) / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-family="sans-serif" font-size="9" text-anchor="middle">{}</text>"#,
            base - bh - 3.0,
            b.count
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-family="sans-serif" font-size="9" text-anchor="end" transform="rotate(-60 {cx} {})">{}</text>"#,
            base + 12.0,
            base + 12.0,
            escape(&b.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// File stem for a histogram name.
pub fn file_stem(name: &str) -> String {
    name.replace('/', "__")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_bins_clamp_the_top_value() {
        let h = numeric("t/x".into(), [0.0, 9.9, 10.0, 100.0], 0.0, 100.0, 10);
        assert_eq!(h.bins[0].count, 2);
        assert_eq!(h.bins[1].count, 1);
        assert_eq!(h.bins[9].count, 1);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn svg_has_one_bar_per_bin() {
        let h = categorical("a/b".into(), ["x", "y", "y"].map(String::from));
        let svg = histogram_svg(&h);
        assert_eq!(svg.matches("fill=\"#4878a8\"").count(), 2);
        assert!(roxmltree::Document::parse(&svg).is_ok());
    }
}
