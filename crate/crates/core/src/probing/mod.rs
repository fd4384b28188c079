//! The four binary probing datasets, the single-object isolation sets and
//! an independent label oracle.

mod generate;
mod isolation;
mod tasks;
mod verify;

pub use generate::{
    build_split, generate_probing, plan_splits, split_labels, DatasetManifest, ManifestHeader, ProbingParams,
    SplitCounts, GENERATOR_VERSION,
};
pub use isolation::{
    generate_isolation_sets, isolation_instance, verify_isolation_file, IsolationHeader, IsolationKind,
    IsolationManifest, IsolationMeta, IsolationRecord, ANGLE_CLASSES, LINE_CLASSES,
};
pub use tasks::{generate_instance, generate_labeled_instance, length_margin_ok, InstanceMeta, ProbeMeta};
pub use verify::{recompute_label, verify_labels, verify_manifest_file, Disagreement, VerifyReport};

use serde::{Deserialize, Serialize};

use crate::jsonl::JsonlError;
use crate::placement::PlacementExhausted;
use crate::render::RenderError;

/// Fixed text of the irrelevant-query variant.
pub const IRRELEVANT_QUERY: &str = "My name is John?";

#[derive(Debug, thiserror::Error)]
pub enum ProbingError {
    #[error("n_total={n_total} is not divisible by 2 x ratio sum ({unit})")]
    Indivisible { n_total: usize, unit: usize },
    #[error("ratio must have a positive sum")]
    BadRatio,
    #[error(transparent)]
    Placement(#[from] PlacementExhausted),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Io(#[from] JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeTask {
    AngleComparison,
    PerpendicularDetection,
    LengthComparison,
    ChartProjection,
}

impl ProbeTask {
    pub const ALL: [ProbeTask; 4] = [
        ProbeTask::AngleComparison,
        ProbeTask::PerpendicularDetection,
        ProbeTask::LengthComparison,
        ProbeTask::ChartProjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProbeTask::AngleComparison => "angle_comparison",
            ProbeTask::PerpendicularDetection => "perpendicular_detection",
            ProbeTask::LengthComparison => "length_comparison",
            ProbeTask::ChartProjection => "chart_projection",
        }
    }

    pub fn from_name(s: &str) -> Option<ProbeTask> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Stream-path task id.
    pub fn stream_id(self) -> u32 {
        self as u32
    }

    /// Canonical yes/no question for the original query variant.
    pub fn query(self) -> &'static str {
        match self {
            ProbeTask::AngleComparison => "Do the two angles have the same size?",
            ProbeTask::PerpendicularDetection => "Are the two lines perpendicular to each other?",
            ProbeTask::LengthComparison => "Are the two lines the same length?",
            ProbeTask::ChartProjection => "Is the value of the red dot between 60 and 70?",
        }
    }
}

impl std::fmt::Display for ProbeTask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn stream_id(self) -> u32 {
        self as u32
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryType {
    #[default]
    Original,
    Empty,
    Irrelevant,
}

impl QueryType {
    pub fn text(self, task: ProbeTask) -> &'static str {
        match self {
            QueryType::Original => task.query(),
            QueryType::Empty => "",
            QueryType::Irrelevant => IRRELEVANT_QUERY,
        }
    }

    pub fn from_name(s: &str) -> Option<QueryType> {
        match s {
            "original" => Some(QueryType::Original),
            "empty" => Some(QueryType::Empty),
            "irrelevant" => Some(QueryType::Irrelevant),
            _ => None,
        }
    }
}

/// Margins that keep every label unambiguous at raster resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Margins {
    /// Minimum relative length difference `|a-b|/max(a,b)` for negatives.
    pub length_rel: f64,
    /// Minimum sweep difference in degrees for negative angle pairs.
    pub angle_deg: f64,
    /// Largest line angle in degrees for non-perpendicular pairs.
    pub perpendicular_max_deg: f64,
    /// Half-width of the excluded band around 60 and 70 in chart units.
    pub chart_band: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins { length_rel: 0.10, angle_deg: 10.0, perpendicular_max_deg: 85.0, chart_band: 1.0 }
    }
}

/// One probing example as stored in `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeInstance {
    pub id: String,
    pub task: ProbeTask,
    pub split: Split,
    /// Path of the PNG relative to the manifest directory.
    pub image: String,
    pub query: String,
    pub query_type: QueryType,
    pub label: u8,
    pub meta: InstanceMeta,
}
