//! Preference-pair synthesis over eight visual-arithmetic tasks: scenes,
//! template-realized chosen/rejected responses and paraphrase expansion.

mod generate;
mod paraphrase;
mod realize;
mod scenes;
mod templates;
mod verify;

pub use generate::{
    build_pair, client_for, generate_preference_dataset, CogalignHeader, CogalignParams, PreferenceManifest, GENERATOR_VERSION,
};
pub use paraphrase::{
    binding_signature, fallback_variants, paraphrase_expand, FallbackOnly, HttpParaphraseClient, ParaphraseClient,
    ParaphraseError, ParaphraseSettings, TOKEN_ENV,
};
pub use realize::{realize_templates, Realized, Strategy};
pub use scenes::{generate_scene, CogObjects, QuantityGroup};
pub use templates::{evaluate, parse_statement, render_claim, signed_margin, Claim, ObjRef, ResponseTemplate, PROMPTS, TEMPLATES};
pub use verify::{outcome_of, verify_pairs, verify_pairs_file};

use serde::{Deserialize, Serialize};

use crate::geometry::RelPosition;
use crate::jsonl::JsonlError;
use crate::placement::PlacementExhausted;
use crate::render::RenderError;

#[derive(Debug, thiserror::Error)]
pub enum CogError {
    #[error("n_total={0} is not divisible by 8")]
    Indivisible(usize),
    #[error("no true template for {task} outcome {outcome} (generator bug)")]
    NoTrueTemplate { task: CogTask, outcome: String },
    #[error("statement does not match any {task} template: {text:?}")]
    Unparsed { task: CogTask, text: String },
    #[error("statement names an object not in the scene: {0}")]
    UnknownRef(String),
    #[error("claim kind does not fit task {0}")]
    WrongTask(CogTask),
    #[error(transparent)]
    Paraphrase(#[from] ParaphraseError),
    #[error(transparent)]
    Placement(#[from] PlacementExhausted),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Io(#[from] JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CogTask {
    Angle,
    Length,
    Distance,
    Quantity,
    Volume,
    Position,
    Slope,
    Intersection,
}

impl CogTask {
    pub const ALL: [CogTask; 8] = [
        CogTask::Angle,
        CogTask::Length,
        CogTask::Distance,
        CogTask::Quantity,
        CogTask::Volume,
        CogTask::Position,
        CogTask::Slope,
        CogTask::Intersection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CogTask::Angle => "angle",
            CogTask::Length => "length",
            CogTask::Distance => "distance",
            CogTask::Quantity => "quantity",
            CogTask::Volume => "volume",
            CogTask::Position => "position",
            CogTask::Slope => "slope",
            CogTask::Intersection => "intersection",
        }
    }

    pub fn from_name(s: &str) -> Option<CogTask> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn stream_id(self) -> u32 {
        10 + self as u32
    }

    /// The outcome classes generation cycles through uniformly.
    pub fn outcomes(self) -> &'static [Outcome] {
        use Outcome::*;
        match self {
            CogTask::Angle | CogTask::Length | CogTask::Distance | CogTask::Quantity | CogTask::Volume => {
                &[AGreater, BGreater, Same]
            }
            CogTask::Position => &[LeftOf, RightOf, Above, Below],
            CogTask::Slope => &[OnlyA, OnlyB, Both, Neither],
            CogTask::Intersection => &[Yes, No],
        }
    }
}

impl std::fmt::Display for CogTask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ground-truth relation class of a scene. For comparisons A is object 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AGreater,
    BGreater,
    Same,
    LeftOf,
    RightOf,
    Above,
    Below,
    OnlyA,
    OnlyB,
    Both,
    Neither,
    Yes,
    No,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::AGreater => "a_greater",
            Outcome::BGreater => "b_greater",
            Outcome::Same => "same",
            Outcome::LeftOf => "left_of",
            Outcome::RightOf => "right_of",
            Outcome::Above => "above",
            Outcome::Below => "below",
            Outcome::OnlyA => "only_a",
            Outcome::OnlyB => "only_b",
            Outcome::Both => "both",
            Outcome::Neither => "neither",
            Outcome::Yes => "yes",
            Outcome::No => "no",
        }
    }

    pub fn from_rel(r: RelPosition) -> Outcome {
        match r {
            RelPosition::LeftOf => Outcome::LeftOf,
            RelPosition::RightOf => Outcome::RightOf,
            RelPosition::Above => Outcome::Above,
            RelPosition::Below => Outcome::Below,
        }
    }

    pub fn rel(self) -> Option<RelPosition> {
        match self {
            Outcome::LeftOf => Some(RelPosition::LeftOf),
            Outcome::RightOf => Some(RelPosition::RightOf),
            Outcome::Above => Some(RelPosition::Above),
            Outcome::Below => Some(RelPosition::Below),
            _ => None,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact scene objects plus the outcome class they were built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CogMeta {
    pub outcome: Outcome,
    pub objects: CogObjects,
    pub resamples: u32,
}

/// The statements a variant was derived from, kept so the oracle can still
/// evaluate paraphrased text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseText {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// `template`, `paraphrase:client` or `paraphrase:fallback`.
    pub origin: String,
    /// Template ids as `<task>/<row>`.
    pub chosen_template: String,
    pub rejected_template: String,
    pub strategy: Strategy,
    pub prompt_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseText>,
}

/// One (query, image, chosen, rejected) record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub task: CogTask,
    /// Path of the PNG relative to the manifest directory.
    pub image: String,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub meta: CogMeta,
    pub provenance: Provenance,
}
