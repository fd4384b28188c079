//! Deterministic synthetic-data engine and evaluation harness for visual
//! arithmetic: probing datasets, preference-pair synthesis, a reference
//! DPO objective and a linear-probe workflow.

pub mod geometry;
pub mod render;
pub mod scene;
pub mod jsonl;
pub mod placement;
pub mod probing;
pub mod cogalign;
pub mod dpo;
pub mod probe;
pub mod stats;
