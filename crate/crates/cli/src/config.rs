//! Run configuration: a TOML file, overridden by flags, serialized next to
//! every artifact as `run.json`.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use visarith_core::cogalign::ParaphraseSettings;
use visarith_core::dpo::DpoConfig;
use visarith_core::probe::ProbeParams;
use visarith_core::probing::{Margins, QueryType};
use visarith_core::render::CanvasSpec;

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbingSection {
    pub total: usize,
    pub ratio: [u32; 3],
    pub query_type: QueryType,
    pub margins: Margins,
}

impl Default for ProbingSection {
    fn default() -> Self {
        ProbingSection { total: 12_000, ratio: [10, 1, 1], query_type: QueryType::Original, margins: Margins::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CogalignSection {
    pub total: usize,
    /// Expand every pair with `[paraphrase]` settings.
    pub paraphrase: bool,
}

impl Default for CogalignSection {
    fn default() -> Self {
        CogalignSection { total: 64_000, paraphrase: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsolationSection {
    pub per_class: usize,
}

impl Default for IsolationSection {
    fn default() -> Self {
        IsolationSection { per_class: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub canvas: CanvasSpec,
    pub probing: ProbingSection,
    pub cogalign: CogalignSection,
    pub isolation: IsolationSection,
    pub paraphrase: ParaphraseSettings,
    pub probe: ProbeParams,
    pub dpo: DpoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            output_dir: PathBuf::from("out"),
            canvas: CanvasSpec::default(),
            probing: ProbingSection::default(),
            cogalign: CogalignSection::default(),
            isolation: IsolationSection::default(),
            paraphrase: ParaphraseSettings::default(),
            probe: ProbeParams::default(),
            dpo: DpoConfig::default(),
        }
    }
}

/// What `run.json` holds: the command that produced a directory and the
/// merged configuration it ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub command: Vec<String>,
    pub tool_version: String,
    pub config: RunConfig,
}

impl RunConfig {
    /// Load a TOML config, or the config inside a `run.json`.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str::<RunRecord>(&text).map(|r| r.config).map_err(|e| e.to_string())
        } else {
            toml::from_str::<RunConfig>(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.canvas.validate().map_err(|e| UsageError(e.to_string()))?;
        self.dpo.validate().map_err(|e| UsageError(e.to_string()))?;
        if self.paraphrase.max_inflight == 0 {
            return Err(UsageError("paraphrase.max_inflight must be at least 1".into()).into());
        }
        Ok(())
    }

    pub fn write_run_json(&self, dir: &Path, command: &[&str]) -> anyhow::Result<()> {
        let record = RunRecord {
            command: command.iter().map(|s| s.to_string()).collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.clone(),
        };
        let path = dir.join("run.json");
        let text = serde_json::to_string_pretty(&record)? + "\n";
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert!(toml::from_str::<RunConfig>("seed = 3").is_err());
        assert!(toml::from_str::<RunConfig>("[canvas]\nwidht = 3").is_err());
        let partial: RunConfig = toml::from_str("master_seed = 9\n[probing]\ntotal = 24").unwrap();
        assert_eq!((partial.master_seed, partial.probing.total, partial.probing.ratio), (9, 24, [10, 1, 1]));
    }
}
