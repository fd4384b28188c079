use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paraphrase::{paraphrase_expand, ParaphraseClient, ParaphraseSettings};
use super::realize::realize_templates;
use super::scenes::generate_scene;
use super::{CogError, CogMeta, CogTask, Outcome, PreferencePair, Provenance};
use crate::geometry::{derive_stream, StreamPath};
use crate::jsonl::{create_dir, write_json, write_jsonl, JsonlError};
use crate::render::{render_png, CanvasSpec};
use crate::scene::Scene;

pub const GENERATOR_VERSION: &str = concat!("visarith-cogalign/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CogalignParams {
    pub n_total: usize,
    pub seed: u64,
    pub canvas: CanvasSpec,
    /// `None` leaves every pair unexpanded.
    pub paraphrase: Option<ParaphraseSettings>,
}

impl CogalignParams {
    pub fn new(seed: u64) -> Self {
        CogalignParams { n_total: 64_000, seed, canvas: CanvasSpec::default(), paraphrase: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CogalignHeader {
    pub seed: u64,
    /// Base pairs, before paraphrase expansion.
    pub n_base: usize,
    pub n_emitted: usize,
    pub per_task: BTreeMap<CogTask, usize>,
    pub generator_version: String,
    pub canvas: CanvasSpec,
    pub paraphrase: Option<ParaphraseSettings>,
    /// Pairs emitted unexpanded because the client failed with fallback off.
    pub unexpanded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceManifest {
    pub header: CogalignHeader,
    pub pairs: Vec<PreferencePair>,
}

/// Outcome classes for the `n` pairs of one task: as even as possible, in a
/// stream-decided order.
fn task_outcomes(seed: u64, task: CogTask, n: usize) -> Vec<Outcome> {
    let classes = task.outcomes();
    let mut v: Vec<Outcome> = (0..n).map(|i| classes[i % classes.len()]).collect();
    let mut st = derive_stream(seed, StreamPath::new(task.stream_id(), 0, u64::MAX));
    st.shuffle(&mut v);
    v
}

/// One base pair and its scene, fully determined by `(seed, task, index)`.
pub fn build_pair(
    task: CogTask,
    index: usize,
    outcome: Outcome,
    seed: u64,
    canvas: &CanvasSpec,
) -> Result<(PreferencePair, Scene), CogError> {
    let mut st = derive_stream(seed, StreamPath::new(task.stream_id(), 0, index as u64));
    let (objects, resamples) = generate_scene(task, outcome, &mut st, canvas)?;
    let scene = objects.scene();
    let meta = CogMeta { outcome, objects, resamples };
    let r = realize_templates(task, &meta, &mut st)?;
    let pair = PreferencePair {
        id: format!("{}-{index:06}", task.name()),
        task,
        image: format!("{}/{index:06}.png", task.name()),
        prompt: r.prompt,
        chosen: r.chosen,
        rejected: r.rejected,
        meta,
        provenance: Provenance {
            origin: "template".into(),
            chosen_template: format!("{}/{}", task.name(), r.chosen_row),
            rejected_template: format!("{}/{}", task.name(), r.rejected_row),
            strategy: r.strategy,
            prompt_index: r.prompt_index,
            variant: None,
            base: None,
        },
    };
    Ok((pair, scene))
}

/// Client for the configured endpoint, or the fallback-only stand-in.
pub fn client_for(settings: &ParaphraseSettings) -> Box<dyn ParaphraseClient> {
    match &settings.url {
        Some(url) => Box::new(super::HttpParaphraseClient::new(url, Duration::from_millis(settings.timeout_ms))),
        None => Box::new(super::FallbackOnly),
    }
}

/// Generate all eight tasks under `<out>/cogalign/`: images in one directory
/// per task, then `manifest.jsonl` and `manifest.header.json`.
pub fn generate_preference_dataset(
    params: &CogalignParams,
    out: &Path,
    client: &dyn ParaphraseClient,
) -> Result<PreferenceManifest, CogError> {
    params.canvas.validate()?;
    let n_tasks = CogTask::ALL.len();
    if params.n_total == 0 || params.n_total % n_tasks != 0 {
        return Err(CogError::Indivisible(params.n_total));
    }
    let per_task = params.n_total / n_tasks;
    let root = out.join("cogalign");
    let mut base = Vec::with_capacity(params.n_total);
    for task in CogTask::ALL {
        let dir = root.join(task.name());
        create_dir(&dir)?;
        let outcomes = task_outcomes(params.seed, task, per_task);
        let batch: Vec<PreferencePair> = outcomes
            .par_iter()
            .enumerate()
            .map(|(i, &o)| {
                let (pair, scene) = build_pair(task, i, o, params.seed, &params.canvas)?;
                let png = render_png(&scene, &params.canvas)?;
                let path: PathBuf = root.join(&pair.image);
                std::fs::write(&path, png).map_err(|e| JsonlError::io(&path, e))?;
                Ok(pair)
            })
            .collect::<Result<_, CogError>>()?;
        let resampled = batch.iter().filter(|p| p.meta.resamples > 0).count();
        log::info!("cogalign {task}: {} pairs written, {resampled} needed resampling", batch.len());
        base.extend(batch);
    }

    let mut unexpanded = Vec::new();
    let pairs = match &params.paraphrase {
        Some(settings) if settings.k > 0 => {
            // bounded in-flight requests; collect keeps index order
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(settings.max_inflight.max(1))
                .build()
                .expect("paraphrase thread pool");
            let expanded: Vec<_> =
                pool.install(|| base.par_iter().map(|p| paraphrase_expand(p, client, settings)).collect());
            let mut pairs = Vec::with_capacity(base.len() * (settings.k as usize + 1));
            for (group, err) in expanded {
                if let Some(e) = err {
                    log::warn!("{e}");
                    unexpanded.push(group[0].id.clone());
                }
                pairs.extend(group);
            }
            pairs
        }
        _ => base,
    };

    let header = CogalignHeader {
        seed: params.seed,
        n_base: params.n_total,
        n_emitted: pairs.len(),
        per_task: CogTask::ALL.iter().map(|&t| (t, per_task)).collect(),
        generator_version: GENERATOR_VERSION.to_string(),
        canvas: params.canvas.clone(),
        paraphrase: params.paraphrase.clone(),
        unexpanded,
    };
    write_jsonl(&root.join("manifest.jsonl"), &pairs)?;
    write_json(&root.join("manifest.header.json"), &header)?;
    Ok(PreferenceManifest { header, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcomes_are_balanced() {
        let v = task_outcomes(3, CogTask::Angle, 8000);
        for o in CogTask::Angle.outcomes() {
            let n = v.iter().filter(|&&x| x == *o).count();
            assert!((2666..=2667).contains(&n), "{o}: {n}");
        }
        assert_eq!(v, task_outcomes(3, CogTask::Angle, 8000));
    }

    #[test]
    fn indivisible_total_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = CogalignParams { n_total: 12, ..CogalignParams::new(1) };
        assert!(matches!(
            generate_preference_dataset(&p, dir.path(), &crate::cogalign::FallbackOnly),
            Err(CogError::Indivisible(12))
        ));
    }
}
