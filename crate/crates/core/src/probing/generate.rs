use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    generate_labeled_instance, InstanceMeta, Margins, ProbeInstance, ProbeTask, ProbingError, QueryType, Split,
};
use crate::geometry::{derive_stream, StreamPath};
use crate::jsonl::{create_dir, write_json, write_jsonl, JsonlError};
use crate::render::{render_png, CanvasSpec};
use crate::scene::Scene;

pub const GENERATOR_VERSION: &str = concat!("visarith-probing/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingParams {
    pub task: ProbeTask,
    pub n_total: usize,
    pub ratio: [u32; 3],
    pub seed: u64,
    pub query_type: QueryType,
    pub canvas: CanvasSpec,
    pub margins: Margins,
}

impl ProbingParams {
    pub fn new(task: ProbeTask, seed: u64) -> Self {
        ProbingParams {
            task,
            n_total: 12_000,
            ratio: [10, 1, 1],
            seed,
            query_type: QueryType::Original,
            canvas: CanvasSpec::default(),
            margins: Margins::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub task: ProbeTask,
    pub seed: u64,
    pub counts: SplitCounts,
    pub generator_version: String,
    pub query_type: QueryType,
    pub canvas: CanvasSpec,
    pub margins: Margins,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub instances: Vec<ProbeInstance>,
}

/// Split sizes for `n_total` under `ratio`; each split must hold an even
/// number of instances so labels balance exactly.
pub fn plan_splits(n_total: usize, ratio: [u32; 3]) -> Result<SplitCounts, ProbingError> {
    let sum: usize = ratio.iter().map(|&r| r as usize).sum();
    if sum == 0 {
        return Err(ProbingError::BadRatio);
    }
    let unit = 2 * sum;
    if n_total % unit != 0 {
        return Err(ProbingError::Indivisible { n_total, unit });
    }
    let per = n_total / sum;
    Ok(SplitCounts { train: per * ratio[0] as usize, dev: per * ratio[1] as usize, test: per * ratio[2] as usize })
}

/// Exactly half ones and half zeros, permuted by the split's own stream.
pub fn split_labels(seed: u64, task: ProbeTask, split: Split, n: usize) -> Vec<u8> {
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
    let mut st = derive_stream(seed, StreamPath::new(task.stream_id(), split.stream_id(), u64::MAX));
    st.shuffle(&mut labels);
    labels
}

fn instance(
    params: &ProbingParams,
    split: Split,
    index: usize,
    label: u8,
) -> Result<(ProbeInstance, Scene), ProbingError> {
    let task = params.task;
    let mut st = derive_stream(params.seed, StreamPath::new(task.stream_id(), split.stream_id(), index as u64));
    let (scene, meta): (Scene, InstanceMeta) =
        generate_labeled_instance(task, label, &mut st, &params.margins, &params.canvas)?;
    let inst = ProbeInstance {
        id: format!("{}-{}-{index:06}", task.name(), split.name()),
        task,
        split,
        image: format!("{}/{index:06}.png", split.name()),
        query: params.query_type.text(task).to_string(),
        query_type: params.query_type,
        label,
        meta,
    };
    Ok((inst, scene))
}

/// All instances of one split with their scenes, in index order, without
/// touching the file system.
pub fn build_split(params: &ProbingParams, split: Split) -> Result<Vec<(ProbeInstance, Scene)>, ProbingError> {
    let counts = plan_splits(params.n_total, params.ratio)?;
    let labels = split_labels(params.seed, params.task, split, counts.get(split));
    labels.par_iter().enumerate().map(|(i, &l)| instance(params, split, i, l)).collect()
}

/// Generate one task: images under `<out>/<task>/<split>/`, plus
/// `manifest.jsonl` and `manifest.header.json` in `<out>/<task>/`.
pub fn generate_probing(params: &ProbingParams, out: &Path) -> Result<DatasetManifest, ProbingError> {
    params.canvas.validate()?;
    let counts = plan_splits(params.n_total, params.ratio)?;
    let task_dir = out.join(params.task.name());
    let mut instances = Vec::with_capacity(params.n_total);
    for split in Split::ALL {
        let dir = task_dir.join(split.name());
        create_dir(&dir)?;
        let labels = split_labels(params.seed, params.task, split, counts.get(split));
        let batch: Vec<ProbeInstance> = labels
            .par_iter()
            .enumerate()
            .map(|(i, &l)| {
                let (inst, scene) = instance(params, split, i, l)?;
                let png = render_png(&scene, &params.canvas)?;
                let path: PathBuf = task_dir.join(&inst.image);
                std::fs::write(&path, png).map_err(|e| JsonlError::io(&path, e))?;
                Ok(inst)
            })
            .collect::<Result<_, ProbingError>>()?;
        let resampled = batch.iter().filter(|i| i.meta.resamples > 0).count();
        log::info!(
            "{} {}: {} instances written, {resampled} needed resampling",
            params.task,
            split.name(),
            batch.len()
        );
        instances.extend(batch);
    }
    let header = ManifestHeader {
        task: params.task,
        seed: params.seed,
        counts,
        generator_version: GENERATOR_VERSION.to_string(),
        query_type: params.query_type,
        canvas: params.canvas.clone(),
        margins: params.margins,
    };
    write_jsonl(&task_dir.join("manifest.jsonl"), &instances)?;
    write_json(&task_dir.join("manifest.header.json"), &header)?;
    Ok(DatasetManifest { header, instances })
}
