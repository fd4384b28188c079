//! Linear probes over externally computed embeddings: the binary embedding
//! format, logistic-regression training with best-dev selection, accuracy
//! and rank-based AUC.

use std::collections::HashSet;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpo::sigmoid;
use crate::geometry::{derive_stream, StreamPath};
use crate::jsonl::{read_jsonl, write_jsonl, JsonlError};

const MAGIC: &[u8; 4] = b"VEMB";
const VERSION: u32 = 1;
const PROBE_STREAM: u32 = 40;

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error(transparent)]
    Io(#[from] JsonlError),
    #[error("{0}: not an embedding file")]
    BadMagic(PathBuf),
    #[error("{path}: unsupported version {version}")]
    BadVersion { path: PathBuf, version: u32 },
    #[error("{path}: expected {expected} bytes of vectors, found {got}")]
    Truncated { path: PathBuf, expected: u64, got: u64 },
    #[error("{vectors} vectors but {labels} sidecar rows")]
    SidecarMismatch { vectors: usize, labels: usize },
    #[error("dimension {got} does not match {want}")]
    Dimension { want: usize, got: usize },
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("id {0} is not in the manifest")]
    UnknownId(String),
    #[error("both labels must be present")]
    SingleClass,
    #[error("no records")]
    Empty,
    #[error("length mismatch: {scores} scores, {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f32>,
    pub label: u8,
}

#[derive(Serialize, Deserialize)]
struct SidecarRow {
    id: String,
    label: u8,
}

/// The JSONL sidecar that sits next to a `.vemb` file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("jsonl")
}

fn check_records(records: &[EmbeddingRecord]) -> Result<usize, ProbeError> {
    let dim = records.first().map(|r| r.vector.len()).ok_or(ProbeError::Empty)?;
    let mut seen = HashSet::new();
    for r in records {
        if r.vector.len() != dim {
            return Err(ProbeError::Dimension { want: dim, got: r.vector.len() });
        }
        if r.label > 1 {
            return Err(ProbeError::BadLabel(r.label));
        }
        if !seen.insert(r.id.as_str()) {
            return Err(ProbeError::DuplicateId(r.id.clone()));
        }
    }
    Ok(dim)
}

/// Write vectors to `path` and `{id, label}` rows to its sidecar.
pub fn write_vemb(path: &Path, records: &[EmbeddingRecord]) -> Result<(), ProbeError> {
    let dim = check_records(records)?;
    let f = std::fs::File::create(path).map_err(|e| JsonlError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut put = |b: &[u8]| w.write_all(b).map_err(|e| JsonlError::io(path, e));
    put(MAGIC)?;
    put(&VERSION.to_le_bytes())?;
    put(&(records.len() as u64).to_le_bytes())?;
    put(&(dim as u32).to_le_bytes())?;
    for r in records {
        for v in &r.vector {
            put(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| JsonlError::io(path, e))?;
    let rows: Vec<SidecarRow> = records.iter().map(|r| SidecarRow { id: r.id.clone(), label: r.label }).collect();
    write_jsonl(&sidecar_path(path), &rows)?;
    Ok(())
}

pub fn read_vemb(path: &Path) -> Result<Vec<EmbeddingRecord>, ProbeError> {
    let f = std::fs::File::open(path).map_err(|e| JsonlError::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut header = [0u8; 20];
    r.read_exact(&mut header).map_err(|_| ProbeError::BadMagic(path.into()))?;
    if &header[..4] != MAGIC {
        return Err(ProbeError::BadMagic(path.into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(ProbeError::BadVersion { path: path.into(), version });
    }
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let dim = u32::from_le_bytes(header[16..20].try_into().expect("4 bytes")) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| JsonlError::io(path, e))?;
    let expected = count * dim as u64 * 4;
    if body.len() as u64 != expected {
        return Err(ProbeError::Truncated { path: path.into(), expected, got: body.len() as u64 });
    }
    let rows: Vec<SidecarRow> = read_jsonl(&sidecar_path(path))?;
    if rows.len() as u64 != count {
        return Err(ProbeError::SidecarMismatch { vectors: count as usize, labels: rows.len() });
    }
    let values: Vec<f32> = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    let records: Vec<EmbeddingRecord> = rows
        .into_iter()
        .zip(values.chunks(dim.max(1)))
        .map(|(row, v)| EmbeddingRecord { id: row.id, vector: if dim == 0 { vec![] } else { v.to_vec() }, label: row.label })
        .collect();
    check_records(&records)?;
    Ok(records)
}

/// Every record id must name a manifest instance.
pub fn check_ids(records: &[EmbeddingRecord], manifest_ids: &HashSet<String>) -> Result<(), ProbeError> {
    match records.iter().find(|r| !manifest_ids.contains(&r.id)) {
        Some(r) => Err(ProbeError::UnknownId(r.id.clone())),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearProbe {
    pub fn zeros(dim: usize) -> Self {
        LinearProbe { weights: vec![0.0; dim], bias: 0.0 }
    }

    fn logit(&self, x: &[f32]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, &v)| w * f64::from(v)).sum::<f64>()
    }

    /// Probability of class 1.
    pub fn score(&self, x: &[f32]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Class 1 only above 0.5; a score of exactly 0.5 predicts 0.
    pub fn predict(&self, x: &[f32]) -> u8 {
        u8::from(self.score(x) > 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeParams {
    pub epochs: u32,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams { epochs: 200, learning_rate: 0.1, batch_size: 256, seed: 0 }
    }
}

/// Dev accuracy after each epoch; entry 0 is the untrained probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub dev_acc: Vec<f64>,
    pub best_epoch: u32,
}

pub fn evaluate_accuracy(probe: &LinearProbe, records: &[EmbeddingRecord]) -> Result<f64, ProbeError> {
    if records.is_empty() {
        return Err(ProbeError::Empty);
    }
    for r in records {
        if r.vector.len() != probe.weights.len() {
            return Err(ProbeError::Dimension { want: probe.weights.len(), got: r.vector.len() });
        }
    }
    let hits: usize = records.par_iter().filter(|r| probe.predict(&r.vector) == r.label).count();
    Ok(hits as f64 / records.len() as f64)
}

pub fn scores(probe: &LinearProbe, records: &[EmbeddingRecord]) -> Vec<f64> {
    records.par_iter().map(|r| probe.score(&r.vector)).collect()
}

/// Logistic regression by mini-batch gradient descent from zero; returns
/// the checkpoint with the best dev accuracy, earliest on ties.
pub fn train_probe(
    train: &[EmbeddingRecord],
    dev: &[EmbeddingRecord],
    params: &ProbeParams,
) -> Result<(LinearProbe, ProbeTrace), ProbeError> {
    let dim = check_records(train)?;
    let dev_dim = check_records(dev)?;
    if dev_dim != dim {
        return Err(ProbeError::Dimension { want: dim, got: dev_dim });
    }
    if !train.iter().any(|r| r.label == 0) || !train.iter().any(|r| r.label == 1) {
        return Err(ProbeError::SingleClass);
    }
    let batch = params.batch_size.max(1);
    let mut probe = LinearProbe::zeros(dim);
    let mut best = (evaluate_accuracy(&probe, dev)?, 0u32, probe.clone());
    let mut trace = vec![best.0];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; dim];
    for epoch in 1..=params.epochs {
        derive_stream(params.seed, StreamPath::new(PROBE_STREAM, 0, u64::from(epoch))).shuffle(&mut order);
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for &i in chunk {
                let r = &train[i];
                let err = probe.score(&r.vector) - f64::from(r.label);
                for (g, &v) in grad.iter_mut().zip(&r.vector) {
                    *g += err * f64::from(v);
                }
                grad_b += err;
            }
            let step = params.learning_rate / chunk.len() as f64;
            for (w, g) in probe.weights.iter_mut().zip(&grad) {
                *w -= step * g;
            }
            probe.bias -= step * grad_b;
        }
        let acc = evaluate_accuracy(&probe, dev)?;
        trace.push(acc);
        if acc > best.0 {
            best = (acc, epoch, probe.clone());
        }
    }
    Ok((best.2, ProbeTrace { dev_acc: trace, best_epoch: best.1 }))
}

/// Area under the ROC curve from midranks: the mean over (positive,
/// negative) pairs of 1 for a higher positive score and 1/2 for a tie.
pub fn compute_auc(scores: &[f64], labels: &[u8]) -> Result<f64, ProbeError> {
    if scores.len() != labels.len() {
        return Err(ProbeError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ProbeError::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // rank sums in half units keep every step exact
    let mut pos_rank_x2: u64 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share the midrank (i+j+2)/2
        let mid_x2 = (i + j + 2) as u64;
        let pos_in_tie = idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        pos_rank_x2 += mid_x2 * pos_in_tie;
        i = j + 1;
    }
    let (p, n) = (n_pos as u64, n_neg as u64);
    let u_x2 = pos_rank_x2 - p * (p + 1);
    Ok(u_x2 as f64 / (2 * p * n) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub task: String,
    pub dim: usize,
    pub epochs: u32,
    pub best_epoch: u32,
    pub dev_acc: f64,
    pub test_acc: f64,
    pub auc: f64,
    pub params: ProbeParams,
    pub dev_trace: Vec<f64>,
}

/// Train on `train`, select on `dev`, report on `test`.
pub fn run_probe(
    task: &str,
    train: &[EmbeddingRecord],
    dev: &[EmbeddingRecord],
    test: &[EmbeddingRecord],
    params: &ProbeParams,
) -> Result<(LinearProbe, ProbeReport), ProbeError> {
    let (probe, trace) = train_probe(train, dev, params)?;
    let test_acc = evaluate_accuracy(&probe, test)?;
    let labels: Vec<u8> = test.iter().map(|r| r.label).collect();
    let auc = compute_auc(&scores(&probe, test), &labels)?;
    let report = ProbeReport {
        task: task.to_string(),
        dim: probe.weights.len(),
        epochs: params.epochs,
        best_epoch: trace.best_epoch,
        dev_acc: trace.dev_acc[trace.best_epoch as usize],
        test_acc,
        auc,
        params: *params,
        dev_trace: trace.dev_acc,
    };
    Ok((probe, report))
}

/// Balanced synthetic embeddings, labels alternating 0/1, whose label is the sign of the first
/// coordinate, kept at least `margin` from zero; the other coordinates are
/// standard normal. With `shuffle_labels` the labels are permuted afterwards
/// so they carry no signal.
pub fn synthetic_embeddings(n: usize, dim: usize, margin: f64, seed: u64, shuffle_labels: bool) -> Vec<EmbeddingRecord> {
    let mut st = derive_stream(seed, StreamPath::new(PROBE_STREAM, 1, 0));
    // alternating labels keep every even-length consecutive slice balanced
    let mut labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let mut records: Vec<EmbeddingRecord> = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let mut v: Vec<f32> = (0..dim).map(|_| st.normal() as f32).collect();
            if let Some(first) = v.first_mut() {
                let sign = if label == 1 { 1.0 } else { -1.0 };
                *first = (sign * (margin + st.normal().abs())) as f32;
            }
            EmbeddingRecord { id: format!("synthetic-{i:06}"), vector: v, label }
        })
        .collect();
    if shuffle_labels {
        st.shuffle(&mut labels);
        for (r, l) in records.iter_mut().zip(labels) {
            r.label = l;
        }
    }
    records
}

/// Consecutive train/dev/test slices in `ratio`.
pub fn split_records(records: Vec<EmbeddingRecord>, ratio: [usize; 3]) -> [Vec<EmbeddingRecord>; 3] {
    let sum: usize = ratio.iter().sum::<usize>().max(1);
    let n_train = records.len() * ratio[0] / sum;
    let n_dev = records.len() * ratio[1] / sum;
    let mut rest = records;
    let mut dev = rest.split_off(n_train);
    let test = dev.split_off(n_dev);
    [rest, dev, test]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(compute_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(compute_auc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert_eq!(compute_auc(&[0.1, 0.2, 0.9, 0.95], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert!(matches!(compute_auc(&[0.1, 0.2], &[1, 1]), Err(ProbeError::SingleClass)));
    }

    #[test]
    fn half_score_predicts_zero() {
        let p = LinearProbe::zeros(3);
        assert_eq!(p.score(&[1.0, 2.0, 3.0]), 0.5);
        assert_eq!(p.predict(&[1.0, 2.0, 3.0]), 0);
    }

    #[test]
    fn seven_of_ten() {
        let p = LinearProbe { weights: vec![1.0], bias: 0.0 };
        let recs: Vec<EmbeddingRecord> = (0..10)
            .map(|i| EmbeddingRecord { id: i.to_string(), vector: vec![if i < 5 { 1.0 } else { -1.0 }], label: u8::from(i < 7) })
            .collect();
        assert_eq!(evaluate_accuracy(&p, &recs).unwrap(), 0.8);
        let wrong: Vec<_> = recs.iter().cloned().map(|mut r| { r.label = u8::from(r.id.parse::<u32>().unwrap() < 2); r }).collect();
        assert_eq!(evaluate_accuracy(&p, &wrong).unwrap(), 0.7);
    }
}
