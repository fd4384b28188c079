//! Reference DPO objective, an SFT baseline and a small softmax policy for
//! checking both at desk scale. All arithmetic is f64.

use serde::{Deserialize, Serialize};

use crate::cogalign::{build_pair, parse_statement, signed_margin, CogError, CogTask, PreferencePair};
use crate::geometry::{derive_stream, RandomStream, StreamPath};
use crate::render::CanvasSpec;

/// Stream task id for toy splits and random weight points.
const DPO_STREAM: u32 = 30;

#[derive(Debug, thiserror::Error)]
pub enum DpoError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("log-probability {0} is positive")]
    NotLogProb(f64),
    #[error("beta must be positive, got {0}")]
    BadBeta(f64),
    #[error("degenerate dataset: {0}")]
    Degenerate(String),
    #[error("feature dimension {got} does not match policy dimension {want}")]
    Dimension { want: usize, got: usize },
    #[error("candidate index {0} out of range")]
    BadCandidate(usize),
    #[error(transparent)]
    Pair(#[from] CogError),
}

/// Sequence log-probabilities of one preference pair under the trained and
/// the reference policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceLogProbs {
    pub logp_theta_pos: f64,
    pub logp_theta_neg: f64,
    pub logp_ref_pos: f64,
    pub logp_ref_neg: f64,
}

impl PreferenceLogProbs {
    fn validate(&self) -> Result<(), DpoError> {
        for v in [self.logp_theta_pos, self.logp_theta_neg, self.logp_ref_pos, self.logp_ref_neg] {
            if !v.is_finite() {
                return Err(DpoError::NonFinite("log-probabilities"));
            }
            if v > 0.0 {
                return Err(DpoError::NotLogProb(v));
            }
        }
        Ok(())
    }

    /// The implicit reward margin `r_delta`.
    pub fn reward_margin(&self, beta: f64) -> f64 {
        beta * ((self.logp_theta_pos - self.logp_ref_pos) - (self.logp_theta_neg - self.logp_ref_neg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpoConfig {
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: u32,
    pub seed: u64,
}

impl Default for DpoConfig {
    fn default() -> Self {
        DpoConfig { beta: 0.1, learning_rate: 1.0, epochs: 200, seed: 0 }
    }
}

impl DpoConfig {
    pub fn validate(&self) -> Result<(), DpoError> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(DpoError::BadBeta(self.beta));
        }
        if !self.learning_rate.is_finite() {
            return Err(DpoError::NonFinite("learning rate"));
        }
        Ok(())
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_beta(beta: f64) -> Result<(), DpoError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(DpoError::BadBeta(beta))
    }
}

/// Mean of `-log sigmoid(r_delta)` over the batch.
pub fn dpo_loss(batch: &[PreferenceLogProbs], beta: f64) -> Result<f64, DpoError> {
    check_beta(beta)?;
    if batch.is_empty() {
        return Err(DpoError::EmptyBatch);
    }
    let mut sum = 0.0;
    for p in batch {
        p.validate()?;
        sum += softplus(-p.reward_margin(beta));
    }
    Ok(sum / batch.len() as f64)
}

/// One instance for the toy policy: a feature vector per candidate response
/// and which candidates are chosen and rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPair {
    pub candidates: Vec<Vec<f64>>,
    pub chosen: usize,
    pub rejected: usize,
}

/// Linear scores over a candidate set, normalized with a softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub weights: Vec<f64>,
}

impl ToyPolicy {
    pub fn zeros(dim: usize) -> Self {
        ToyPolicy { weights: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, phi: &[f64]) -> f64 {
        self.weights.iter().zip(phi).map(|(w, x)| w * x).sum()
    }

    fn check(&self, pair: &ToyPair) -> Result<(), DpoError> {
        for c in &pair.candidates {
            if c.len() != self.dim() {
                return Err(DpoError::Dimension { want: self.dim(), got: c.len() });
            }
        }
        for i in [pair.chosen, pair.rejected] {
            if i >= pair.candidates.len() {
                return Err(DpoError::BadCandidate(i));
            }
        }
        Ok(())
    }

    /// Log-probabilities of every candidate.
    pub fn log_probs(&self, pair: &ToyPair) -> Result<Vec<f64>, DpoError> {
        self.check(pair)?;
        let s: Vec<f64> = pair.candidates.iter().map(|c| self.score(c)).collect();
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + s.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        Ok(s.iter().map(|x| x - lse).collect())
    }

    /// Gradient of `log p(candidate c)` with respect to the weights:
    /// `phi_c - E_p[phi]`.
    fn grad_log_prob(&self, pair: &ToyPair, c: usize) -> Result<Vec<f64>, DpoError> {
        let lp = self.log_probs(pair)?;
        let mut g = pair.candidates[c].clone();
        for (phi, l) in pair.candidates.iter().zip(&lp) {
            let p = l.exp();
            for (gi, x) in g.iter_mut().zip(phi) {
                *gi -= p * x;
            }
        }
        Ok(g)
    }
}

/// Log-probabilities of one pair's chosen and rejected candidates under
/// `policy` and `reference`.
pub fn pair_log_probs(pair: &ToyPair, policy: &ToyPolicy, reference: &ToyPolicy) -> Result<PreferenceLogProbs, DpoError> {
    let (lt, lr) = (policy.log_probs(pair)?, reference.log_probs(pair)?);
    Ok(PreferenceLogProbs {
        logp_theta_pos: lt[pair.chosen],
        logp_theta_neg: lt[pair.rejected],
        logp_ref_pos: lr[pair.chosen],
        logp_ref_neg: lr[pair.rejected],
    })
}

/// DPO loss of `policy` over toy pairs.
pub fn dpo_objective(pairs: &[ToyPair], policy: &ToyPolicy, reference: &ToyPolicy, beta: f64) -> Result<f64, DpoError> {
    let batch = pairs.iter().map(|p| pair_log_probs(p, policy, reference)).collect::<Result<Vec<_>, _>>()?;
    dpo_loss(&batch, beta)
}

fn add_scaled(acc: &mut [f64], v: &[f64], s: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

/// Analytic gradient of [`dpo_objective`] with respect to the policy weights.
pub fn dpo_gradient(pairs: &[ToyPair], beta: f64, policy: &ToyPolicy, reference: &ToyPolicy) -> Result<Vec<f64>, DpoError> {
    check_beta(beta)?;
    if pairs.is_empty() {
        return Err(DpoError::EmptyBatch);
    }
    let mut g = vec![0.0; policy.dim()];
    for p in pairs {
        let lp = pair_log_probs(p, policy, reference)?;
        lp.validate()?;
        // d/dr softplus(-r) = -sigmoid(-r)
        let coef = -sigmoid(-lp.reward_margin(beta)) * beta / pairs.len() as f64;
        add_scaled(&mut g, &policy.grad_log_prob(p, p.chosen)?, coef);
        add_scaled(&mut g, &policy.grad_log_prob(p, p.rejected)?, -coef);
    }
    Ok(g)
}

/// Mean negative log-probability of the chosen candidates; the rejected
/// response is ignored.
pub fn sft_loss(pairs: &[ToyPair], policy: &ToyPolicy) -> Result<f64, DpoError> {
    if pairs.is_empty() {
        return Err(DpoError::EmptyBatch);
    }
    let mut sum = 0.0;
    for p in pairs {
        sum -= policy.log_probs(p)?[p.chosen];
    }
    Ok(sum / pairs.len() as f64)
}

pub fn sft_gradient(pairs: &[ToyPair], policy: &ToyPolicy) -> Result<Vec<f64>, DpoError> {
    if pairs.is_empty() {
        return Err(DpoError::EmptyBatch);
    }
    let mut g = vec![0.0; policy.dim()];
    for p in pairs {
        add_scaled(&mut g, &policy.grad_log_prob(p, p.chosen)?, -1.0 / pairs.len() as f64);
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub points: usize,
    pub step: f64,
    pub loss_at_reference: f64,
    /// Worst `|g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|)`
    /// over the points, norms taken over the whole vector.
    pub max_rel_error: f64,
}

/// Central finite differences of the DPO objective at `points` random weight
/// vectors, compared against [`dpo_gradient`].
pub fn gradient_check(
    pairs: &[ToyPair],
    reference: &ToyPolicy,
    beta: f64,
    points: usize,
    step: f64,
    seed: u64,
) -> Result<GradCheckReport, DpoError> {
    let loss_at_reference = dpo_objective(pairs, reference, reference, beta)?;
    let mut st = derive_stream(seed, StreamPath::new(DPO_STREAM, 1, 0));
    let mut worst = 0.0f64;
    for _ in 0..points {
        let w: Vec<f64> = (0..reference.dim()).map(|_| st.uniform(-2.0, 2.0)).collect();
        let policy = ToyPolicy { weights: w.clone() };
        let analytic = dpo_gradient(pairs, beta, &policy, reference)?;
        let mut numeric = vec![0.0; w.len()];
        for (k, slot) in numeric.iter_mut().enumerate() {
            let mut up = policy.clone();
            up.weights[k] += step;
            let mut down = policy.clone();
            down.weights[k] -= step;
            *slot = (dpo_objective(pairs, &up, reference, beta)? - dpo_objective(pairs, &down, reference, beta)?)
                / (2.0 * step);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let scale = norm(&analytic).max(norm(&numeric));
        if scale > 0.0 {
            worst = worst.max(norm(&diff) / scale);
        }
    }
    Ok(GradCheckReport { points, step, loss_at_reference, max_rel_error: worst })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dpo,
    Sft,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dpo => "dpo",
            Method::Sft => "sft",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        [Method::Dpo, Method::Sft].into_iter().find(|m| m.name() == s)
    }
}

/// Share of pairs whose chosen candidate outscores the rejected one; ties
/// count one half.
pub fn pairwise_accuracy(pairs: &[ToyPair], policy: &ToyPolicy) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits: f64 = pairs
        .iter()
        .map(|p| {
            let (c, r) = (policy.score(&p.candidates[p.chosen]), policy.score(&p.candidates[p.rejected]));
            if c > r {
                1.0
            } else if c == r {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    hits / pairs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub method: Method,
    pub beta: f64,
    pub epochs: u32,
    pub learning_rate: f64,
    pub seed: u64,
    pub train_pairs: usize,
    pub heldout_pairs: usize,
    pub final_train_loss: f64,
    pub heldout_pairwise_accuracy: f64,
}

/// 80/20 split of `n` indices, shuffled by the seed's own stream.
pub fn toy_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    derive_stream(seed, StreamPath::new(DPO_STREAM, 0, u64::MAX)).shuffle(&mut idx);
    let n_train = n * 4 / 5;
    let heldout = idx.split_off(n_train);
    (idx, heldout)
}

/// Full-batch gradient descent from zero weights; the reference policy is
/// the frozen initial policy. Pairs are split 80/20 by index.
pub fn train_toy_pairs(
    pairs: &[ToyPair],
    method: Method,
    config: &DpoConfig,
) -> Result<(ToyPolicy, ToyReport), DpoError> {
    let groups: Vec<usize> = (0..pairs.len()).collect();
    fit_grouped(pairs, &groups, method, config)
}

/// Split by group so that related pairs (a base pair and its paraphrases)
/// land on the same side.
fn fit_grouped(
    pairs: &[ToyPair],
    groups: &[usize],
    method: Method,
    config: &DpoConfig,
) -> Result<(ToyPolicy, ToyReport), DpoError> {
    config.validate()?;
    let dim = pairs.first().and_then(|p| p.candidates.first()).map(Vec::len).unwrap_or(0);
    if pairs.len() < 5 {
        return Err(DpoError::Degenerate(format!("{} pairs", pairs.len())));
    }
    if pairs.iter().all(|p| p.candidates[p.chosen] == p.candidates[p.rejected]) {
        return Err(DpoError::Degenerate("chosen and rejected never differ".into()));
    }
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let (_, held_groups) = toy_split(n_groups, config.seed);
    let mut held_flag = vec![false; n_groups];
    for g in held_groups {
        held_flag[g] = true;
    }
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (p, &g) in pairs.iter().zip(groups) {
        if held_flag[g] { held.push(p.clone()) } else { train.push(p.clone()) }
    }
    let reference = ToyPolicy::zeros(dim);
    let mut policy = reference.clone();
    let objective = |p: &ToyPolicy| match method {
        Method::Dpo => dpo_objective(&train, p, &reference, config.beta),
        Method::Sft => sft_loss(&train, p),
    };
    for _ in 0..config.epochs {
        let g = match method {
            Method::Dpo => dpo_gradient(&train, config.beta, &policy, &reference)?,
            Method::Sft => sft_gradient(&train, &policy)?,
        };
        add_scaled(&mut policy.weights, &g, -config.learning_rate);
    }
    let report = ToyReport {
        method,
        beta: config.beta,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        seed: config.seed,
        train_pairs: train.len(),
        heldout_pairs: held.len(),
        final_train_loss: objective(&policy)?,
        heldout_pairwise_accuracy: pairwise_accuracy(&held, &policy),
    };
    Ok((policy, report))
}

/// Claim-kind slots per task in the feature map.
const KINDS: usize = 6;
const TASK_BLOCK: usize = KINDS + 1;
/// Feature dimension of [`statement_features`].
pub const FEATURE_DIM: usize = 8 * TASK_BLOCK + 1;

fn kind_slot(claim: &crate::cogalign::Claim) -> usize {
    use crate::cogalign::Claim;
    use crate::geometry::RelPosition;
    match claim {
        Claim::Greater { .. } | Claim::SlopeOnly { .. } => 0,
        Claim::Smaller { .. } | Claim::SlopeBoth => 1,
        Claim::Same | Claim::SameCount { .. } | Claim::SlopeNeither => 2,
        Claim::Position { rel, .. } => RelPosition::ALL.iter().position(|r| r == rel).unwrap_or(0),
        Claim::SamePosition => 4,
        Claim::Intersects { yes, .. } => usize::from(!*yes),
    }
}

/// Features of one candidate statement: a one-hot (task, claim kind)
/// indicator, the claim's signed margin against the scene in a per-task slot,
/// and the word count over ten. `parse_text` is the template text behind
/// `text` (they differ for paraphrased variants).
pub fn statement_features(
    task: CogTask,
    pair: &PreferencePair,
    text: &str,
    parse_text: &str,
) -> Result<Vec<f64>, DpoError> {
    let (claim, _) = parse_statement(task, parse_text)?;
    let t = CogTask::ALL.iter().position(|&x| x == task).unwrap_or(0);
    let mut phi = vec![0.0; FEATURE_DIM];
    phi[t * TASK_BLOCK + kind_slot(&claim)] = 1.0;
    phi[t * TASK_BLOCK + KINDS] = signed_margin(&claim, &pair.meta.objects)?;
    phi[FEATURE_DIM - 1] = text.split_whitespace().count() as f64 / 10.0;
    Ok(phi)
}

/// Two-candidate toy instance for a preference pair: index 0 is chosen.
pub fn toy_pair(pair: &PreferencePair) -> Result<ToyPair, DpoError> {
    let (pc, pr) = match &pair.provenance.base {
        Some(b) => (b.chosen.as_str(), b.rejected.as_str()),
        None => (pair.chosen.as_str(), pair.rejected.as_str()),
    };
    Ok(ToyPair {
        candidates: vec![
            statement_features(pair.task, pair, &pair.chosen, pc)?,
            statement_features(pair.task, pair, &pair.rejected, pr)?,
        ],
        chosen: 0,
        rejected: 1,
    })
}

/// Base preference pairs for the toy experiment, `n / 8` per task, built in
/// memory without rendering.
pub fn toy_dataset(n: usize, seed: u64) -> Result<Vec<PreferencePair>, DpoError> {
    if n == 0 || n % CogTask::ALL.len() != 0 {
        return Err(DpoError::Degenerate(format!("{n} pairs do not split over 8 tasks")));
    }
    let canvas = CanvasSpec::default();
    let per = n / CogTask::ALL.len();
    let mut out = Vec::with_capacity(n);
    for task in CogTask::ALL {
        let classes = task.outcomes();
        for i in 0..per {
            out.push(build_pair(task, i, classes[i % classes.len()], seed, &canvas)?.0);
        }
    }
    Ok(out)
}

/// Train on preference pairs through the toy feature map. Paraphrase
/// variants follow their base pair into the same split.
pub fn train_toy(
    dataset: &[PreferencePair],
    method: Method,
    config: &DpoConfig,
) -> Result<(ToyPolicy, ToyReport), DpoError> {
    let pairs = dataset.iter().map(toy_pair).collect::<Result<Vec<_>, _>>()?;
    let mut ids: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let groups: Vec<usize> = dataset
        .iter()
        .map(|p| {
            let base = match p.provenance.variant {
                Some(_) => p.id.rsplit_once("-p").map_or(p.id.as_str(), |(b, _)| b),
                None => p.id.as_str(),
            };
            let next = ids.len();
            *ids.entry(base).or_insert(next)
        })
        .collect();
    fit_grouped(&pairs, &groups, method, config)
}

/// Random two-candidate pairs in `dim` dimensions for gradient checks.
pub fn random_pairs(n: usize, dim: usize, candidates: usize, stream: &mut RandomStream) -> Vec<ToyPair> {
    (0..n)
        .map(|_| {
            let cands: Vec<Vec<f64>> =
                (0..candidates).map(|_| (0..dim).map(|_| stream.uniform(-1.0, 1.0)).collect()).collect();
            let (c, r) = stream.pick_two(&(0..candidates).collect::<Vec<_>>());
            ToyPair { candidates: cands, chosen: c, rejected: r }
        })
        .collect()
}
