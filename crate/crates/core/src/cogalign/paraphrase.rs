//! Paraphrase expansion. An external HTTP service can supply rewrites; when
//! it is absent or fails, deterministic rule-based rewrites are used. Every
//! rewrite must keep the bound entities and relations of its source.

use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{BaseText, PreferencePair};

/// Environment variable holding the bearer token for the paraphrase service.
pub const TOKEN_ENV: &str = "COGALIGN_PARAPHRASE_TOKEN";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParaphraseError {
    #[error("paraphrase service unavailable: {0}")]
    Unavailable(String),
    #[error("paraphrase request failed: {0}")]
    Http(String),
    #[error("paraphrase service returned {got} variants, wanted {want}")]
    WrongCount { want: u32, got: usize },
    #[error("variant changes bound entities: {variant:?} from {text:?}")]
    BindingChanged { text: String, variant: String },
    #[error("pair {id}: {reason}; fallback disabled, emitted unexpanded")]
    NotExpanded { id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParaphraseSettings {
    /// Variants per pair; 0 leaves pairs unexpanded.
    pub k: u32,
    /// Service endpoint; without it only the fallback is used.
    pub url: Option<String>,
    pub fallback: bool,
    pub timeout_ms: u64,
    pub max_inflight: usize,
}

impl Default for ParaphraseSettings {
    fn default() -> Self {
        ParaphraseSettings { k: 3, url: None, fallback: true, timeout_ms: 10_000, max_inflight: 4 }
    }
}

pub trait ParaphraseClient: Sync {
    /// `k` rewrites of `text`.
    fn paraphrase(&self, text: &str, k: u32) -> Result<Vec<String>, ParaphraseError>;
}

/// A client that is never reachable, so every request takes the fallback.
pub struct FallbackOnly;

impl ParaphraseClient for FallbackOnly {
    fn paraphrase(&self, _text: &str, _k: u32) -> Result<Vec<String>, ParaphraseError> {
        Err(ParaphraseError::Unavailable("no service configured".into()))
    }
}

#[derive(Serialize)]
struct Request<'a> {
    text: &'a str,
    k: u32,
}

#[derive(Deserialize)]
struct Response {
    variants: Vec<String>,
}

/// JSON-over-HTTP client: POST `{text, k}`, expect `{variants: [..]}`.
pub struct HttpParaphraseClient {
    agent: ureq::Agent,
    url: String,
    token: Option<String>,
}

impl HttpParaphraseClient {
    /// Reads the bearer token from the environment.
    pub fn new(url: &str, timeout: Duration) -> Self {
        let token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Self::with_token(url, timeout, token)
    }

    pub fn with_token(url: &str, timeout: Duration, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        HttpParaphraseClient { agent, url: url.to_string(), token }
    }
}

impl ParaphraseClient for HttpParaphraseClient {
    fn paraphrase(&self, text: &str, k: u32) -> Result<Vec<String>, ParaphraseError> {
        let mut req = self.agent.post(&self.url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(Request { text, k }).map_err(|e| match e {
            ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
                ParaphraseError::Unavailable(e.to_string())
            }
            other => ParaphraseError::Http(other.to_string()),
        })?;
        let body: Response = resp.body_mut().read_json().map_err(|e| ParaphraseError::Http(e.to_string()))?;
        if body.variants.len() != k as usize {
            return Err(ParaphraseError::WrongCount { want: k, got: body.variants.len() });
        }
        Ok(body.variants)
    }
}

/// Canonical relation phrase and its meaning-preserving alternatives.
const SYNONYMS: &[(&str, [&str; 2])] = &[
    ("is larger", ["is bigger", "is greater"]),
    ("is smaller", ["is the smaller one", "is less large"]),
    ("is longer", ["is the longer one", "has greater length"]),
    ("is shorter", ["is the shorter one", "has smaller length"]),
    ("has the longer distance", ["has the greater distance", "is spaced farther apart"]),
    ("has the smaller distance", ["has the shorter distance", "is spaced closer together"]),
    ("appears more times", ["appears more often", "occurs more frequently"]),
    ("appears less times", ["appears less often", "occurs less frequently"]),
    ("has the larger volume", ["has the bigger volume", "holds more volume"]),
    ("has the smaller volume", ["has the lesser volume", "holds less volume"]),
    ("are the same", ["are equal", "are identical"]),
    ("are the same length", ["have equal length", "have an identical length"]),
    ("have the same distance", ["have equal distances", "are spaced equally"]),
    ("appear the same number of times", ["appear equally often", "appear an equal number of times"]),
    ("have the same volume", ["have equal volumes", "have an identical volume"]),
    ("has the same slope", ["has an identical slope", "has a matching slope"]),
    ("have the same slope", ["have an identical slope", "have a matching slope"]),
    ("does not intersect", ["does not cross", "does not cut through"]),
    ("does intersect", ["does cross", "does cut through"]),
    ("occupy the exact same position", ["occupy the identical position", "sit at the very same spot"]),
];

/// Relation phrases that must survive verbatim.
const FIXED_RELATIONS: &[&str] = &["to the left", "to the right", "on top", "at the bottom"];

const PREFIXES: [&str; 3] = ["In the image, ", "Looking at the figure, ", "From the picture, "];
const SUFFIXES: [&str; 3] = [", as shown in the image", ", based on the figure", ", judging from the picture"];
const LEADS: [&str; 3] = ["Based on what is drawn, ", "Judging by the drawing, ", "As the image shows, "];

fn entity_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\b(black|white|red|blue|green|orange|purple|brown|gray|circle|square|triangle|star|pentagon|cube|sphere|cylinder|[ABCSX])\b",
        )
        .expect("entity regex")
    })
}

/// All relation phrase occurrences as (start, end, canonical), longest
/// match first, non-overlapping.
fn relation_spans(text: &str) -> Vec<(usize, usize, &'static str)> {
    let mut phrases: Vec<(&'static str, &'static str)> = Vec::new();
    for (canon, alts) in SYNONYMS {
        phrases.push((canon, canon));
        for a in alts {
            phrases.push((a, canon));
        }
    }
    for f in FIXED_RELATIONS {
        phrases.push((f, f));
    }
    phrases.sort_by_key(|(p, _)| std::cmp::Reverse(p.len()));
    let lower = text.to_lowercase();
    let mut spans: Vec<(usize, usize, &'static str)> = Vec::new();
    for (p, canon) in phrases {
        for (i, _) in lower.match_indices(p) {
            let (s, e) = (i, i + p.len());
            if spans.iter().all(|&(a, b, _)| e <= a || s >= b) {
                spans.push((s, e, canon));
            }
        }
    }
    spans.sort();
    spans
}

/// Ordered entity names plus canonical relation phrases. Two texts with the
/// same signature bind the same objects to the same relations.
pub fn binding_signature(text: &str) -> Vec<String> {
    let mut items: Vec<(usize, String)> =
        entity_regex().find_iter(text).map(|m| (m.start(), m.as_str().to_string())).collect();
    items.extend(relation_spans(text).into_iter().map(|(s, _, c)| (s, format!("rel:{c}"))));
    items.sort();
    items.into_iter().map(|(_, t)| t).collect()
}

fn apply_synonyms(text: &str, choice: usize) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    let mut last = 0;
    for (s, e, canon) in relation_spans(text) {
        out.push_str(&text[last..s]);
        let alts = SYNONYMS.iter().find(|(c, _)| *c == canon).map(|(_, a)| a);
        match (alts, choice) {
            (Some(a), 0 | 1) => out.push_str(a[choice]),
            _ => out.push_str(&text[s..e]),
        }
        last = e;
    }
    out.push_str(&text[last..]);
    out
}

fn lower_first(text: &str) -> String {
    let first_word = text.split_whitespace().next().unwrap_or("");
    // keep a leading single-letter tag capitalized
    if first_word.len() == 1 {
        return text.to_string();
    }
    let mut c = text.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn with_suffix(text: &str, suffix: &str) -> String {
    match text.char_indices().last() {
        Some((i, p)) if p == '.' || p == '?' => format!("{}{suffix}{p}", &text[..i]),
        _ => format!("{text}{suffix}"),
    }
}

fn reorder(text: &str, lead: &str) -> String {
    for (head, tail) in [("Yes, ", "yes"), ("No, ", "no")] {
        if let Some(rest) = text.strip_prefix(head) {
            let mut c = rest.chars();
            let body: String = c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default();
            return with_suffix(&body, &format!(", {tail}"));
        }
    }
    format!("{lead}{}", lower_first(text))
}

/// The `k` deterministic rule-based rewrites of `text`.
pub fn fallback_variants(text: &str, k: u32) -> Vec<String> {
    (0..k as usize)
        .map(|j| {
            let base = apply_synonyms(text, j % 3);
            let pick = (j / 3) % 3;
            match j % 3 {
                0 => format!("{}{}", PREFIXES[pick], lower_first(&base)),
                1 => with_suffix(&base, SUFFIXES[pick]),
                _ => reorder(&base, LEADS[pick]),
            }
        })
        .collect()
}

fn check_bindings(text: &str, variants: &[String]) -> Result<(), ParaphraseError> {
    let sig = binding_signature(text);
    for v in variants {
        if binding_signature(v) != sig {
            return Err(ParaphraseError::BindingChanged { text: text.into(), variant: v.clone() });
        }
    }
    Ok(())
}

fn from_client(
    client: &dyn ParaphraseClient,
    texts: [&str; 3],
    k: u32,
) -> Result<[Vec<String>; 3], ParaphraseError> {
    let mut out: [Vec<String>; 3] = Default::default();
    for (slot, text) in out.iter_mut().zip(texts) {
        let v = client.paraphrase(text, k)?;
        check_bindings(text, &v)?;
        *slot = v;
    }
    Ok(out)
}

/// The pair itself followed by `k` variants with rewritten prompt, chosen and
/// rejected text. Client failures fall back to rule-based rewrites; with the
/// fallback disabled the pair is returned alone together with the error.
pub fn paraphrase_expand(
    pair: &PreferencePair,
    client: &dyn ParaphraseClient,
    settings: &ParaphraseSettings,
) -> (Vec<PreferencePair>, Option<ParaphraseError>) {
    let k = settings.k;
    if k == 0 {
        return (vec![pair.clone()], None);
    }
    let texts = [pair.prompt.as_str(), pair.chosen.as_str(), pair.rejected.as_str()];
    let (variants, origin) = match from_client(client, texts, k) {
        Ok(v) => (v, "paraphrase:client"),
        Err(e) if settings.fallback => {
            log::debug!("pair {}: {e}; using fallback rewrites", pair.id);
            (texts.map(|t| fallback_variants(t, k)), "paraphrase:fallback")
        }
        Err(e) => {
            let err = ParaphraseError::NotExpanded { id: pair.id.clone(), reason: e.to_string() };
            return (vec![pair.clone()], Some(err));
        }
    };
    let base = BaseText { prompt: pair.prompt.clone(), chosen: pair.chosen.clone(), rejected: pair.rejected.clone() };
    let mut out = vec![pair.clone()];
    for j in 0..k as usize {
        let mut v = pair.clone();
        v.id = format!("{}-p{}", pair.id, j + 1);
        v.prompt = variants[0][j].clone();
        v.chosen = variants[1][j].clone();
        v.rejected = variants[2][j].clone();
        v.provenance.origin = origin.to_string();
        v.provenance.variant = Some(j as u32 + 1);
        v.provenance.base = Some(base.clone());
        out.push(v);
    }
    (out, None)
}
