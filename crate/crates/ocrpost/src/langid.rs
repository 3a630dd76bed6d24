//! Trainable line- and token-level language identifier.
//!
//! The model is a linear classifier with logistic loss over hashed character
//! n-gram count features: n-grams in a configurable range are hashed with
//! FNV-1a 64-bit into a fixed-dimension weight matrix, so training and
//! prediction are deterministic across platforms and need no vocabulary
//! file. Training runs per-example gradient steps in a seeded order and
//! returns the average of the weight iterates.

use std::collections::BTreeSet;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text::nfc;

const MODEL_VERSION: u32 = 1;
const HASH_ID: &str = "fnv1a64";

/// Tokens shorter than this inherit the label of their context line.
pub const TOKEN_FALLBACK_LEN: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum LangIdError {
    #[error("corpus has {0} label(s); at least 2 are required")]
    InsufficientData(usize),
    #[error("input is empty after trimming")]
    EmptyInput,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A labeled training corpus: (text line, label) pairs.
#[derive(Debug, Clone, Default)]
pub struct LabeledCorpus {
    pub examples: Vec<(String, String)>,
}

impl LabeledCorpus {
    pub fn new(examples: Vec<(String, String)>) -> Self {
        LabeledCorpus { examples }
    }

    /// Distinct labels in first-appearance order.
    pub fn labels(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (_, label) in &self.examples {
            if seen.insert(label.clone()) {
                out.push(label.clone());
            }
        }
        out
    }
}

/// Parse the corpus file format: one example per line,
/// `__label__<code><TAB><text>`.
pub fn parse_corpus(data: &str) -> Result<LabeledCorpus, LangIdError> {
    let mut examples = Vec::new();
    for (i, raw) in data.lines().enumerate() {
        if raw.is_empty() {
            continue;
        }
        let rest = raw.strip_prefix("__label__").ok_or_else(|| {
            LangIdError::Parse(format!("line {}: missing __label__ prefix", i + 1))
        })?;
        let (label, text) = rest.split_once('\t').ok_or_else(|| {
            LangIdError::Parse(format!("line {}: missing TAB after label", i + 1))
        })?;
        if label.is_empty() {
            return Err(LangIdError::Parse(format!("line {}: empty label", i + 1)));
        }
        if text.trim().is_empty() {
            return Err(LangIdError::Parse(format!("line {}: empty text", i + 1)));
        }
        examples.push((nfc(text), label.to_string()));
    }
    Ok(LabeledCorpus::new(examples))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<LabeledCorpus, LangIdError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| LangIdError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_corpus(&data)
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub min_n: usize,
    pub max_n: usize,
    pub dimension: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            min_n: 1,
            max_n: 4,
            dimension: 1 << 18,
            epochs: 10,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

/// A trained language identification model.
#[derive(Debug, Clone, PartialEq)]
pub struct LangIdModel {
    pub labels: Vec<String>,
    pub min_n: usize,
    pub max_n: usize,
    pub dimension: usize,
    /// Row-major `labels x dimension` weight matrix.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Training provenance: seed, epochs, train_accuracy, warnings.
    pub metadata: std::collections::BTreeMap<String, String>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Hashed n-gram count features, normalized by the total n-gram count.
fn features(text: &str, min_n: usize, max_n: usize, dimension: usize) -> Vec<(u32, f64)> {
    let chars: Vec<char> = text.chars().collect();
    let mut counts: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
    let mut total = 0.0f64;
    let mut buf = [0u8; 4];
    let mut bytes: Vec<u8> = Vec::with_capacity(max_n * 4);
    for n in min_n..=max_n.min(chars.len().max(min_n)) {
        if n > chars.len() {
            break;
        }
        for window in chars.windows(n) {
            bytes.clear();
            for &c in window {
                bytes.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
            let idx = (fnv1a64(&bytes) % dimension as u64) as u32;
            *counts.entry(idx).or_insert(0.0) += 1.0;
            total += 1.0;
        }
    }
    let mut out: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(i, c)| (i, c / total.max(1.0)))
        .collect();
    out.sort_unstable_by_key(|&(i, _)| i);
    out
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Train a model on a labeled corpus.
///
/// Deterministic given the seed: examples are visited in a seeded shuffled
/// order with a linearly decaying step size, and the returned weights are
/// the average of the per-step iterates. Training-set accuracy is recorded
/// in the model metadata. A corpus whose labels all carry the identical set
/// of texts still trains, with a `warning` metadata entry.
pub fn train(corpus: &LabeledCorpus, config: &TrainConfig) -> Result<LangIdModel, LangIdError> {
    let labels = corpus.labels();
    if labels.len() < 2 {
        return Err(LangIdError::InsufficientData(labels.len()));
    }
    let degenerate = is_degenerate(corpus, &labels);

    let dim = config.dimension;
    let n_labels = labels.len();
    let label_index: std::collections::HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    // Feature vectors are reused across epochs.
    let examples: Vec<(Vec<(u32, f64)>, usize)> = corpus
        .examples
        .iter()
        .map(|(text, label)| {
            (
                features(&nfc(text), config.min_n, config.max_n, dim),
                label_index[label.as_str()],
            )
        })
        .collect();

    // Current iterate and the step-weighted gradient sum used to recover the
    // iterate average without touching the dense matrix every step:
    //   avg = ((T + 1) * W + U) / T   with   U = sum_s eta_s * s * g_s.
    let mut weights = vec![0.0f64; n_labels * dim];
    let mut weights_u = vec![0.0f64; n_labels * dim];
    let mut bias = vec![0.0f64; n_labels];
    let mut bias_u = vec![0.0f64; n_labels];

    let total_steps = (config.epochs * examples.len()).max(1);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut step: usize = 0;
    let mut probs = vec![0.0f64; n_labels];

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &ei in &order {
            step += 1;
            let eta = config.learning_rate * (1.0 - (step - 1) as f64 / total_steps as f64);
            let (feats, target) = &examples[ei];

            for (l, p) in probs.iter_mut().enumerate() {
                let row = l * dim;
                let mut score = bias[l];
                for &(idx, val) in feats {
                    score += weights[row + idx as usize] * val;
                }
                *p = score;
            }
            let sm = softmax(&probs);
            for l in 0..n_labels {
                let g = sm[l] - if l == *target { 1.0 } else { 0.0 };
                let row = l * dim;
                for &(idx, val) in feats {
                    let delta = eta * g * val;
                    weights[row + idx as usize] -= delta;
                    weights_u[row + idx as usize] += delta * step as f64;
                }
                bias[l] -= eta * g;
                bias_u[l] += eta * g * step as f64;
            }
        }
    }

    if step > 0 {
        let t = step as f64;
        for (w, u) in weights.iter_mut().zip(&weights_u) {
            *w = ((t + 1.0) * *w + *u) / t;
        }
        for (b, u) in bias.iter_mut().zip(&bias_u) {
            *b = ((t + 1.0) * *b + *u) / t;
        }
    }

    let mut model = LangIdModel {
        labels,
        min_n: config.min_n,
        max_n: config.max_n,
        dimension: dim,
        weights,
        bias,
        metadata: std::collections::BTreeMap::new(),
    };
    model
        .metadata
        .insert("seed".into(), config.seed.to_string());
    model
        .metadata
        .insert("epochs".into(), config.epochs.to_string());
    model
        .metadata
        .insert("learning_rate".into(), format!("{}", config.learning_rate));
    let train_acc = accuracy(&model, corpus);
    model
        .metadata
        .insert("train_accuracy".into(), format!("{train_acc:.6}"));
    if degenerate {
        model.metadata.insert(
            "warning".into(),
            "degenerate corpus: all labels carry identical texts".into(),
        );
    }
    Ok(model)
}

fn is_degenerate(corpus: &LabeledCorpus, labels: &[String]) -> bool {
    let mut per_label: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); labels.len()];
    for (text, label) in &corpus.examples {
        let li = labels.iter().position(|l| l == label).unwrap();
        per_label[li].insert(text.as_str());
    }
    per_label.windows(2).all(|w| w[0] == w[1])
}

impl LangIdModel {
    fn scores(&self, text: &str) -> Vec<f64> {
        let feats = features(text, self.min_n, self.max_n, self.dimension);
        (0..self.labels.len())
            .map(|l| {
                let row = l * self.dimension;
                let mut score = self.bias[l];
                for &(idx, val) in &feats {
                    score += self.weights[row + idx as usize] * val;
                }
                score
            })
            .collect()
    }
}

/// Predict the language of a line. Returns the argmax label (ties broken by
/// label order) and the per-label probability map, which sums to 1.
pub fn predict_line(
    model: &LangIdModel,
    text: &str,
) -> Result<(String, Vec<(String, f64)>), LangIdError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(LangIdError::EmptyInput);
    }
    let probs = softmax(&model.scores(&nfc(trimmed)));
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    let map = model
        .labels
        .iter()
        .cloned()
        .zip(probs.iter().cloned())
        .collect();
    Ok((model.labels[best].clone(), map))
}

/// Predict the language of a single token.
///
/// Tokens of at least [`TOKEN_FALLBACK_LEN`] characters are classified on
/// their own text; shorter tokens carry too few n-grams and inherit the
/// label of their context line.
pub fn predict_token(
    model: &LangIdModel,
    token: &str,
    context_line: &str,
) -> Result<String, LangIdError> {
    if token.trim().is_empty() {
        return Err(LangIdError::EmptyInput);
    }
    if token.chars().count() >= TOKEN_FALLBACK_LEN {
        Ok(predict_line(model, token)?.0)
    } else {
        Ok(predict_line(model, context_line)?.0)
    }
}

/// Fraction of corpus examples the model labels correctly.
pub fn accuracy(model: &LangIdModel, corpus: &LabeledCorpus) -> f64 {
    if corpus.examples.is_empty() {
        return 0.0;
    }
    let correct = corpus
        .examples
        .iter()
        .filter(|(text, label)| {
            predict_line(model, text)
                .map(|(l, _)| &l == label)
                .unwrap_or(false)
        })
        .count();
    correct as f64 / corpus.examples.len() as f64
}

// ---------------------------------------------------------------------------
// Model file format: JSON container with a dense little-endian f64 weight
// payload in base64. Round trips exactly.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    labels: Vec<String>,
    min_n: usize,
    max_n: usize,
    dimension: usize,
    hash: String,
    metadata: std::collections::BTreeMap<String, String>,
    bias: Vec<f64>,
    weights: String,
}

pub fn model_to_json(model: &LangIdModel) -> String {
    let mut bytes = Vec::with_capacity(model.weights.len() * 8);
    for w in &model.weights {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    let file = ModelFile {
        version: MODEL_VERSION,
        labels: model.labels.clone(),
        min_n: model.min_n,
        max_n: model.max_n,
        dimension: model.dimension,
        hash: HASH_ID.to_string(),
        metadata: model.metadata.clone(),
        bias: model.bias.clone(),
        weights: BASE64.encode(&bytes),
    };
    let mut s = serde_json::to_string(&file).expect("model serialization cannot fail");
    s.push('\n');
    s
}

pub fn model_from_json(json: &str) -> Result<LangIdModel, LangIdError> {
    let file: ModelFile =
        serde_json::from_str(json).map_err(|e| LangIdError::Parse(e.to_string()))?;
    if file.version != MODEL_VERSION {
        return Err(LangIdError::VersionMismatch {
            found: file.version,
            expected: MODEL_VERSION,
        });
    }
    if file.hash != HASH_ID {
        return Err(LangIdError::Parse(format!(
            "unsupported hash function {:?}",
            file.hash
        )));
    }
    let bytes = BASE64
        .decode(file.weights.as_bytes())
        .map_err(|e| LangIdError::Parse(format!("weight payload: {e}")))?;
    let expected = file.labels.len() * file.dimension * 8;
    if bytes.len() != expected {
        return Err(LangIdError::Parse(format!(
            "weight payload has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    if file.bias.len() != file.labels.len() {
        return Err(LangIdError::Parse("bias length mismatch".into()));
    }
    let weights: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if weights.iter().any(|w| !w.is_finite()) || file.bias.iter().any(|b| !b.is_finite()) {
        return Err(LangIdError::Parse("non-finite weights".into()));
    }
    Ok(LangIdModel {
        labels: file.labels,
        min_n: file.min_n,
        max_n: file.max_n,
        dimension: file.dimension,
        weights,
        bias: file.bias,
        metadata: file.metadata,
    })
}

pub fn save_model(model: &LangIdModel, path: impl AsRef<Path>) -> Result<(), LangIdError> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|e| LangIdError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LangIdModel, LangIdError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| LangIdError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    model_from_json(&data)
}
