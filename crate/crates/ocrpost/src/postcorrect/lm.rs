//! Character n-gram language model over NFC text, with add-k smoothing and
//! begin/end sentinels.
//!
//! Sentinels are the C0 control characters STX/ETX, which do not occur in
//! OCR'd text; contexts are stored as plain strings so the model serializes
//! to an ordinary JSON object.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PostCorrectError;
use crate::text::nfc;

const LM_VERSION: u32 = 1;
const LM_KIND: &str = "char-lm";

const BEGIN: char = '\u{2}';
const END: char = '\u{3}';

/// Default n-gram order.
pub const DEFAULT_LM_ORDER: usize = 5;
/// Default add-k smoothing constant for the language model.
pub const DEFAULT_LM_K: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct CharLM {
    order: usize,
    k: f64,
    vocab: BTreeSet<char>,
    /// context (order−1 symbols) -> next symbol (character or END) -> count
    counts: BTreeMap<String, BTreeMap<char, u64>>,
    // Derived, not serialized.
    totals: BTreeMap<String, u64>,
}

impl CharLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Context at the start of a line: order−1 begin sentinels.
    pub fn initial_context(&self) -> Vec<char> {
        vec![BEGIN; self.order - 1]
    }

    /// Slides `c` into a context produced by [`initial_context`].
    pub fn shift(&self, ctx: &mut [char], c: char) {
        if self.order > 1 {
            ctx.rotate_left(1);
            *ctx.last_mut().expect("context is order-1 long") = c;
        }
    }

    /// log P(next | ctx); `None` is the end-of-line event.
    ///
    /// The smoothed distribution is over vocabulary + end sentinel; an
    /// out-of-vocabulary character is scored with the zero-count mass.
    pub fn log_next(&self, ctx: &[char], next: Option<char>) -> f64 {
        let key: String = ctx.iter().collect();
        let symbol = next.unwrap_or(END);
        let count = self
            .counts
            .get(&key)
            .and_then(|m| m.get(&symbol))
            .copied()
            .unwrap_or(0);
        let total = self.totals.get(&key).copied().unwrap_or(0);
        let events = (self.vocab.len() + 1) as f64;
        let denom = total as f64 + self.k * events;
        if denom == 0.0 {
            // k = 0 and unseen context: fall back to a uniform guess.
            return -(events.ln());
        }
        ((count as f64 + self.k) / denom).ln()
    }

    /// log P(line), including the end-of-line event.
    pub fn log_line(&self, line: &str) -> f64 {
        let mut ctx = self.initial_context();
        let mut total = 0.0;
        for c in line.chars() {
            total += self.log_next(&ctx, Some(c));
            self.shift(&mut ctx, c);
        }
        total + self.log_next(&ctx, None)
    }

    fn finalize(&mut self) {
        self.totals = self
            .counts
            .iter()
            .map(|(ctx, nexts)| (ctx.clone(), nexts.values().sum()))
            .collect();
    }
}

/// Trains a character n-gram model on a corpus of lines.
pub fn train_lm(corpus: &[String], order: usize, k: f64) -> Result<CharLM, PostCorrectError> {
    if corpus.is_empty() {
        return Err(PostCorrectError::EmptyTrainingSet);
    }
    if order == 0 {
        return Err(PostCorrectError::InvalidConfig(
            "n-gram order must be at least 1".into(),
        ));
    }
    if !k.is_finite() || k < 0.0 {
        return Err(PostCorrectError::InvalidConfig(format!(
            "smoothing constant must be finite and non-negative, got {k}"
        )));
    }
    let mut model = CharLM {
        order,
        k,
        vocab: BTreeSet::new(),
        counts: BTreeMap::new(),
        totals: BTreeMap::new(),
    };
    for line in corpus {
        let line = nfc(line);
        let mut ctx = model.initial_context();
        for c in line.chars() {
            model.vocab.insert(c);
            let key: String = ctx.iter().collect();
            *model.counts.entry(key).or_default().entry(c).or_insert(0) += 1;
            model.shift(&mut ctx, c);
        }
        let key: String = ctx.iter().collect();
        *model.counts.entry(key).or_default().entry(END).or_insert(0) += 1;
    }
    model.finalize();
    Ok(model)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LmFile {
    version: u32,
    kind: String,
    order: usize,
    k: f64,
    vocab: BTreeSet<char>,
    counts: BTreeMap<String, BTreeMap<char, u64>>,
}

/// Serializes a language model to its versioned JSON container.
pub fn lm_to_json(model: &CharLM) -> String {
    let file = LmFile {
        version: LM_VERSION,
        kind: LM_KIND.into(),
        order: model.order,
        k: model.k,
        vocab: model.vocab.clone(),
        counts: model.counts.clone(),
    };
    let mut json = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    json.push('\n');
    json
}

pub fn lm_from_json(json: &str) -> Result<CharLM, PostCorrectError> {
    let file: LmFile =
        serde_json::from_str(json).map_err(|e| PostCorrectError::Parse(e.to_string()))?;
    if file.version != LM_VERSION {
        return Err(PostCorrectError::VersionMismatch {
            found: file.version,
            expected: LM_VERSION,
        });
    }
    if file.kind != LM_KIND {
        return Err(PostCorrectError::Parse(format!(
            "expected a {LM_KIND:?} file, found kind {:?}",
            file.kind
        )));
    }
    if file.order == 0 {
        return Err(PostCorrectError::Parse(
            "n-gram order must be at least 1".into(),
        ));
    }
    if !file.k.is_finite() || file.k < 0.0 {
        return Err(PostCorrectError::Parse(format!(
            "invalid smoothing constant {}",
            file.k
        )));
    }
    let mut model = CharLM {
        order: file.order,
        k: file.k,
        vocab: file.vocab,
        counts: file.counts,
        totals: BTreeMap::new(),
    };
    model.finalize();
    Ok(model)
}

pub fn save_lm(model: &CharLM, path: impl AsRef<Path>) -> Result<(), PostCorrectError> {
    let path = path.as_ref();
    std::fs::write(path, lm_to_json(model)).map_err(|e| PostCorrectError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_lm(path: impl AsRef<Path>) -> Result<CharLM, PostCorrectError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| PostCorrectError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    lm_from_json(&data)
}
