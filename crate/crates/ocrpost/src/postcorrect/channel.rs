//! Channel model: how observed OCR characters are produced from intended
//! text. Estimated from edit scripts of aligned line pairs.
//!
//! For every intended character the event space is {no-edit, substitution
//! to each other alphabet character, deletion}; probabilities are add-k
//! smoothed over it, so they sum to exactly 1. Characters never seen as
//! intended keep probability 1 on no-edit, which makes the untrained model
//! an identity channel. Insertions of observed characters form a separate
//! distribution over the alphabet.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::align::{align_pair, EditOp};
use super::{PostCorrectError, TrainingPair};

const CHANNEL_VERSION: u32 = 1;
const CHANNEL_KIND: &str = "channel-model";

/// Default add-k smoothing constant for the channel.
pub const DEFAULT_CHANNEL_K: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct ChannelModel {
    k: f64,
    noedit: BTreeMap<char, u64>,
    /// intended -> observed -> count
    subs: BTreeMap<char, BTreeMap<char, u64>>,
    /// intended characters the channel dropped
    dels: BTreeMap<char, u64>,
    /// observed characters the channel added
    ins: BTreeMap<char, u64>,
    // Derived at build time, not serialized.
    alphabet: BTreeSet<char>,
    totals: BTreeMap<char, u64>,
    ins_total: u64,
    subs_by_observed: BTreeMap<char, BTreeSet<char>>,
}

impl ChannelModel {
    /// A channel with no training events: every character maps to itself
    /// with probability 1.
    pub fn untrained(k: f64) -> Self {
        ChannelModel {
            k,
            noedit: BTreeMap::new(),
            subs: BTreeMap::new(),
            dels: BTreeMap::new(),
            ins: BTreeMap::new(),
            alphabet: BTreeSet::new(),
            totals: BTreeMap::new(),
            ins_total: 0,
            subs_by_observed: BTreeMap::new(),
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// True when no substitution, insertion, or deletion was ever observed,
    /// so the decoder can only reproduce its input.
    pub fn is_identity(&self) -> bool {
        self.subs.is_empty() && self.dels.is_empty() && self.ins.is_empty()
    }

    /// Every character seen in training, observed or intended.
    pub fn alphabet(&self) -> impl Iterator<Item = char> + '_ {
        self.alphabet.iter().copied()
    }

    /// Size of the smoothed event space for intended character `c`:
    /// no-edit, deletion, and substitution to each other alphabet character.
    fn event_count(&self, c: char) -> f64 {
        let others = self.alphabet.len() - usize::from(self.alphabet.contains(&c));
        (others + 2) as f64
    }

    fn smoothed(&self, count: u64, c: char) -> f64 {
        let n = self.totals.get(&c).copied().unwrap_or(0);
        ((count as f64 + self.k) / (n as f64 + self.k * self.event_count(c))).ln()
    }

    /// log P(no edit | intended c). 0 for characters never seen as intended.
    pub fn log_noedit(&self, c: char) -> f64 {
        if self.totals.get(&c).copied().unwrap_or(0) == 0 {
            return 0.0;
        }
        self.smoothed(self.noedit.get(&c).copied().unwrap_or(0), c)
    }

    /// log P(observed | intended), for observed ≠ intended.
    pub fn log_sub(&self, observed: char, intended: char) -> f64 {
        debug_assert_ne!(observed, intended, "use log_noedit for matches");
        if self.totals.get(&intended).copied().unwrap_or(0) == 0 {
            return f64::NEG_INFINITY;
        }
        let count = self
            .subs
            .get(&intended)
            .and_then(|m| m.get(&observed))
            .copied()
            .unwrap_or(0);
        self.smoothed(count, intended)
    }

    /// log P(intended c deleted by the channel).
    pub fn log_del(&self, c: char) -> f64 {
        if self.totals.get(&c).copied().unwrap_or(0) == 0 {
            return f64::NEG_INFINITY;
        }
        self.smoothed(self.dels.get(&c).copied().unwrap_or(0), c)
    }

    /// log P(channel inserted observed o). −∞ if no insertion was ever seen.
    pub fn log_ins(&self, o: char) -> f64 {
        if self.ins_total == 0 {
            return f64::NEG_INFINITY;
        }
        let count = self.ins.get(&o).copied().unwrap_or(0);
        ((count as f64 + self.k) / (self.ins_total as f64 + self.k * self.alphabet.len() as f64))
            .ln()
    }

    /// Intended characters seen substituted by observed `o` in training.
    pub fn intended_for_observed(&self, o: char) -> impl Iterator<Item = char> + '_ {
        self.subs_by_observed
            .get(&o)
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    /// Whether observed `o` was ever a channel insertion (so the decoder may
    /// drop it).
    pub fn can_drop(&self, o: char) -> bool {
        self.ins.get(&o).copied().unwrap_or(0) > 0
    }

    /// Intended characters seen deleted in training (so the decoder may add
    /// them back).
    pub fn addable(&self) -> impl Iterator<Item = char> + '_ {
        self.dels.keys().copied()
    }

    /// Rebuilds the derived indexes after counts change.
    fn finalize(&mut self) {
        self.alphabet.clear();
        self.alphabet.extend(self.noedit.keys());
        for (intended, observed) in &self.subs {
            self.alphabet.insert(*intended);
            self.alphabet.extend(observed.keys());
        }
        self.alphabet.extend(self.dels.keys());
        self.alphabet.extend(self.ins.keys());

        self.totals.clear();
        for (&c, &n) in &self.noedit {
            *self.totals.entry(c).or_insert(0) += n;
        }
        for (&c, observed) in &self.subs {
            *self.totals.entry(c).or_insert(0) += observed.values().sum::<u64>();
        }
        for (&c, &n) in &self.dels {
            *self.totals.entry(c).or_insert(0) += n;
        }
        self.ins_total = self.ins.values().sum();

        self.subs_by_observed.clear();
        for (&intended, observed) in &self.subs {
            for &o in observed.keys() {
                self.subs_by_observed.entry(o).or_default().insert(intended);
            }
        }
    }
}

/// Estimates a channel model from aligned training pairs.
pub fn train_channel(pairs: &[TrainingPair], k: f64) -> Result<ChannelModel, PostCorrectError> {
    if pairs.is_empty() {
        return Err(PostCorrectError::EmptyTrainingSet);
    }
    if !k.is_finite() || k < 0.0 {
        return Err(PostCorrectError::InvalidConfig(format!(
            "smoothing constant must be finite and non-negative, got {k}"
        )));
    }
    let mut model = ChannelModel::untrained(k);
    for pair in pairs {
        for op in align_pair(&pair.src, &pair.reference) {
            match op {
                EditOp::Keep(c) => *model.noedit.entry(c).or_insert(0) += 1,
                EditOp::Substitute { from, to } => {
                    *model.subs.entry(to).or_default().entry(from).or_insert(0) += 1;
                }
                // Reference char missing from the source: the channel
                // deleted it; source char missing from the reference: the
                // channel inserted it.
                EditOp::Insert(c) => *model.dels.entry(c).or_insert(0) += 1,
                EditOp::Delete(c) => *model.ins.entry(c).or_insert(0) += 1,
            }
        }
    }
    model.finalize();
    Ok(model)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    version: u32,
    kind: String,
    k: f64,
    noedit: BTreeMap<char, u64>,
    substitutions: BTreeMap<char, BTreeMap<char, u64>>,
    deletions: BTreeMap<char, u64>,
    insertions: BTreeMap<char, u64>,
}

/// Serializes a channel model to its versioned JSON container.
pub fn channel_to_json(model: &ChannelModel) -> String {
    let file = ChannelFile {
        version: CHANNEL_VERSION,
        kind: CHANNEL_KIND.into(),
        k: model.k,
        noedit: model.noedit.clone(),
        substitutions: model.subs.clone(),
        deletions: model.dels.clone(),
        insertions: model.ins.clone(),
    };
    let mut json = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    json.push('\n');
    json
}

pub fn channel_from_json(json: &str) -> Result<ChannelModel, PostCorrectError> {
    let file: ChannelFile =
        serde_json::from_str(json).map_err(|e| PostCorrectError::Parse(e.to_string()))?;
    if file.version != CHANNEL_VERSION {
        return Err(PostCorrectError::VersionMismatch {
            found: file.version,
            expected: CHANNEL_VERSION,
        });
    }
    if file.kind != CHANNEL_KIND {
        return Err(PostCorrectError::Parse(format!(
            "expected a {CHANNEL_KIND:?} file, found kind {:?}",
            file.kind
        )));
    }
    if !file.k.is_finite() || file.k < 0.0 {
        return Err(PostCorrectError::Parse(format!(
            "invalid smoothing constant {}",
            file.k
        )));
    }
    let mut model = ChannelModel::untrained(file.k);
    model.noedit = file.noedit;
    model.subs = file.substitutions;
    model.dels = file.deletions;
    model.ins = file.insertions;
    model.finalize();
    Ok(model)
}

pub fn save_channel(model: &ChannelModel, path: impl AsRef<Path>) -> Result<(), PostCorrectError> {
    let path = path.as_ref();
    std::fs::write(path, channel_to_json(model)).map_err(|e| PostCorrectError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelModel, PostCorrectError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| PostCorrectError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    channel_from_json(&data)
}
