//! Masking of non-target-language tokens, numerals, and configured
//! punctuation, with a sidecar that records the original index and text of
//! every masked token so lines can be reconstructed exactly after
//! correction.
//!
//! The sidecar stores only (index, text). Bounding boxes and language labels
//! of masked tokens are carried through the masked document's metadata so a
//! mask/unmask round trip restores them; reinserted tokens are flagged
//! `masked` so later stages (transliteration) can skip them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::docmodel::{BBox, Document, Line, Token};
use crate::text::nfc;

/// Metadata key under which the masked document carries bbox/lang of masked
/// tokens for restoration at unmask time.
const RESTORE_KEY: &str = "maskio_restore";

#[derive(Debug, thiserror::Error)]
pub enum MaskError {
    #[error("line {line_id}: {got} labels for {expected} tokens")]
    LabelMismatch {
        line_id: String,
        expected: usize,
        got: usize,
    },
    #[error("target language {0:?} is also listed in mask_langs")]
    TargetMasked(String),
    #[error("no sidecar record for page {page}, line {line_id}")]
    MissingRecord { page: u32, line_id: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which tokens to mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPolicy {
    /// Language kept for correction.
    pub target_lang: String,
    /// Languages whose tokens are masked.
    pub mask_langs: BTreeSet<String>,
    /// Mask tokens made entirely of numeric characters (margin line numbers).
    pub mask_numerals: bool,
    /// Exact token texts to mask regardless of label.
    pub mask_punct: BTreeSet<String>,
}

impl MaskPolicy {
    pub fn new(
        target_lang: impl Into<String>,
        mask_langs: impl IntoIterator<Item = String>,
    ) -> Result<Self, MaskError> {
        let target_lang = target_lang.into();
        let mask_langs: BTreeSet<String> = mask_langs.into_iter().collect();
        if mask_langs.contains(&target_lang) {
            return Err(MaskError::TargetMasked(target_lang));
        }
        Ok(MaskPolicy {
            target_lang,
            mask_langs,
            mask_numerals: true,
            mask_punct: ["(", ")"].iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Policy decision for one token.
    pub fn should_mask(&self, text: &str, label: Option<&str>) -> bool {
        if let Some(l) = label {
            if self.mask_langs.contains(l) {
                return true;
            }
        }
        if self.mask_numerals && !text.is_empty() && text.chars().all(|c| c.is_numeric()) {
            return true;
        }
        self.mask_punct.contains(text)
    }
}

/// One masked token: original position and text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskedToken {
    pub i: usize,
    pub t: String,
}

/// Per-line record of what was masked, keyed by (page, line_id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskRecord {
    pub page: u32,
    pub line_id: String,
    pub kept_count: usize,
    pub masked: Vec<MaskedToken>,
}

impl MaskRecord {
    fn validate(&self) -> Result<(), MaskError> {
        let total = self.kept_count + self.masked.len();
        let mut prev: Option<usize> = None;
        for m in &self.masked {
            if m.i >= total {
                return Err(MaskError::Parse(format!(
                    "record {}[{}]: index {} out of range (total {total})",
                    self.line_id, self.page, m.i
                )));
            }
            if prev.is_some_and(|p| m.i <= p) {
                return Err(MaskError::Parse(format!(
                    "record {}[{}]: indices not strictly increasing",
                    self.line_id, self.page
                )));
            }
            prev = Some(m.i);
        }
        Ok(())
    }
}

/// The sidecar: one record per line, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sidecar {
    pub records: Vec<MaskRecord>,
}

impl Sidecar {
    pub fn get(&self, page: u32, line_id: &str) -> Option<&MaskRecord> {
        self.records
            .iter()
            .find(|r| r.page == page && r.line_id == line_id)
    }

    /// Serialize as UTF-8 JSON Lines.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialization cannot fail"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(data: &str) -> Result<Self, MaskError> {
        let mut records = Vec::new();
        let mut seen: BTreeSet<(u32, String)> = BTreeSet::new();
        for (i, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut record: MaskRecord = serde_json::from_str(line)
                .map_err(|e| MaskError::Parse(format!("sidecar line {}: {e}", i + 1)))?;
            for m in &mut record.masked {
                m.t = nfc(&m.t);
            }
            record.validate()?;
            if !seen.insert((record.page, record.line_id.clone())) {
                return Err(MaskError::Parse(format!(
                    "sidecar line {}: duplicate record for page {} line {:?}",
                    i + 1,
                    record.page,
                    record.line_id
                )));
            }
            records.push(record);
        }
        Ok(Sidecar { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MaskError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| MaskError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MaskError> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| MaskError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_jsonl(&data)
    }
}

/// Emitted when a corrector changed the kept token count of a line and the
/// masked tokens were reinserted at clamped indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenCountDrift {
    pub page: u32,
    pub line_id: String,
    pub expected_kept: usize,
    pub actual_kept: usize,
}

/// Mask one line.
///
/// A token is masked exactly when its label is in `mask_langs`, or it is
/// all-numeric under `mask_numerals`, or its text is in `mask_punct`. The
/// kept text is the space-join of the surviving tokens.
pub fn mask_line(
    page: u32,
    line: &Line,
    labels: &[Option<&str>],
    policy: &MaskPolicy,
) -> Result<(String, MaskRecord), MaskError> {
    if labels.len() != line.tokens.len() {
        return Err(MaskError::LabelMismatch {
            line_id: line.line_id.clone(),
            expected: line.tokens.len(),
            got: labels.len(),
        });
    }
    let mut kept = Vec::new();
    let mut masked = Vec::new();
    for (i, (tok, label)) in line.tokens.iter().zip(labels).enumerate() {
        if policy.should_mask(&tok.text, *label) {
            masked.push(MaskedToken {
                i,
                t: tok.text.clone(),
            });
        } else {
            kept.push(tok.text.as_str());
        }
    }
    let record = MaskRecord {
        page,
        line_id: line.line_id.clone(),
        kept_count: kept.len(),
        masked,
    };
    Ok((kept.join(" "), record))
}

/// Rebuild a line's token texts from corrected kept text plus its record.
///
/// When the corrected kept token count matches the record, every masked
/// token returns to its original index. When the corrector changed the
/// count, masked tokens are inserted in their stored order at indices
/// clamped to the growing sequence, and a [`TokenCountDrift`] is reported.
pub fn unmask_line(
    corrected_kept: &str,
    record: &MaskRecord,
) -> (Vec<String>, Option<TokenCountDrift>) {
    let mut tokens: Vec<String> = corrected_kept
        .split_whitespace()
        .map(|s| s.to_string())
        .collect();
    let drift = if tokens.len() == record.kept_count {
        None
    } else {
        Some(TokenCountDrift {
            page: record.page,
            line_id: record.line_id.clone(),
            expected_kept: record.kept_count,
            actual_kept: tokens.len(),
        })
    };
    // Indices are strictly increasing, so inserting in order lands each
    // masked token at its original position when there was no drift.
    for m in &record.masked {
        let at = m.i.min(tokens.len());
        tokens.insert(at, m.t.clone());
    }
    (tokens, drift)
}

/// Set each token's `masked` flag to the policy decision, without removing
/// anything. Masking a document annotated this way round-trips exactly.
pub fn annotate_mask_flags(doc: &Document, policy: &MaskPolicy) -> Document {
    let mut out = doc.clone();
    for page in &mut out.pages {
        for line in &mut page.lines {
            for tok in &mut line.tokens {
                tok.masked = policy.should_mask(&tok.text, tok.lang.as_deref());
            }
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct RestoreEntry {
    bbox: Option<BBox>,
    lang: Option<String>,
}

/// Mask a whole document using each token's `lang` label.
///
/// Lines keep only unmasked tokens (an all-masked line survives as an empty
/// line so ordering and indices stay intact). The sidecar gets one record
/// per line in document order; bbox/lang of masked tokens ride along in the
/// masked document's metadata for restoration.
pub fn mask_document(
    doc: &Document,
    policy: &MaskPolicy,
) -> Result<(Document, Sidecar), MaskError> {
    let mut masked_doc = doc.clone();
    let mut sidecar = Sidecar::default();
    let mut restore: BTreeMap<String, Vec<RestoreEntry>> = BTreeMap::new();
    for page in &mut masked_doc.pages {
        for line in &mut page.lines {
            let mut kept = Vec::new();
            let mut masked = Vec::new();
            let mut entries = Vec::new();
            for (i, tok) in line.tokens.iter().enumerate() {
                if policy.should_mask(&tok.text, tok.lang.as_deref()) {
                    masked.push(MaskedToken {
                        i,
                        t: tok.text.clone(),
                    });
                    entries.push(RestoreEntry {
                        bbox: tok.bbox,
                        lang: tok.lang.clone(),
                    });
                } else {
                    kept.push(tok.clone());
                }
            }
            sidecar.records.push(MaskRecord {
                page: page.page_number,
                line_id: line.line_id.clone(),
                kept_count: kept.len(),
                masked,
            });
            if entries.iter().any(|e| e.bbox.is_some() || e.lang.is_some()) {
                restore.insert(format!("{}/{}", page.page_number, line.line_id), entries);
            }
            line.tokens = kept;
        }
    }
    if !restore.is_empty() {
        masked_doc.metadata.insert(
            RESTORE_KEY.into(),
            serde_json::to_string(&restore).expect("restore map serialization cannot fail"),
        );
    }
    Ok((masked_doc, sidecar))
}

/// Reinsert masked tokens into a corrected document.
///
/// Every line of the corrected document must have a sidecar record.
/// Reinserted tokens are flagged `masked`; their bbox/lang are restored when
/// the masked document's metadata carried them.
pub fn unmask_document(
    corrected: &Document,
    sidecar: &Sidecar,
) -> Result<(Document, Vec<TokenCountDrift>), MaskError> {
    let restore: BTreeMap<String, Vec<RestoreEntry>> = match corrected.metadata.get(RESTORE_KEY) {
        Some(json) => serde_json::from_str(json)
            .map_err(|e| MaskError::Parse(format!("{RESTORE_KEY} metadata: {e}")))?,
        None => BTreeMap::new(),
    };
    let mut out = corrected.clone();
    out.metadata.remove(RESTORE_KEY);
    let mut drifts = Vec::new();
    for page in &mut out.pages {
        for line in &mut page.lines {
            let record = sidecar
                .get(page.page_number, &line.line_id)
                .ok_or_else(|| MaskError::MissingRecord {
                    page: page.page_number,
                    line_id: line.line_id.clone(),
                })?;
            let entries = restore.get(&format!("{}/{}", page.page_number, line.line_id));
            let kept = std::mem::take(&mut line.tokens);
            if kept.len() != record.kept_count {
                drifts.push(TokenCountDrift {
                    page: record.page,
                    line_id: record.line_id.clone(),
                    expected_kept: record.kept_count,
                    actual_kept: kept.len(),
                });
            }
            let mut tokens = kept;
            for (j, m) in record.masked.iter().enumerate() {
                let entry = entries.and_then(|es| es.get(j));
                let tok = Token {
                    text: m.t.clone(),
                    bbox: entry.and_then(|e| e.bbox),
                    lang: entry.and_then(|e| e.lang.clone()),
                    masked: true,
                };
                let at = m.i.min(tokens.len());
                tokens.insert(at, tok);
            }
            line.tokens = tokens;
        }
    }
    Ok((out, drifts))
}
