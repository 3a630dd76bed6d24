//! Deterministic transliteration between orthographies by ordered
//! longest-match grapheme rewrite rules.
//!
//! The engine is one left-to-right pass: at each position the matching rule
//! with the longest source wins, its target is emitted, and scanning resumes
//! after the matched source. Rule targets are never re-scanned, so rewrites
//! cannot cascade. Rule content lives in data files; this module knows
//! nothing about any particular orthography.

use std::collections::BTreeSet;
use std::path::Path;

use crate::docmodel::Document;
use crate::text::nfc;

#[derive(Debug, thiserror::Error)]
pub enum TranslitError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("line {line}: duplicate rule source {rule:?}")]
    DuplicateSource { rule: String, line: usize },
    #[error("rule target for {rule:?} contains whitespace; cannot apply within tokens")]
    WhitespaceInTarget { rule: String },
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One rewrite: `source` (non-empty) becomes `target` (may be empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub source: String,
    pub target: String,
}

/// An ordered rule set mapping one orthography to another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    pub name: String,
    pub source_orthography: String,
    pub target_orthography: String,
    rules: Vec<Rule>,
    /// Rule indexes sorted longest-source-first (ties by table order).
    by_length: Vec<usize>,
}

impl RuleTable {
    /// Builds a table, NFC-normalizing every rule. Sources must be unique
    /// and non-empty.
    pub fn new(
        name: impl Into<String>,
        source_orthography: impl Into<String>,
        target_orthography: impl Into<String>,
        rules: Vec<Rule>,
    ) -> Result<Self, TranslitError> {
        let rules: Vec<Rule> = rules
            .into_iter()
            .map(|r| Rule {
                source: nfc(&r.source),
                target: nfc(&r.target),
            })
            .collect();
        let mut seen = BTreeSet::new();
        for (i, rule) in rules.iter().enumerate() {
            if rule.source.is_empty() {
                return Err(TranslitError::Parse(format!(
                    "rule {} has an empty source",
                    i + 1
                )));
            }
            if !seen.insert(rule.source.clone()) {
                return Err(TranslitError::DuplicateSource {
                    rule: rule.source.clone(),
                    line: i + 1,
                });
            }
        }
        let mut by_length: Vec<usize> = (0..rules.len()).collect();
        by_length.sort_by_key(|&i| (std::cmp::Reverse(rules[i].source.len()), i));
        Ok(RuleTable {
            name: name.into(),
            source_orthography: source_orthography.into(),
            target_orthography: target_orthography.into(),
            rules,
            by_length,
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Parses a rule table from TSV text.
///
/// Lines starting with `#` are comments; one must be a header of the form
/// `#orthography: <src> -> <dst>` before the first rule. Each rule line is
/// `source<TAB>target`, where the target may be empty (a deletion rule).
pub fn parse_rules(name: &str, data: &str) -> Result<RuleTable, TranslitError> {
    let mut labels: Option<(String, String)> = None;
    let mut rules = Vec::new();
    let mut rule_lines = Vec::new();
    for (i, raw) in data.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(comment) = raw.strip_prefix('#') {
            if let Some(decl) = comment.trim_start().strip_prefix("orthography:") {
                let (src, dst) = decl.split_once("->").ok_or_else(|| {
                    TranslitError::Parse(format!(
                        "line {line_no}: orthography header must be \"<src> -> <dst>\""
                    ))
                })?;
                labels = Some((src.trim().to_string(), dst.trim().to_string()));
            }
            continue;
        }
        if labels.is_none() {
            return Err(TranslitError::Parse(format!(
                "line {line_no}: rule before the \"#orthography: <src> -> <dst>\" header"
            )));
        }
        let (source, target) = raw.split_once('\t').ok_or_else(|| {
            TranslitError::Parse(format!("line {line_no}: missing tab separator"))
        })?;
        rules.push(Rule {
            source: source.to_string(),
            target: target.to_string(),
        });
        rule_lines.push(line_no);
    }
    let (src, dst) = labels.ok_or_else(|| {
        TranslitError::Parse("missing \"#orthography: <src> -> <dst>\" header".into())
    })?;
    RuleTable::new(name, src, dst, rules).map_err(|e| match e {
        // Map the rule index back to its line in the file.
        TranslitError::DuplicateSource { rule, line } => TranslitError::DuplicateSource {
            rule,
            line: rule_lines[line - 1],
        },
        other => other,
    })
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<RuleTable, TranslitError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| TranslitError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_rules(&name, &data)
}

/// Rewrites `text` through the table in a single non-cascading pass and
/// returns the NFC-normalized result.
pub fn transliterate(text: &str, table: &RuleTable) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    'scan: while !rest.is_empty() {
        for &i in &table.by_length {
            let rule = &table.rules[i];
            if let Some(after) = rest.strip_prefix(rule.source.as_str()) {
                out.push_str(&rule.target);
                rest = after;
                continue 'scan;
            }
        }
        let c = rest.chars().next().expect("rest is non-empty");
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    nfc(&out)
}

/// Transliterates every unmasked token of a document.
///
/// Tokens flagged `masked` (reconstructed non-target-language material) pass
/// through untouched. Tokens whose text is rewritten to nothing are dropped.
/// Errors up front if any rule target contains whitespace, which could not
/// be represented inside a token.
pub fn transliterate_document(
    doc: &Document,
    table: &RuleTable,
) -> Result<Document, TranslitError> {
    if let Some(rule) = table
        .rules
        .iter()
        .find(|r| r.target.chars().any(char::is_whitespace))
    {
        return Err(TranslitError::WhitespaceInTarget {
            rule: rule.source.clone(),
        });
    }
    let mut out = doc.clone();
    for page in &mut out.pages {
        for line in &mut page.lines {
            line.tokens.retain_mut(|tok| {
                if tok.masked {
                    return true;
                }
                tok.text = transliterate(&tok.text, table);
                !tok.text.is_empty()
            });
        }
    }
    Ok(out)
}
