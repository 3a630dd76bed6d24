//! Canonical layout-aware document model shared by every pipeline stage.
//!
//! A [`Document`] is an ordered list of [`Page`]s holding [`Line`]s of
//! [`Token`]s. Token text is NFC-normalized and whitespace-free by
//! construction; line text is defined as the tokens joined by single spaces,
//! which keeps mask-index arithmetic unambiguous. Documents are immutable
//! values after load: stages build new documents instead of mutating.
//!
//! The on-disk format is UTF-8 JSON with a fixed field order and unknown
//! keys rejected, so serialized documents are byte-stable and diffable.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::text::nfc;

/// Axis-aligned bounding box in page-local pixel coordinates, origin top-left.
///
/// Serialized as the 4-element array `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox(pub i64, pub i64, pub i64, pub i64);

impl BBox {
    pub fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        BBox(x0, y0, x1, y1)
    }

    pub fn x0(&self) -> i64 {
        self.0
    }
    pub fn y0(&self) -> i64 {
        self.1
    }
    pub fn x1(&self) -> i64 {
        self.2
    }
    pub fn y1(&self) -> i64 {
        self.3
    }

    /// Horizontal center, used for column assignment.
    pub fn center_x(&self) -> f64 {
        (self.0 + self.2) as f64 / 2.0
    }

    pub fn is_well_formed(&self) -> bool {
        self.0 <= self.2 && self.1 <= self.3 && self.0 >= 0 && self.1 >= 0
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{}]", self.0, self.1, self.2, self.3)
    }
}

/// One whitespace-free token with optional geometry and language label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Token {
    pub text: String,
    pub bbox: Option<BBox>,
    pub lang: Option<String>,
    pub masked: bool,
}

impl Token {
    /// A bare token carrying only text.
    pub fn new(text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            bbox: None,
            lang: None,
            masked: false,
        }
    }
}

/// One line of tokens in reading order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub line_id: String,
    pub bbox: Option<BBox>,
    pub column: Option<u32>,
    pub tokens: Vec<Token>,
}

impl Line {
    pub fn new(line_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        Line {
            line_id: line_id.into(),
            bbox: None,
            column: None,
            tokens,
        }
    }

    /// Line text: token texts joined by single spaces.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.text);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Page {
    pub page_number: u32,
    pub width: Option<i64>,
    pub height: Option<i64>,
    pub lines: Vec<Line>,
}

impl Page {
    pub fn new(page_number: u32, lines: Vec<Line>) -> Self {
        Page {
            page_number,
            width: None,
            height: None,
            lines,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub source_id: String,
    pub metadata: BTreeMap<String, String>,
    pub pages: Vec<Page>,
}

impl Document {
    pub fn new(source_id: impl Into<String>) -> Self {
        Document {
            source_id: source_id.into(),
            metadata: BTreeMap::new(),
            pages: Vec::new(),
        }
    }
}

/// One invariant breach, carrying the path to the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Slash-separated path such as `pages[0]/lines[2]/tokens[1]`.
    pub path: String,
    /// Name of the violated rule.
    pub rule: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.path, self.rule, self.detail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("document violates invariants:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(vs: &[Violation]) -> String {
    vs.iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Check every type invariant, returning one entry per breach.
///
/// Violations are data, not errors: an empty list means the document is valid.
pub fn validate_document(doc: &Document) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut last_page_number: Option<u32> = None;
    for (pi, page) in doc.pages.iter().enumerate() {
        let ppath = format!("pages[{pi}]");
        if page.page_number == 0 {
            out.push(Violation {
                path: ppath.clone(),
                rule: "page_number_positive".into(),
                detail: "page_number must be >= 1".into(),
            });
        }
        if let Some(prev) = last_page_number {
            if page.page_number <= prev {
                out.push(Violation {
                    path: ppath.clone(),
                    rule: "page_number_strictly_increasing".into(),
                    detail: format!("page_number {} follows {}", page.page_number, prev),
                });
            }
        }
        last_page_number = Some(page.page_number);

        let mut seen_ids: BTreeMap<&str, usize> = BTreeMap::new();
        for (li, line) in page.lines.iter().enumerate() {
            let lpath = format!("{ppath}/lines[{li}]");
            if let Some(&first) = seen_ids.get(line.line_id.as_str()) {
                out.push(Violation {
                    path: lpath.clone(),
                    rule: "line_id_unique_within_page".into(),
                    detail: format!(
                        "line_id {:?} already used by {ppath}/lines[{first}]",
                        line.line_id
                    ),
                });
            } else {
                seen_ids.insert(line.line_id.as_str(), li);
            }
            if let Some(b) = &line.bbox {
                check_bbox(b, &lpath, &mut out);
            }
            for (ti, tok) in line.tokens.iter().enumerate() {
                let tpath = format!("{lpath}/tokens[{ti}]");
                if tok.text.is_empty() {
                    out.push(Violation {
                        path: tpath.clone(),
                        rule: "token_text_non_empty".into(),
                        detail: "token text is empty".into(),
                    });
                }
                if tok.text.chars().any(|c| c.is_whitespace()) {
                    out.push(Violation {
                        path: tpath.clone(),
                        rule: "token_text_no_whitespace".into(),
                        detail: format!("token text {:?} contains whitespace", tok.text),
                    });
                }
                if nfc(&tok.text) != tok.text {
                    out.push(Violation {
                        path: tpath.clone(),
                        rule: "token_text_nfc".into(),
                        detail: format!("token text {:?} is not NFC-normalized", tok.text),
                    });
                }
                if let Some(b) = &tok.bbox {
                    check_bbox(b, &tpath, &mut out);
                }
            }
        }
    }
    out
}

fn check_bbox(b: &BBox, path: &str, out: &mut Vec<Violation>) {
    if b.x0() > b.x1() || b.y0() > b.y1() {
        out.push(Violation {
            path: format!("{path}/bbox"),
            rule: "bbox_ordered".into(),
            detail: format!("bbox {b} must satisfy x0 <= x1 and y0 <= y1"),
        });
    }
    if b.x0() < 0 || b.y0() < 0 || b.x1() < 0 || b.y1() < 0 {
        out.push(Violation {
            path: format!("{path}/bbox"),
            rule: "bbox_nonnegative".into(),
            detail: format!("bbox {b} has negative coordinates"),
        });
    }
}

/// NFC-normalize every token text in place.
pub fn normalize_document(doc: &mut Document) {
    for page in &mut doc.pages {
        for line in &mut page.lines {
            for tok in &mut line.tokens {
                tok.text = nfc(&tok.text);
            }
        }
    }
}

/// Parse a canonical document from a JSON string, normalize, and validate.
pub fn parse_document(json: &str) -> Result<Document, DocError> {
    let mut doc: Document =
        serde_json::from_str(json).map_err(|e| DocError::Parse(e.to_string()))?;
    normalize_document(&mut doc);
    let violations = validate_document(&doc);
    if violations.is_empty() {
        Ok(doc)
    } else {
        Err(DocError::Validation(violations))
    }
}

/// Load a canonical document file; texts are NFC-normalized on the way in.
pub fn load_document(path: impl AsRef<Path>) -> Result<Document, DocError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| DocError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_document(&data)
}

/// Serialize a document to the canonical byte-stable JSON form.
pub fn document_to_json(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serialization cannot fail");
    s.push('\n');
    s
}

/// Save a document; `load_document(save_document(doc)) == doc`.
pub fn save_document(doc: &Document, path: impl AsRef<Path>) -> Result<(), DocError> {
    let path = path.as_ref();
    std::fs::write(path, document_to_json(doc)).map_err(|e| DocError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
