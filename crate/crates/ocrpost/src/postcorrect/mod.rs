//! Character-level post-correction of OCR output.
//!
//! Corrections come from a noisy-channel model: a character n-gram language
//! model scores candidate intended strings, and a channel model trained on
//! aligned first-pass/gold line pairs scores how the observed line could
//! have been produced from them. A beam decoder searches for the candidate
//! maximizing `log P_lm(candidate) + λ · log P_channel(observed | candidate)`.
//! Alternatively, lines can be piped through an external corrector process.

mod align;
mod channel;
mod decode;
mod external;
mod lm;

pub use align::{align_pair, apply_script, EditOp};
pub use channel::{
    channel_from_json, channel_to_json, load_channel, save_channel, train_channel, ChannelModel,
    DEFAULT_CHANNEL_K,
};
pub use decode::{correct_line, correct_line_scored, BeamConfig};
pub use external::{correct_external, ExternalCommand};
pub use lm::{
    lm_from_json, lm_to_json, load_lm, save_lm, train_lm, CharLM, DEFAULT_LM_K, DEFAULT_LM_ORDER,
};

use std::path::Path;

use crate::docmodel::{Document, Token};
use crate::text::nfc;

#[derive(Debug, thiserror::Error)]
pub enum PostCorrectError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("model file version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("external corrector failed: {0}")]
    ProcessFailure(String),
    #[error("external corrector wrote {got} lines for {expected} input lines")]
    ProtocolError { expected: usize, got: usize },
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One supervised example: a first-pass OCR line and its gold transcription.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub src: String,
    pub reference: String,
}

impl TrainingPair {
    /// Builds a pair, NFC-normalizing both sides.
    pub fn new(src: &str, reference: &str) -> Result<Self, PostCorrectError> {
        let reference = nfc(reference);
        if reference.is_empty() {
            return Err(PostCorrectError::Parse(
                "training pair has an empty reference".into(),
            ));
        }
        Ok(TrainingPair {
            src: nfc(src),
            reference,
        })
    }
}

/// Parses training pairs from TSV text, one `src<TAB>ref` pair per line.
///
/// Blank lines are skipped; the source is everything before the first tab.
pub fn parse_pairs(data: &str) -> Result<Vec<TrainingPair>, PostCorrectError> {
    let mut pairs = Vec::new();
    for (i, line) in data.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (src, reference) = line.split_once('\t').ok_or_else(|| {
            PostCorrectError::Parse(format!("pairs line {}: missing tab separator", i + 1))
        })?;
        let pair = TrainingPair::new(src, reference)
            .map_err(|e| PostCorrectError::Parse(format!("pairs line {}: {e}", i + 1)))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<TrainingPair>, PostCorrectError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| PostCorrectError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_pairs(&data)
}

/// Every line's text (token texts joined by single spaces) in document
/// order: pages as stored, lines within each page as stored.
pub fn document_lines(doc: &Document) -> Vec<String> {
    doc.pages
        .iter()
        .flat_map(|p| p.lines.iter().map(|l| l.text()))
        .collect()
}

/// Rebuilds a document from per-line corrected text, in document order.
///
/// `corrected` must hold exactly one string per line of `doc`. Each string
/// is split on whitespace into tokens (an empty string yields an empty
/// line). When the token count matches the original line, each token keeps
/// its geometry and language label and only the text is replaced; when the
/// corrector merged or split tokens, plain text-only tokens are emitted
/// instead. Token texts are NFC-normalized.
pub fn apply_corrections(
    doc: &Document,
    corrected: &[String],
) -> Result<Document, PostCorrectError> {
    let expected: usize = doc.pages.iter().map(|p| p.lines.len()).sum();
    if corrected.len() != expected {
        return Err(PostCorrectError::ProtocolError {
            expected,
            got: corrected.len(),
        });
    }
    let mut out = doc.clone();
    let mut it = corrected.iter();
    for page in &mut out.pages {
        for line in &mut page.lines {
            let texts: Vec<String> = it
                .next()
                .expect("length checked above")
                .split_whitespace()
                .map(nfc)
                .collect();
            if texts.len() == line.tokens.len() {
                for (tok, text) in line.tokens.iter_mut().zip(texts) {
                    tok.text = text;
                }
            } else {
                line.tokens = texts.into_iter().map(Token::new).collect();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tab_separated_pairs() {
        let pairs = parse_pairs("abd\tabc\n\nx\ty z\n").unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].src, "abd");
        assert_eq!(pairs[0].reference, "abc");
        assert_eq!(pairs[1].reference, "y z");
    }

    #[test]
    fn rejects_missing_tab_and_empty_reference() {
        assert!(matches!(
            parse_pairs("no separator here"),
            Err(PostCorrectError::Parse(_))
        ));
        assert!(matches!(
            parse_pairs("src\t"),
            Err(PostCorrectError::Parse(_))
        ));
    }

    #[test]
    fn normalizes_pairs_to_nfc() {
        // "e" + combining acute composes to a single char.
        let pairs = parse_pairs("e\u{301}x\te\u{301}y").unwrap();
        assert_eq!(pairs[0].src, "\u{e9}x");
        assert_eq!(pairs[0].reference, "\u{e9}y");
    }

    fn two_page_doc() -> Document {
        use crate::docmodel::{BBox, Line, Page};
        let mut doc = Document::new("d");
        let tok = |text: &str, x: i64| {
            let mut t = Token::new(text);
            t.bbox = Some(BBox::new(x, 0, x + 10, 12));
            t.lang = Some("kwa".into());
            t
        };
        doc.pages = vec![
            Page::new(
                1,
                vec![
                    Line::new("p1_l0", vec![tok("foo", 0), tok("bar", 20)]),
                    Line::new("p1_l1", vec![]),
                ],
            ),
            Page::new(2, vec![Line::new("p2_l0", vec![tok("baz", 0)])]),
        ];
        doc
    }

    #[test]
    fn document_lines_walks_pages_in_order() {
        let doc = two_page_doc();
        assert_eq!(document_lines(&doc), vec!["foo bar", "", "baz"]);
    }

    #[test]
    fn identity_corrections_reproduce_the_document_exactly() {
        let doc = two_page_doc();
        let out = apply_corrections(&doc, &document_lines(&doc)).unwrap();
        assert_eq!(
            crate::docmodel::document_to_json(&out),
            crate::docmodel::document_to_json(&doc)
        );
    }

    #[test]
    fn count_preserving_corrections_keep_geometry_and_labels() {
        let doc = two_page_doc();
        let corrected = vec!["fou bor".to_string(), String::new(), "buz".to_string()];
        let out = apply_corrections(&doc, &corrected).unwrap();
        let line = &out.pages[0].lines[0];
        assert_eq!(line.text(), "fou bor");
        assert_eq!(line.tokens[0].bbox, doc.pages[0].lines[0].tokens[0].bbox);
        assert_eq!(line.tokens[1].lang.as_deref(), Some("kwa"));
    }

    #[test]
    fn count_changing_corrections_drop_geometry() {
        let doc = two_page_doc();
        let corrected = vec!["foobar".to_string(), String::new(), "ba z".to_string()];
        let out = apply_corrections(&doc, &corrected).unwrap();
        let merged = &out.pages[0].lines[0];
        assert_eq!(merged.tokens.len(), 1);
        assert_eq!(merged.tokens[0].bbox, None);
        assert_eq!(merged.tokens[0].lang, None);
        let split = &out.pages[1].lines[0];
        assert_eq!(split.tokens.len(), 2);
        assert_eq!(split.tokens[1].text, "z");
    }

    #[test]
    fn wrong_line_count_is_a_protocol_error() {
        let doc = two_page_doc();
        let err = apply_corrections(&doc, &["only one".to_string()]).unwrap_err();
        assert!(matches!(
            err,
            PostCorrectError::ProtocolError {
                expected: 3,
                got: 1
            }
        ));
    }
}
