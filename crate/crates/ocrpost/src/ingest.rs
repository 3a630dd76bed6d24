//! Ingestion of first-pass OCR engine output into the canonical document,
//! plus geometry-based column detection and reading-order repair.
//!
//! The vendor adapter consumes the cloud OCR engine's structured JSON
//! response (document → pages → blocks → paragraphs → words, each word with
//! a bounding polygon). Only the axis-aligned extrema of the polygons are
//! used. Vendor line segmentation is trusted: each paragraph becomes one
//! canonical line, and lines are never merged or split.

use std::path::Path;

use serde::Deserialize;

use crate::docmodel::{BBox, Document, Line, Page, Token};
use crate::text::nfc;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Vendor OCR response shape.
//
// Unknown keys are deliberately tolerated here (vendor responses carry
// confidences, detected languages, break hints, ...). Accepts either a bare
// annotation, an annotation under "fullTextAnnotation", or the batched
// {"responses": [...]} wrapper.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct VendorVertex {
    #[serde(default)]
    x: i64,
    #[serde(default)]
    y: i64,
}

#[derive(Debug, Deserialize)]
struct VendorPoly {
    #[serde(default)]
    vertices: Vec<VendorVertex>,
}

#[derive(Debug, Deserialize)]
struct VendorSymbol {
    text: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct VendorWord {
    bounding_box: Option<VendorPoly>,
    #[serde(default)]
    symbols: Vec<VendorSymbol>,
    /// Some producers emit word text directly instead of per-symbol.
    text: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct VendorParagraph {
    bounding_box: Option<VendorPoly>,
    #[serde(default)]
    words: Vec<VendorWord>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct VendorBlock {
    #[serde(default)]
    paragraphs: Vec<VendorParagraph>,
}

#[derive(Debug, Deserialize)]
struct VendorPage {
    width: Option<i64>,
    height: Option<i64>,
    #[serde(default)]
    blocks: Vec<VendorBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct VendorAnnotation {
    #[serde(default)]
    pages: Vec<VendorPage>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct VendorResponse {
    full_text_annotation: Option<VendorAnnotation>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct VendorEnvelope {
    responses: Option<Vec<VendorResponse>>,
    full_text_annotation: Option<VendorAnnotation>,
    pages: Option<Vec<VendorPage>>,
}

fn poly_to_bbox(poly: &VendorPoly) -> Option<BBox> {
    let xs: Vec<i64> = poly.vertices.iter().map(|v| v.x).collect();
    let ys: Vec<i64> = poly.vertices.iter().map(|v| v.y).collect();
    let x0 = *xs.iter().min()?;
    let x1 = *xs.iter().max()?;
    let y0 = *ys.iter().min()?;
    let y1 = *ys.iter().max()?;
    Some(BBox::new(x0.max(0), y0.max(0), x1.max(0), y1.max(0)))
}

fn word_text(word: &VendorWord) -> String {
    match &word.text {
        Some(t) => t.clone(),
        None => word.symbols.iter().map(|s| s.text.as_str()).collect(),
    }
}

/// Convert a vendor OCR response file into a canonical document.
///
/// Lines preserve the vendor's paragraph grouping; token and line bboxes are
/// the axis-aligned extrema of the vendor polygons; all text is
/// NFC-normalized. Pages without any text are kept and recorded as an
/// `empty_page_warning` metadata entry.
pub fn import_ocr(path: impl AsRef<Path>) -> Result<Document, IngestError> {
    let path = path.as_ref();
    let data = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ocr".to_string());
    import_ocr_str(&data, &source_id)
}

/// [`import_ocr`] on an in-memory vendor response.
pub fn import_ocr_str(json: &str, source_id: &str) -> Result<Document, IngestError> {
    let envelope: VendorEnvelope =
        serde_json::from_str(json).map_err(|e| IngestError::Parse(e.to_string()))?;

    let vendor_pages: Vec<VendorPage> = if let Some(pages) = envelope.pages {
        pages
    } else if let Some(ann) = envelope.full_text_annotation {
        ann.pages
    } else if let Some(responses) = envelope.responses {
        responses
            .into_iter()
            .filter_map(|r| r.full_text_annotation)
            .flat_map(|a| a.pages)
            .collect()
    } else {
        Vec::new()
    };

    let mut doc = Document::new(source_id);
    let mut empty_pages = Vec::new();
    for (pi, vpage) in vendor_pages.iter().enumerate() {
        let page_number = (pi + 1) as u32;
        let mut page = Page::new(page_number, Vec::new());
        page.width = vpage.width;
        page.height = vpage.height;
        for (bi, block) in vpage.blocks.iter().enumerate() {
            for (qi, para) in block.paragraphs.iter().enumerate() {
                let mut tokens = Vec::new();
                for word in &para.words {
                    let raw = word_text(word);
                    // Words are whitespace-free by construction in vendor
                    // output; split defensively in case a producer glues them.
                    for piece in raw.split_whitespace() {
                        tokens.push(Token {
                            text: nfc(piece),
                            bbox: word.bounding_box.as_ref().and_then(poly_to_bbox),
                            lang: None,
                            masked: false,
                        });
                    }
                }
                if tokens.is_empty() {
                    continue;
                }
                let bbox = para
                    .bounding_box
                    .as_ref()
                    .and_then(poly_to_bbox)
                    .or_else(|| union_bboxes(tokens.iter().filter_map(|t| t.bbox)));
                let mut line = Line::new(format!("p{page_number}_b{bi}_l{qi}"), tokens);
                line.bbox = bbox;
                page.lines.push(line);
            }
        }
        if page.lines.is_empty() {
            empty_pages.push(page_number.to_string());
        }
        doc.pages.push(page);
    }
    if vendor_pages.is_empty() {
        doc.metadata
            .insert("empty_page_warning".into(), "no pages in response".into());
    } else if !empty_pages.is_empty() {
        doc.metadata.insert(
            "empty_page_warning".into(),
            format!("pages without text: {}", empty_pages.join(",")),
        );
    }
    Ok(doc)
}

fn union_bboxes(boxes: impl Iterator<Item = BBox>) -> Option<BBox> {
    let mut acc: Option<BBox> = None;
    for b in boxes {
        acc = Some(match acc {
            None => b,
            Some(a) => BBox::new(
                a.x0().min(b.x0()),
                a.y0().min(b.y0()),
                a.x1().max(b.x1()),
                a.y1().max(b.y1()),
            ),
        });
    }
    acc
}

// ---------------------------------------------------------------------------
// Column detection and reading-order repair.
// ---------------------------------------------------------------------------

/// Per-page column layout: x-intervals left-to-right plus one column index
/// per line (in page line order).
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnModel {
    /// Column x-intervals, ordered left-to-right, non-overlapping.
    pub columns: Vec<(f64, f64)>,
    /// Column index of each line, parallel to `page.lines`.
    pub assignment: Vec<u32>,
    /// Set when geometry was missing and the model fell back to one column.
    pub missing_geometry: bool,
}

impl ColumnModel {
    fn single(n_lines: usize, span: (f64, f64), missing_geometry: bool) -> Self {
        ColumnModel {
            columns: vec![span],
            assignment: vec![0; n_lines],
            missing_geometry,
        }
    }
}

/// Detect a 1- or 2-column layout from line bounding boxes.
///
/// Two columns are reported exactly when a vertical whitespace gap wider than
/// `gap_ratio` times the page text width separates two x-clusters of line
/// bboxes; each line is assigned to the column containing its bbox center.
/// Any line without a bbox forces the single-column fallback, recorded in
/// the model.
pub fn detect_columns(page: &Page, gap_ratio: f64) -> ColumnModel {
    let n = page.lines.len();
    if n == 0 {
        return ColumnModel::single(0, (0.0, 0.0), false);
    }
    let boxes: Vec<Option<BBox>> = page.lines.iter().map(|l| l.bbox).collect();
    if boxes.iter().any(|b| b.is_none()) {
        return ColumnModel::single(n, (0.0, 0.0), true);
    }
    let boxes: Vec<BBox> = boxes.into_iter().map(|b| b.unwrap()).collect();

    let text_x0 = boxes.iter().map(|b| b.x0()).min().unwrap() as f64;
    let text_x1 = boxes.iter().map(|b| b.x1()).max().unwrap() as f64;
    let text_width = text_x1 - text_x0;
    if text_width <= 0.0 {
        return ColumnModel::single(n, (text_x0, text_x1), false);
    }

    // Merge line x-intervals into covered spans, then look at the gaps.
    let mut intervals: Vec<(f64, f64)> = boxes
        .iter()
        .map(|b| (b.x0() as f64, b.x1() as f64))
        .collect();
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match spans.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => spans.push((lo, hi)),
        }
    }

    // Widest internal gap; leftmost wins ties so the result is deterministic.
    let mut best_gap: Option<(f64, f64, f64)> = None; // (width, start, end)
    for w in spans.windows(2) {
        let (gap_start, gap_end) = (w[0].1, w[1].0);
        let width = gap_end - gap_start;
        if best_gap.is_none_or(|(bw, _, _)| width > bw) {
            best_gap = Some((width, gap_start, gap_end));
        }
    }

    match best_gap {
        Some((width, gap_start, gap_end)) if width > gap_ratio * text_width => {
            let split = (gap_start + gap_end) / 2.0;
            let assignment: Vec<u32> = boxes
                .iter()
                .map(|b| if b.center_x() < split { 0 } else { 1 })
                .collect();
            ColumnModel {
                columns: vec![(text_x0, gap_start), (gap_end, text_x1)],
                assignment,
                missing_geometry: false,
            }
        }
        _ => ColumnModel::single(n, (text_x0, text_x1), false),
    }
}

/// Sort lines into reading order: by (column, bbox top y, bbox left x),
/// stable for equal keys. The token multiset is unchanged.
///
/// When the column model was built without geometry the page is returned
/// as-is: with no usable sort keys the input order is the reading order.
pub fn reorder_page(page: &Page, columns: &ColumnModel) -> Page {
    assert_eq!(
        columns.assignment.len(),
        page.lines.len(),
        "column model does not cover this page"
    );
    let mut out = page.clone();
    if columns.missing_geometry {
        return out;
    }
    let mut keyed: Vec<(u32, i64, i64, usize)> = page
        .lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let b = line.bbox.expect("missing_geometry is false");
            (columns.assignment[i], b.y0(), b.x0(), i)
        })
        .collect();
    keyed.sort_by_key(|&(c, y, x, i)| (c, y, x, i));
    out.lines = keyed
        .into_iter()
        .map(|(c, _, _, i)| {
            let mut line = page.lines[i].clone();
            line.column = Some(c);
            line
        })
        .collect();
    out
}
