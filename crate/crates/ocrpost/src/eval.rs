//! Evaluation metrics: Character Error Rate and a structural error rate
//! over page layout.
//!
//! CER is plain Levenshtein distance over NFC, whitespace-collapsed
//! characters divided by reference length. The structural rate first matches
//! hypothesis lines to reference lines by maximum total similarity (optimal
//! assignment, with pairs below a similarity threshold excluded), then
//! counts inserted lines, deleted lines, and maximal blocks of moved lines,
//! and normalizes the weighted sum to 0–100 per page.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::docmodel::Document;
use crate::text::{collapse_whitespace, nfc};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("reference text is empty")]
    EmptyReference,
    #[error("hypothesis has {hyp} pages, reference has {reference}")]
    PageCountMismatch { hyp: usize, reference: usize },
    #[error("page numbers differ: hypothesis page {hyp}, reference page {reference}")]
    PageNumberMismatch { hyp: u32, reference: u32 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Weights of the structural operations and the line-matching threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerWeights {
    pub w_insert: f64,
    pub w_delete: f64,
    pub w_move: f64,
    /// Minimum line similarity (1 − CER, clamped at 0) for two lines to be
    /// considered the same line.
    pub theta: f64,
}

impl Default for SerWeights {
    fn default() -> Self {
        SerWeights {
            w_insert: 1.0,
            w_delete: 1.0,
            w_move: 1.0,
            theta: 0.5,
        }
    }
}

impl SerWeights {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, w) in [
            ("w_insert", self.w_insert),
            ("w_delete", self.w_delete),
            ("w_move", self.w_move),
        ] {
            if !w.is_finite() || w < 0.0 {
                return Err(EvalError::InvalidWeights(format!(
                    "{name} must be finite and non-negative, got {w}"
                )));
            }
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(EvalError::InvalidWeights(format!(
                "theta must be in (0, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Structural operation counts for one page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerCounts {
    /// Hypothesis lines with no reference counterpart.
    pub ins: usize,
    /// Reference lines missing from the hypothesis.
    pub del: usize,
    /// Maximal blocks of matched lines out of reading order.
    pub moves: usize,
}

/// Per-page metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageEval {
    pub page: u32,
    pub cer: f64,
    pub ser: f64,
    pub ops: SerCounts,
}

/// Whole-run metrics: per page plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub pages: Vec<PageEval>,
    /// Total edit distance over total reference characters.
    pub corpus_cer: f64,
    /// Arithmetic mean of the per-page structural scores.
    pub mean_ser: f64,
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn canonical(text: &str) -> String {
    collapse_whitespace(&nfc(text))
}

/// Character error rate of `hyp` against a non-empty `reference`:
/// Levenshtein distance over reference character count, both strings NFC
/// with whitespace runs collapsed.
pub fn cer(hyp: &str, reference: &str) -> Result<f64, EvalError> {
    let r = canonical(reference);
    if r.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let h = canonical(hyp);
    let hc: Vec<char> = h.chars().collect();
    let rc: Vec<char> = r.chars().collect();
    Ok(levenshtein(&hc, &rc) as f64 / rc.len() as f64)
}

/// Line similarity: 1 − CER clamped to [0, 1]; empty lines are similar only
/// to each other.
pub fn similarity(hyp: &str, reference: &str) -> f64 {
    let h = canonical(hyp);
    let r = canonical(reference);
    if r.is_empty() {
        return if h.is_empty() { 1.0 } else { 0.0 };
    }
    let hc: Vec<char> = h.chars().collect();
    let rc: Vec<char> = r.chars().collect();
    let c = levenshtein(&hc, &rc) as f64 / rc.len() as f64;
    (1.0 - c).max(0.0)
}

/// Minimum-cost perfect assignment on a square matrix (shortest augmenting
/// paths with potentials). Returns, for each column, the assigned row.
fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-indexed arrays; index 0 is the algorithm's scratch column/row.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    p
}

/// Matches hypothesis lines to reference lines one-to-one, maximizing total
/// similarity over pairs with similarity ≥ `theta`.
///
/// Pairs below the threshold are treated as similarity zero during the
/// assignment and excluded from the result. Among equal-total matchings the
/// result is canonical: pairs are uncrossed and earlier hypothesis lines
/// take earlier equally-similar reference lines, so ties break by
/// (hyp index, ref index). Returned pairs are sorted by hyp index.
pub fn align_lines(hyp: &[String], reference: &[String], theta: f64) -> Vec<(usize, usize)> {
    let (nh, nr) = (hyp.len(), reference.len());
    if nh == 0 || nr == 0 {
        return Vec::new();
    }
    // Similarities below theta are zeroed before solving: an ineligible pair
    // must not contribute to the assignment objective.
    let mut sim = vec![vec![0.0f64; nr]; nh];
    for (i, h) in hyp.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            let s = similarity(h, r);
            if s >= theta {
                sim[i][j] = s;
            }
        }
    }

    let n = nh.max(nr);
    let mut cost = vec![vec![0.0f64; n]; n];
    for (i, row) in sim.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            cost[i][j] = -s;
        }
    }
    let p = hungarian_min(&cost);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < nh && j - 1 < nr && sim[i - 1][j - 1] > 0.0 {
            pairs.push((i - 1, j - 1));
        }
    }
    pairs.sort_unstable();

    // Canonicalize among equal-total matchings.
    let eps = 1e-12;
    let matched_refs: BTreeSet<usize> = pairs.iter().map(|&(_, r)| r).collect();
    let mut free_refs: Vec<usize> = (0..nr).filter(|r| !matched_refs.contains(r)).collect();
    loop {
        let mut changed = false;
        // An earlier, equally similar, unmatched reference line is preferred.
        for pair in pairs.iter_mut() {
            let (h, r) = *pair;
            if let Some(k) = free_refs
                .iter()
                .position(|&fr| fr < r && (sim[h][fr] - sim[h][r]).abs() < eps && sim[h][fr] > 0.0)
            {
                let fr = free_refs[k];
                free_refs[k] = r;
                *pair = (h, fr);
                changed = true;
            }
        }
        // Uncross pairs when swapping reference lines keeps the total equal.
        for a in 0..pairs.len() {
            for b in (a + 1)..pairs.len() {
                let (h1, r1) = pairs[a];
                let (h2, r2) = pairs[b];
                if r1 > r2
                    && sim[h1][r2] > 0.0
                    && sim[h2][r1] > 0.0
                    && ((sim[h1][r2] + sim[h2][r1]) - (sim[h1][r1] + sim[h2][r2])).abs() < eps
                {
                    pairs[a] = (h1, r2);
                    pairs[b] = (h2, r1);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Indexes of one canonical longest strictly-increasing subsequence.
fn lis_indices(seq: &[usize]) -> Vec<usize> {
    let mut tails: Vec<usize> = Vec::new();
    let mut prev: Vec<Option<usize>> = vec![None; seq.len()];
    for (i, &v) in seq.iter().enumerate() {
        let pos = tails.partition_point(|&t| seq[t] < v);
        if pos > 0 {
            prev[i] = Some(tails[pos - 1]);
        }
        if pos == tails.len() {
            tails.push(i);
        } else {
            tails[pos] = i;
        }
    }
    let mut out = Vec::new();
    let mut cur = tails.last().copied();
    while let Some(c) = cur {
        out.push(c);
        cur = prev[c];
    }
    out.reverse();
    out
}

/// Structural error rate of a hypothesis page against a non-empty reference
/// page: insertions, deletions, and maximal move blocks of matched lines,
/// weighted, normalized by reference line count, clipped to [0, 100].
pub fn ser(
    hyp: &[String],
    reference: &[String],
    weights: &SerWeights,
) -> Result<(f64, SerCounts), EvalError> {
    weights.validate()?;
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let pairs = align_lines(hyp, reference, weights.theta);
    let ins = hyp.len() - pairs.len();
    let del = reference.len() - pairs.len();

    // Pairs are sorted by hyp index; lines in reading order form an
    // increasing run of reference indexes, everything else was moved.
    let refs: Vec<usize> = pairs.iter().map(|&(_, r)| r).collect();
    let keep: BTreeSet<usize> = lis_indices(&refs).into_iter().collect();
    let mut moves = 0usize;
    let mut prev_displaced: Option<usize> = None;
    for (idx, &r) in refs.iter().enumerate() {
        if keep.contains(&idx) {
            continue;
        }
        // A block continues only through adjacent matched pairs whose
        // reference indexes are consecutive.
        let continues =
            prev_displaced == Some(idx.wrapping_sub(1)) && idx > 0 && refs[idx - 1] + 1 == r;
        if !continues {
            moves += 1;
        }
        prev_displaced = Some(idx);
    }

    let raw = weights.w_insert * ins as f64
        + weights.w_delete * del as f64
        + weights.w_move * moves as f64;
    let score = (100.0 * raw / reference.len() as f64).min(100.0);
    Ok((score, SerCounts { ins, del, moves }))
}

fn page_text(lines: &[String]) -> String {
    canonical(&lines.join(" "))
}

/// Evaluates a hypothesis document against a reference document, pairing
/// pages by page number.
pub fn report(
    hyp_doc: &Document,
    ref_doc: &Document,
    weights: &SerWeights,
) -> Result<EvalReport, EvalError> {
    weights.validate()?;
    if hyp_doc.pages.len() != ref_doc.pages.len() {
        return Err(EvalError::PageCountMismatch {
            hyp: hyp_doc.pages.len(),
            reference: ref_doc.pages.len(),
        });
    }
    let mut pages = Vec::with_capacity(ref_doc.pages.len());
    let (mut total_dist, mut total_chars) = (0usize, 0usize);
    let mut ser_sum = 0.0;
    for (hp, rp) in hyp_doc.pages.iter().zip(&ref_doc.pages) {
        if hp.page_number != rp.page_number {
            return Err(EvalError::PageNumberMismatch {
                hyp: hp.page_number,
                reference: rp.page_number,
            });
        }
        let hyp_lines: Vec<String> = hp.lines.iter().map(|l| l.text()).collect();
        let ref_lines: Vec<String> = rp.lines.iter().map(|l| l.text()).collect();
        let h: Vec<char> = page_text(&hyp_lines).chars().collect();
        let r: Vec<char> = page_text(&ref_lines).chars().collect();
        if r.is_empty() {
            return Err(EvalError::EmptyReference);
        }
        let dist = levenshtein(&h, &r);
        let (ser_score, ops) = ser(&hyp_lines, &ref_lines, weights)?;
        total_dist += dist;
        total_chars += r.len();
        ser_sum += ser_score;
        pages.push(PageEval {
            page: rp.page_number,
            cer: dist as f64 / r.len() as f64,
            ser: ser_score,
            ops,
        });
    }
    let n = pages.len();
    Ok(EvalReport {
        pages,
        corpus_cer: if total_chars == 0 {
            0.0
        } else {
            total_dist as f64 / total_chars as f64
        },
        mean_ser: if n == 0 { 0.0 } else { ser_sum / n as f64 },
    })
}

/// Serializes a report to JSON (stable field order, trailing newline).
pub fn report_to_json(report: &EvalReport) -> String {
    let mut json = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    json.push('\n');
    json
}

pub fn report_from_json(json: &str) -> Result<EvalReport, EvalError> {
    serde_json::from_str(json).map_err(|e| EvalError::Parse(e.to_string()))
}

/// Renders a report as a plain-text table: one row per page plus aggregates.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>6}  {:>8}  {:>7}  {:>5}  {:>5}  {:>6}\n",
        "page", "cer", "ser", "ins", "del", "moves"
    ));
    for p in &report.pages {
        out.push_str(&format!(
            "{:>6}  {:>8.4}  {:>7.2}  {:>5}  {:>5}  {:>6}\n",
            p.page, p.cer, p.ser, p.ops.ins, p.ops.del, p.ops.moves
        ));
    }
    out.push_str(&format!(
        "{:>6}  {:>8.4}  {:>7.2}\n",
        "all", report.corpus_cer, report.mean_ser
    ));
    out
}
