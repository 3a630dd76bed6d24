//! Character alignment of OCR/gold line pairs by minimal edit script.

/// One step of an edit script transforming a source string into a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    /// Source character kept unchanged.
    Keep(char),
    /// Source character `from` replaced by reference character `to`.
    Substitute { from: char, to: char },
    /// Reference character absent from the source.
    Insert(char),
    /// Source character absent from the reference.
    Delete(char),
}

impl EditOp {
    /// Unit cost: everything but `Keep` costs 1.
    pub fn cost(&self) -> usize {
        match self {
            EditOp::Keep(_) => 0,
            _ => 1,
        }
    }
}

/// Aligns `src` to `reference`, returning a minimal-cost edit script under
/// unit costs. Applying the script to `src` yields `reference`.
///
/// Ties are broken by preferring keep > substitute > delete > insert at each
/// traceback step, so the result is deterministic.
pub fn align_pair(src: &str, reference: &str) -> Vec<EditOp> {
    let s: Vec<char> = src.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    let (n, m) = (s.len(), r.len());

    // dist[i][j] = edit distance between s[..i] and r[..j].
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dist[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = dist[i - 1][j - 1] + usize::from(s[i - 1] != r[j - 1]);
            dist[i][j] = diag
                .min(dist[i - 1][j] + 1) // delete s[i-1]
                .min(dist[i][j - 1] + 1); // insert r[j-1]
        }
    }

    let mut script = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let d = dist[i][j];
        if i > 0 && j > 0 && s[i - 1] == r[j - 1] && dist[i - 1][j - 1] == d {
            script.push(EditOp::Keep(s[i - 1]));
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dist[i - 1][j - 1] + 1 == d {
            script.push(EditOp::Substitute {
                from: s[i - 1],
                to: r[j - 1],
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && dist[i - 1][j] + 1 == d {
            script.push(EditOp::Delete(s[i - 1]));
            i -= 1;
        } else {
            script.push(EditOp::Insert(r[j - 1]));
            j -= 1;
        }
    }
    script.reverse();
    script
}

/// Applies an edit script to `src`. Returns `None` if the script does not
/// match the source characters.
pub fn apply_script(src: &str, script: &[EditOp]) -> Option<String> {
    let mut out = String::new();
    let mut chars = src.chars();
    for op in script {
        match *op {
            EditOp::Keep(c) => {
                if chars.next() != Some(c) {
                    return None;
                }
                out.push(c);
            }
            EditOp::Substitute { from, to } => {
                if chars.next() != Some(from) {
                    return None;
                }
                out.push(to);
            }
            EditOp::Insert(c) => out.push(c),
            EditOp::Delete(c) => {
                if chars.next() != Some(c) {
                    return None;
                }
            }
        }
    }
    if chars.next().is_some() {
        return None;
    }
    Some(out)
}
