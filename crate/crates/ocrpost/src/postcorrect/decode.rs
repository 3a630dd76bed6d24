//! Beam search for the intended string behind an observed OCR line.
//!
//! A hypothesis consumes the observed line left to right. At each position
//! it may keep the observed character, replace it with an intended character
//! the channel has seen substituted that way, drop it as a channel
//! insertion, or (before consuming) emit an intended character the channel
//! has seen deleted. Hypotheses sharing a language-model context and
//! insertion budget are recombined; the survivor set is pruned to the beam
//! width. Ties anywhere are broken by the lexicographically smaller
//! candidate, so decoding is deterministic.

use std::collections::BTreeMap;

use super::channel::ChannelModel;
use super::lm::CharLM;

/// Decoder hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    /// Hypotheses kept per step; at least 1 is always searched.
    pub beam_width: usize,
    /// Weight of the channel score against the language model.
    pub lambda: f64,
    /// Intended characters the decoder may add per input position.
    pub max_insertions: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_width: 8,
            lambda: 1.0,
            max_insertions: 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Hyp {
    ctx: Vec<char>,
    text: String,
    score: f64,
}

/// `lambda * logp` without producing NaN when `lambda` is 0 and `logp` −∞.
fn weighted(lambda: f64, logp: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda * logp
    }
}

fn better(a_score: f64, a_text: &str, b_score: f64, b_text: &str) -> bool {
    match a_score.total_cmp(&b_score) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => a_text < b_text,
    }
}

/// Recombination: keep only the best hypothesis per key.
fn merge<K: Ord>(pool: &mut BTreeMap<K, Hyp>, key: K, hyp: Hyp) {
    match pool.get_mut(&key) {
        Some(existing) => {
            if better(hyp.score, &hyp.text, existing.score, &existing.text) {
                *existing = hyp;
            }
        }
        None => {
            pool.insert(key, hyp);
        }
    }
}

fn prune(pool: impl IntoIterator<Item = Hyp>, width: usize) -> Vec<Hyp> {
    let mut hyps: Vec<Hyp> = pool.into_iter().collect();
    hyps.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.text.cmp(&b.text))
    });
    hyps.truncate(width);
    hyps
}

/// Corrects one line, returning the best candidate and its objective score
/// `log P_lm(candidate) + λ · log P_channel(line | candidate)`.
pub fn correct_line_scored(
    line: &str,
    channel: &ChannelModel,
    lm: &CharLM,
    cfg: &BeamConfig,
) -> (String, f64) {
    // Empty lines (fully masked ones included) pass through untouched.
    if line.is_empty() {
        return (String::new(), lm.log_line(""));
    }
    let width = cfg.beam_width.max(1);
    let lambda = cfg.lambda.max(0.0);
    let observed: Vec<char> = line.chars().collect();
    let addable: Vec<char> = channel.addable().collect();

    let mut beam = vec![Hyp {
        ctx: lm.initial_context(),
        text: String::new(),
        score: 0.0,
    }];

    for pos in 0..=observed.len() {
        // Emit intended characters the channel may have deleted here.
        if !addable.is_empty() && cfg.max_insertions > 0 {
            // Keyed by (context, insertions used at this position).
            let mut pool: BTreeMap<(Vec<char>, usize), Hyp> = BTreeMap::new();
            for hyp in &beam {
                merge(&mut pool, (hyp.ctx.clone(), 0), hyp.clone());
            }
            let mut frontier = beam;
            for depth in 1..=cfg.max_insertions {
                let mut next = Vec::new();
                for hyp in &frontier {
                    for &c in &addable {
                        let score = hyp.score
                            + lm.log_next(&hyp.ctx, Some(c))
                            + weighted(lambda, channel.log_del(c));
                        let mut ctx = hyp.ctx.clone();
                        lm.shift(&mut ctx, c);
                        let mut text = hyp.text.clone();
                        text.push(c);
                        let grown = Hyp { ctx, text, score };
                        merge(&mut pool, (grown.ctx.clone(), depth), grown.clone());
                        next.push(grown);
                    }
                }
                frontier = next;
            }
            beam = prune(pool.into_values(), width);
        }

        if pos == observed.len() {
            break;
        }

        // Consume the observed character: keep, replace, or drop it.
        let o = observed[pos];
        let mut pool: BTreeMap<Vec<char>, Hyp> = BTreeMap::new();
        for hyp in &beam {
            let keep_score = hyp.score
                + lm.log_next(&hyp.ctx, Some(o))
                + weighted(lambda, channel.log_noedit(o));
            let mut ctx = hyp.ctx.clone();
            lm.shift(&mut ctx, o);
            let mut text = hyp.text.clone();
            text.push(o);
            merge(
                &mut pool,
                ctx.clone(),
                Hyp {
                    ctx,
                    text,
                    score: keep_score,
                },
            );

            for c in channel.intended_for_observed(o) {
                if c == o {
                    continue;
                }
                let score = hyp.score
                    + lm.log_next(&hyp.ctx, Some(c))
                    + weighted(lambda, channel.log_sub(o, c));
                let mut ctx = hyp.ctx.clone();
                lm.shift(&mut ctx, c);
                let mut text = hyp.text.clone();
                text.push(c);
                merge(&mut pool, ctx.clone(), Hyp { ctx, text, score });
            }

            if channel.can_drop(o) {
                let score = hyp.score + weighted(lambda, channel.log_ins(o));
                let dropped = Hyp {
                    ctx: hyp.ctx.clone(),
                    text: hyp.text.clone(),
                    score,
                };
                merge(&mut pool, dropped.ctx.clone(), dropped);
            }
        }
        beam = prune(pool.into_values(), width);
    }

    let mut best: Option<(String, f64)> = None;
    for hyp in beam {
        let score = hyp.score + lm.log_next(&hyp.ctx, None);
        match &best {
            Some((text, s)) if !better(score, &hyp.text, *s, text) => {}
            _ => best = Some((hyp.text, score)),
        }
    }
    best.expect("beam always holds at least one hypothesis")
}

/// Corrects one line; see [`correct_line_scored`] for the objective.
/// An untrained channel makes this the identity function.
pub fn correct_line(line: &str, channel: &ChannelModel, lm: &CharLM, cfg: &BeamConfig) -> String {
    correct_line_scored(line, channel, lm, cfg).0
}
