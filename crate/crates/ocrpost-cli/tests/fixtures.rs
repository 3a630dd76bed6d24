//! Regenerates the bundled synthetic corpus under `data/synthetic/`.
//!
//! The corpus is a three-page, two-column bilingual document whose OCR
//! response interleaves the columns and carries substitution noise from a
//! fixed five-entry confusion table, plus everything needed to run the full
//! pipeline on it: a langid training corpus, correction training pairs, an
//! orthography rule table, trained model files, the gold reference, and the
//! pipeline configs. Everything is derived from one fixed seed, so the
//! files are reproducible byte for byte.
//!
//! The language-identification model is trained first and each document
//! word is sampled until its noisy realization classifies correctly on its
//! own, so the committed document is one the committed model labels with
//! 100% token accuracy — the property the end-to-end improvement run
//! depends on.
//!
//! The generator is `#[ignore]`d; run it manually after changing fixture
//! logic and commit the results:
//!
//! ```text
//! cargo test -p ocrpost-cli --test fixtures -- --ignored
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use ocrpost::docmodel::{document_to_json, BBox, Document, Line, Page, Token};
use ocrpost::eval::{report, similarity, SerWeights};
use ocrpost::ingest::{detect_columns, import_ocr_str, reorder_page};
use ocrpost::langid::{self, LangIdModel, TrainConfig};
use ocrpost::maskio::{annotate_mask_flags, mask_document, unmask_document, MaskPolicy};
use ocrpost::postcorrect::{
    apply_corrections, channel_to_json, correct_line, document_lines, lm_to_json, parse_pairs,
    train_channel, train_lm, BeamConfig,
};
use ocrpost::translit::{parse_rules, transliterate_document};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20260815;
const PAGES: usize = 3;
const CONFUSIONS: [(char, char); 5] = [('a', '4'), ('e', '3'), ('o', '0'), ('s', '5'), ('t', '7')];
const TRAIN_NOISE: f64 = 0.12;
const HEAVY_NOISE: f64 = 0.9;
/// Minimum winning probability for a document word classified alone.
const LABEL_MARGIN: f64 = 0.6;

/// English-like filler; every word contains at least one character outside
/// the synthetic target-language alphabet, and inline words are ≥ 4 chars
/// so token-level language identification can classify them alone.
const ENG_WORDS: &[&str] = &[
    "the", "said", "chief", "house", "river", "winter", "people", "story", "north", "village",
    "copper", "feast", "canoe", "spoke", "father", "mother", "children", "told", "great", "water",
    "fire", "daylight", "morning", "evening", "brother", "sister", "hunter", "speaks", "paddle",
    "beach",
];

fn confuse_char(c: char) -> Option<char> {
    CONFUSIONS.iter().find(|(f, _)| *f == c).map(|&(_, t)| t)
}

/// Substitution noise from the confusion table; never yields an all-digit
/// token (a margin-number lookalike would be masked instead of corrected).
fn confuse_word(rng: &mut ChaCha8Rng, word: &str, p: f64) -> String {
    let mut out: Vec<char> = word
        .chars()
        .map(|c| match confuse_char(c) {
            Some(d) if rng.gen_bool(p) => d,
            _ => c,
        })
        .collect();
    if out.iter().all(|c| c.is_ascii_digit()) {
        out[0] = word.chars().next().expect("non-empty word");
    }
    out.into_iter().collect()
}

fn sample<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

fn syllable_vocab(
    rng: &mut ChaCha8Rng,
    n: usize,
    onsets: &[&str],
    vowels: &[&str],
    codas: &[&str],
) -> Vec<String> {
    let mut vocab: Vec<String> = Vec::new();
    while vocab.len() < n {
        let syllables = rng.gen_range(2..=3);
        let mut word = String::new();
        for _ in 0..syllables {
            word.push_str(sample(rng, onsets));
            word.push_str(sample(rng, vowels));
            word.push_str(sample(rng, codas));
        }
        if !vocab.contains(&word) {
            vocab.push(word);
        }
    }
    vocab
}

/// Target-language vocabulary: 2–3 syllables of onset + vowel + coda.
fn kwa_vocab(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    syllable_vocab(
        rng,
        n,
        &["k", "kw", "t", "ts", "s", "n", "m", "w", "l"],
        &["a", "e", "o"],
        &["", "s", "t", "m", "n"],
    )
}

/// Heavy-noise vocabulary: words built only from confusable characters, so
/// heavy noise pushes a line's similarity far below the match threshold.
fn heavy_vocab(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let vocab = syllable_vocab(rng, n, &["t", "ts", "s"], &["a", "e", "o"], &["", "s", "t"]);
    for word in &vocab {
        debug_assert!(word.chars().all(|c| confuse_char(c).is_some()));
    }
    vocab
}

fn join(words: &[String]) -> String {
    words.join(" ")
}

/// One document token: the clean text (gold) and its noisy realization
/// (OCR response), plus the true language label.
#[derive(Debug, Clone)]
struct SpecToken {
    clean: String,
    noisy: String,
    lang: &'static str,
}

impl SpecToken {
    fn verbatim(text: impl Into<String>, lang: &'static str) -> Self {
        let text = text.into();
        SpecToken {
            clean: text.clone(),
            noisy: text,
            lang,
        }
    }
}

/// One logical line of the document.
#[derive(Debug, Clone)]
struct SpecLine {
    tokens: Vec<SpecToken>,
    heavy: bool,
}

struct SpecPage {
    /// Lines in correct reading order: left column first, then right.
    lines: Vec<SpecLine>,
}

/// Draws words whose noisy form the model confidently labels correctly when
/// classified alone, so the committed document round-trips through langid.
struct WordDrawer<'a> {
    model: &'a LangIdModel,
}

impl WordDrawer<'_> {
    fn confident(&self, text: &str, lang: &str) -> bool {
        let (label, probs) = langid::predict_line(self.model, text).expect("prediction");
        label == lang
            && probs
                .iter()
                .find(|(l, _)| l == lang)
                .map(|&(_, p)| p >= LABEL_MARGIN)
                .unwrap_or(false)
    }

    fn kwa(&self, rng: &mut ChaCha8Rng, pool: &[String], noise: f64) -> SpecToken {
        for _ in 0..200 {
            let clean = sample(rng, pool).clone();
            let noisy = confuse_word(rng, &clean, noise);
            if self.confident(&noisy, "kwa") {
                return SpecToken {
                    clean,
                    noisy,
                    lang: "kwa",
                };
            }
        }
        panic!("no confidently-labeled target word after 200 draws; model too weak");
    }

    fn kwa_line(
        &self,
        rng: &mut ChaCha8Rng,
        pool: &[String],
        noise: f64,
        n: usize,
    ) -> Vec<SpecToken> {
        (0..n).map(|_| self.kwa(rng, pool, noise)).collect()
    }

    fn eng(&self, rng: &mut ChaCha8Rng, min_len: usize) -> SpecToken {
        let pool: Vec<&str> = ENG_WORDS
            .iter()
            .copied()
            .filter(|w| w.len() >= min_len)
            .collect();
        for _ in 0..200 {
            let word = *sample(rng, &pool);
            // Words long enough to be classified alone must pass on their
            // own; shorter ones inherit the line label.
            if word.chars().count() < 4 || self.confident(word, "eng") {
                return SpecToken::verbatim(word, "eng");
            }
        }
        panic!("no confidently-labeled filler word after 200 draws; model too weak");
    }

    fn eng_line(&self, rng: &mut ChaCha8Rng, n: usize, min_len: usize) -> Vec<SpecToken> {
        (0..n).map(|_| self.eng(rng, min_len)).collect()
    }
}

/// Builds the 12 logical lines of one page (6 per column): mostly
/// target-language text with margin line numbers, parenthesized English
/// insertions, full English interlinear lines, and two heavy-noise lines.
fn build_page(
    rng: &mut ChaCha8Rng,
    draw: &WordDrawer,
    vocab: &[String],
    heavy: &[String],
    page: usize,
) -> SpecPage {
    let plain = |tokens| SpecLine {
        tokens,
        heavy: false,
    };
    let mut lines = Vec::new();

    // Left column.
    let mut l0 = vec![SpecToken::verbatim((page * 10 + 5).to_string(), "kwa")];
    l0.extend(draw.kwa_line(rng, vocab, TRAIN_NOISE, 4));
    lines.push(plain(l0));
    lines.push(plain(draw.kwa_line(rng, vocab, TRAIN_NOISE, 5)));
    lines.push(SpecLine {
        tokens: draw.kwa_line(rng, heavy, HEAVY_NOISE, 5),
        heavy: true,
    });
    let mut l3 = draw.kwa_line(rng, vocab, TRAIN_NOISE, 3);
    l3.push(SpecToken::verbatim("(", "kwa"));
    l3.extend(draw.eng_line(rng, 2, 4));
    l3.push(SpecToken::verbatim(")", "kwa"));
    lines.push(plain(l3));
    lines.push(plain(draw.kwa_line(rng, vocab, TRAIN_NOISE, 5)));
    lines.push(plain(draw.eng_line(rng, 6, 3)));

    // Right column.
    lines.push(plain(draw.kwa_line(rng, vocab, TRAIN_NOISE, 5)));
    lines.push(plain(draw.eng_line(rng, 6, 3)));
    lines.push(SpecLine {
        tokens: draw.kwa_line(rng, heavy, HEAVY_NOISE, 5),
        heavy: true,
    });
    let mut l9 = draw.kwa_line(rng, vocab, TRAIN_NOISE, 4);
    l9.push(SpecToken::verbatim((page * 10 + 10).to_string(), "kwa"));
    lines.push(plain(l9));
    let mut l10 = draw.kwa_line(rng, vocab, TRAIN_NOISE, 4);
    l10.push(SpecToken::verbatim("(", "kwa"));
    l10.extend(draw.eng_line(rng, 1, 4));
    l10.push(SpecToken::verbatim(")", "kwa"));
    lines.push(plain(l10));
    lines.push(plain(draw.eng_line(rng, 5, 3)));

    SpecPage { lines }
}

/// Token bounding boxes for one line: the column interval split evenly.
fn line_geometry(col: usize, row: usize, n_tokens: usize) -> (BBox, Vec<BBox>) {
    let (x0, x1) = if col == 0 { (100, 420) } else { (580, 900) };
    let y0 = 100 + 45 * row as i64;
    let y1 = y0 + 30;
    let width = (x1 - x0) / n_tokens as i64;
    let boxes = (0..n_tokens as i64)
        .map(|i| BBox::new(x0 + i * width, y0, x0 + (i + 1) * width - 4, y1))
        .collect();
    (BBox::new(x0, y0, x1, y1), boxes)
}

/// OCR response JSON for all pages, with the two columns interleaved row by
/// row (the wrong reading order the reorder stage must repair).
fn vendor_json(pages: &[&SpecPage]) -> String {
    let mut vendor_pages = Vec::new();
    for spec in pages {
        let half = spec.lines.len() / 2;
        let mut paragraphs = Vec::new();
        for row in 0..half {
            for col in 0..2 {
                let line = &spec.lines[col * half + row];
                let (line_box, token_boxes) = line_geometry(col, row, line.tokens.len());
                let words: Vec<serde_json::Value> = line
                    .tokens
                    .iter()
                    .zip(&token_boxes)
                    .map(|(t, b)| {
                        serde_json::json!({
                            "boundingBox": poly(b),
                            "symbols": t.noisy.chars().map(|c| serde_json::json!({"text": c.to_string()})).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                paragraphs.push(serde_json::json!({
                    "boundingBox": poly(&line_box),
                    "words": words,
                }));
            }
        }
        vendor_pages.push(serde_json::json!({
            "width": 1000,
            "height": 1400,
            "blocks": [{"paragraphs": paragraphs}],
        }));
    }
    let envelope = serde_json::json!({
        "responses": [{"fullTextAnnotation": {"pages": vendor_pages}}]
    });
    let mut out = serde_json::to_string_pretty(&envelope).expect("vendor json");
    out.push('\n');
    out
}

fn poly(b: &BBox) -> serde_json::Value {
    serde_json::json!({
        "vertices": [
            {"x": b.x0(), "y": b.y0()},
            {"x": b.x1(), "y": b.y0()},
            {"x": b.x1(), "y": b.y1()},
            {"x": b.x0(), "y": b.y1()},
        ]
    })
}

/// The clean document in correct reading order with true labels and the
/// same geometry as the OCR response.
fn clean_document(pages: &[&SpecPage]) -> Document {
    let mut doc = Document::new("vendor_ocr");
    for (pi, spec) in pages.iter().enumerate() {
        let page_number = (pi + 1) as u32;
        let half = spec.lines.len() / 2;
        let mut page = Page::new(page_number, Vec::new());
        page.width = Some(1000);
        page.height = Some(1400);
        for (li, line) in spec.lines.iter().enumerate() {
            let (col, row) = (li / half, li % half);
            let (line_box, token_boxes) = line_geometry(col, row, line.tokens.len());
            let tokens = line
                .tokens
                .iter()
                .zip(&token_boxes)
                .map(|(t, b)| Token {
                    text: t.clean.clone(),
                    bbox: Some(*b),
                    lang: Some(t.lang.to_string()),
                    masked: false,
                })
                .collect();
            let mut l = Line::new(format!("p{page_number}_c{col}_r{row}"), tokens);
            l.bbox = Some(line_box);
            page.lines.push(l);
        }
        doc.pages.push(page);
    }
    doc
}

const RULES_TSV: &str = "\
#orthography: boas-hunt -> umista
# Longest match wins; one pass, outputs are never rescanned.
ts\tc
kw\t\u{1e35}w
e\ti
o\tu
";

const PIPELINE_TOML: &str = "\
# Full pipeline over the bundled synthetic corpus. Relative paths resolve
# against this file's directory; pass --out to choose where artifacts go.
seed = 0

[paths]
input = \"vendor_ocr.json\"
langid_model = \"models/langid.json\"
channel_model = \"models/channel.json\"
lm_model = \"models/lm.json\"
rules = \"rules.tsv\"
reference = \"gold.json\"

[mask]
target_lang = \"kwa\"
mask_langs = [\"eng\"]
";

const BASELINE_TOML: &str = "\
# The uncorrected masked baseline: identical to pipeline.toml except the
# correction stage is disabled. The full pipeline must beat this run on
# both corpus CER and mean SER.
seed = 0

[stages]
correct = false

[paths]
input = \"vendor_ocr.json\"
langid_model = \"models/langid.json\"
rules = \"rules.tsv\"
reference = \"gold.json\"

[mask]
target_lang = \"kwa\"
mask_langs = [\"eng\"]
";

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn write(path: &Path, content: &str) {
    fs::create_dir_all(path.parent().expect("parent")).expect("mkdir");
    fs::write(path, content).unwrap_or_else(|e| panic!("writing {}: {e}", path.display()));
}

#[test]
#[ignore = "regenerates committed fixtures; run explicitly"]
fn regenerate_synthetic_corpus() {
    let dir = data_dir();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let vocab = kwa_vocab(&mut rng, 80);
    let heavy = heavy_vocab(&mut rng, 20);

    // -- LangID training corpus: noisy target lines vs clean English --------
    // Lines of mixed length, including one- and two-word examples: tokens
    // long enough to classify alone are scored without any surrounding
    // context, so the model has to have seen short texts in training.
    let mut langid_lines = Vec::new();
    let push_kwa = |rng: &mut ChaCha8Rng,
                    lines: &mut Vec<String>,
                    pool: &[String],
                    count: usize,
                    len: RangeInclusive<usize>,
                    noise: f64| {
        for _ in 0..count {
            let n = rng.gen_range(len.clone());
            let words: Vec<String> = (0..n)
                .map(|_| {
                    let w = sample(rng, pool).clone();
                    confuse_word(rng, &w, noise)
                })
                .collect();
            lines.push(format!("__label__kwa\t{}", join(&words)));
        }
    };
    push_kwa(&mut rng, &mut langid_lines, &vocab, 140, 5..=7, TRAIN_NOISE);
    push_kwa(&mut rng, &mut langid_lines, &vocab, 60, 1..=2, TRAIN_NOISE);
    push_kwa(&mut rng, &mut langid_lines, &heavy, 40, 5..=7, HEAVY_NOISE);
    push_kwa(&mut rng, &mut langid_lines, &heavy, 20, 1..=2, HEAVY_NOISE);
    let push_eng = |rng: &mut ChaCha8Rng,
                    lines: &mut Vec<String>,
                    count: usize,
                    len: RangeInclusive<usize>| {
        for _ in 0..count {
            let n = rng.gen_range(len.clone());
            let words: Vec<String> = (0..n).map(|_| sample(rng, ENG_WORDS).to_string()).collect();
            lines.push(format!("__label__eng\t{}", join(&words)));
        }
    };
    push_eng(&mut rng, &mut langid_lines, 200, 5..=8);
    push_eng(&mut rng, &mut langid_lines, 100, 1..=2);
    let langid_corpus_text = langid_lines.join("\n") + "\n";
    write(&dir.join("langid_train.txt"), &langid_corpus_text);

    let corpus = langid::parse_corpus(&langid_corpus_text).expect("langid corpus");
    let train_cfg = TrainConfig {
        min_n: 1,
        max_n: 3,
        dimension: 8192,
        epochs: 12,
        learning_rate: 0.1,
        seed: 0,
    };
    let model = langid::train(&corpus, &train_cfg).expect("langid training");
    write(
        &dir.join("models/langid.json"),
        &langid::model_to_json(&model),
    );

    // -- Document content ----------------------------------------------------
    let draw = WordDrawer { model: &model };
    let spec_pages: Vec<SpecPage> = (0..PAGES)
        .map(|p| build_page(&mut rng, &draw, &vocab, &heavy, p))
        .collect();
    let page_refs: Vec<&SpecPage> = spec_pages.iter().collect();
    write(&dir.join("vendor_ocr.json"), &vendor_json(&page_refs));

    // -- Correction training pairs -------------------------------------------
    // The pair noise is deliberately higher than the document's base rate:
    // the channel's substitution probability must outbid keeping an
    // out-of-vocabulary digit (whose language-model cost bottoms out at the
    // unseen-context uniform), or heavy lines never get repaired.
    let mut mixed_vocab = vocab.clone();
    mixed_vocab.extend(heavy.iter().cloned());
    let mut pair_lines = Vec::new();
    for i in 0..500 {
        let noise = if i % 10 < 7 { 0.25 } else { HEAVY_NOISE };
        let n = rng.gen_range(4..=7);
        let clean: Vec<String> = (0..n)
            .map(|_| sample(&mut rng, &mixed_vocab).clone())
            .collect();
        let noisy: Vec<String> = clean
            .iter()
            .map(|w| confuse_word(&mut rng, w, noise))
            .collect();
        pair_lines.push(format!("{}\t{}", join(&noisy), join(&clean)));
    }
    let pairs_text = pair_lines.join("\n") + "\n";
    write(&dir.join("pairs.tsv"), &pairs_text);
    let pairs = parse_pairs(&pairs_text).expect("pairs parse");
    for (from, to) in CONFUSIONS {
        assert!(
            pairs.iter().any(|p| {
                p.src.contains(to)
                    && p.reference.contains(from)
                    && p.src.chars().count() == p.reference.chars().count()
            }),
            "confusion {from}->{to} missing from training pairs"
        );
    }

    // -- Rule table and configs ----------------------------------------------
    write(&dir.join("rules.tsv"), RULES_TSV);
    write(&dir.join("pipeline.toml"), PIPELINE_TOML);
    write(&dir.join("baseline.toml"), BASELINE_TOML);
    let table = parse_rules("rules", RULES_TSV).expect("rule table");

    // -- Gold reference: clean text, true labels, final orthography ----------
    let policy = MaskPolicy::new("kwa", ["eng".to_string()]).expect("policy");
    let clean = clean_document(&page_refs);
    let gold = transliterate_document(&annotate_mask_flags(&clean, &policy), &table)
        .expect("gold transliteration");
    write(&dir.join("gold.json"), &document_to_json(&gold));

    // -- Correction models ----------------------------------------------------
    let channel = train_channel(&pairs, 0.1).expect("channel training");
    write(&dir.join("models/channel.json"), &channel_to_json(&channel));
    let refs: Vec<String> = pairs.iter().map(|p| p.reference.clone()).collect();
    let lm = train_lm(&refs, 4, 0.01).expect("lm training");
    write(&dir.join("models/lm.json"), &lm_to_json(&lm));

    // -- Fixture health checks ------------------------------------------------
    // The vendor response imports to the interleaved noisy text, and
    // geometry-based reordering restores the logical order.
    let imported = import_ocr_str(
        &fs::read_to_string(dir.join("vendor_ocr.json")).unwrap(),
        "vendor_ocr",
    )
    .expect("vendor import");
    assert_eq!(imported.pages.len(), PAGES);
    let mut reordered = imported.clone();
    for page in &mut reordered.pages {
        let columns = detect_columns(page, 0.15);
        *page = reorder_page(page, &columns);
    }
    for (pi, spec) in spec_pages.iter().enumerate() {
        let half = spec.lines.len() / 2;
        for (li, line) in spec.lines.iter().enumerate() {
            let noisy: Vec<String> = line.tokens.iter().map(|t| t.noisy.clone()).collect();
            let (col, row) = (li / half, li % half);
            let interleaved = 2 * row + col;
            assert_eq!(
                imported.pages[pi].lines[interleaved].text(),
                join(&noisy),
                "vendor order should interleave page {pi} line {li}"
            );
            assert_eq!(
                reordered.pages[pi].lines[li].text(),
                join(&noisy),
                "reorder should restore page {pi} line {li}"
            );
        }
    }

    // Token-level language identification on the noisy document must
    // reproduce the true labels for every word token, otherwise masking
    // would diverge from the gold construction. Digits and punctuation
    // inherit whatever their line is labeled; the policy masks them
    // regardless, so only word labels have to be exact.
    let mut labeled = reordered.clone();
    let mut mislabeled = Vec::new();
    for (pi, page) in labeled.pages.iter_mut().enumerate() {
        for (li, line) in page.lines.iter_mut().enumerate() {
            let context = line.text();
            for (ti, tok) in line.tokens.iter_mut().enumerate() {
                let predicted =
                    langid::predict_token(&model, &tok.text, &context).expect("prediction");
                if tok.text.chars().any(char::is_alphabetic) {
                    let truth = spec_pages[pi].lines[li].tokens[ti].lang;
                    if predicted != truth {
                        mislabeled.push(format!(
                            "page {pi} line {li} token {ti} {:?}: want {truth}, got {predicted}",
                            tok.text
                        ));
                    }
                } else {
                    assert!(
                        policy.should_mask(&tok.text, Some(&predicted)),
                        "non-word token {:?} must mask regardless of label",
                        tok.text
                    );
                }
                tok.lang = Some(predicted);
            }
        }
    }
    assert!(
        mislabeled.is_empty(),
        "{} mislabeled word tokens:\n{}",
        mislabeled.len(),
        mislabeled.join("\n")
    );

    // Simulate the baseline (uncorrected) and corrected runs through the
    // library and check the separations the acceptance run depends on.
    let (masked, sidecar) = mask_document(&labeled, &policy).expect("mask");
    let (baseline_restored, drifts) = unmask_document(&masked, &sidecar).expect("unmask");
    assert!(drifts.is_empty());
    let baseline_final = transliterate_document(&baseline_restored, &table).expect("translit");

    let lines_in = document_lines(&masked);
    let beam = BeamConfig::default();
    let corrected_lines: Vec<String> = lines_in
        .iter()
        .map(|l| correct_line(l, &channel, &lm, &beam))
        .collect();
    let corrected_doc = apply_corrections(&masked, &corrected_lines).expect("apply");
    let (corrected_restored, drifts) = unmask_document(&corrected_doc, &sidecar).expect("unmask");
    assert!(drifts.is_empty());
    let corrected_final = transliterate_document(&corrected_restored, &table).expect("translit");

    for (pi, spec) in spec_pages.iter().enumerate() {
        for (li, line) in spec.lines.iter().enumerate() {
            let gold_text = gold.pages[pi].lines[li].text();
            let base_text = baseline_final.pages[pi].lines[li].text();
            let corr_text = corrected_final.pages[pi].lines[li].text();
            let base_sim = similarity(&base_text, &gold_text);
            let corr_sim = similarity(&corr_text, &gold_text);
            if line.heavy {
                assert!(
                    base_sim <= 0.4,
                    "heavy page {pi} line {li}: baseline similarity {base_sim} not below threshold"
                );
            } else {
                assert!(
                    base_sim >= 0.6,
                    "page {pi} line {li}: baseline similarity {base_sim} unexpectedly low"
                );
            }
            assert!(
                corr_sim >= 0.9,
                "page {pi} line {li}: corrected similarity {corr_sim} too low \
                 (hyp {corr_text:?}, gold {gold_text:?})"
            );
        }
    }

    let weights = SerWeights::default();
    let base_report = report(&baseline_final, &gold, &weights).expect("baseline report");
    let corr_report = report(&corrected_final, &gold, &weights).expect("corrected report");
    assert!(
        base_report.corpus_cer > 0.02,
        "baseline corpus CER {} too clean to demonstrate correction",
        base_report.corpus_cer
    );
    assert!(
        base_report.mean_ser >= 10.0,
        "baseline mean SER {} too low",
        base_report.mean_ser
    );
    assert!(corr_report.corpus_cer < base_report.corpus_cer);
    assert!(corr_report.mean_ser < base_report.mean_ser);

    // Keep the committed model payloads reviewable.
    let lm_bytes = fs::metadata(dir.join("models/lm.json")).unwrap().len();
    assert!(
        lm_bytes < 400_000,
        "lm.json is {lm_bytes} bytes; shrink the order or corpus"
    );

    let counts: BTreeMap<&str, u64> = [
        ("pages", PAGES as u64),
        ("lines", (PAGES * 12) as u64),
        ("pairs", pair_lines.len() as u64),
        ("langid_lines", langid_lines.len() as u64),
    ]
    .into();
    eprintln!("regenerated synthetic corpus: {counts:?}");
    eprintln!(
        "baseline cer {:.4} ser {:.2} | corrected cer {:.4} ser {:.2}",
        base_report.corpus_cer, base_report.mean_ser, corr_report.corpus_cer, corr_report.mean_ser
    );
}
