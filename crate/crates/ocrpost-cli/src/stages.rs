//! One function per pipeline stage, shared by the per-stage subcommands and
//! the pipeline driver.
//!
//! Every stage reads its inputs from files and writes its outputs to files,
//! so any stage boundary can be inspected, diffed, or replayed. Warnings go
//! to standard error; only `run_eval` writes to standard output (the report
//! table).

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ocrpost::docmodel::{load_document, parse_document, save_document, Document};
use ocrpost::eval::{render_table, report, report_to_json, EvalReport, SerWeights};
use ocrpost::ingest::{detect_columns, import_ocr_str, reorder_page};
use ocrpost::langid::{self, TrainConfig};
use ocrpost::maskio::{mask_document, unmask_document, MaskPolicy, Sidecar};
use ocrpost::postcorrect::{
    apply_corrections, correct_external, correct_line, document_lines, load_channel, load_lm,
    load_pairs, save_channel, save_lm, train_channel, train_lm, BeamConfig, ExternalCommand,
};
use ocrpost::translit::{load_rules, transliterate_document};

/// How the correction stage turns observed line text into corrected text.
pub enum CorrectMode {
    /// Noisy-channel beam decoding with trained model files.
    Beam {
        channel: std::path::PathBuf,
        lm: std::path::PathBuf,
        config: BeamConfig,
    },
    /// Pipe all lines through an external line-for-line corrector process.
    External(ExternalCommand),
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating directory {}", dir.display()))?;
        }
    }
    Ok(())
}

fn load_doc(path: &Path) -> Result<Document> {
    load_document(path).with_context(|| format!("loading document {}", path.display()))
}

fn save_doc(doc: &Document, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    save_document(doc, path).with_context(|| format!("writing document {}", path.display()))
}

/// Convert an OCR engine response (or a canonical document) into the
/// canonical document format.
pub fn run_ingest(input: &Path, output: &Path) -> Result<()> {
    let data = fs::read_to_string(input)
        .with_context(|| format!("reading OCR input {}", input.display()))?;
    // A canonical document parses strictly; anything else is treated as a
    // vendor OCR response.
    let doc = match parse_document(&data) {
        Ok(doc) => doc,
        Err(_) => {
            let source_id = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "ocr".to_string());
            import_ocr_str(&data, &source_id)
                .with_context(|| format!("parsing OCR response {}", input.display()))?
        }
    };
    save_doc(&doc, output)
}

/// Train the language identification model on a labeled corpus.
pub fn run_langid_train(
    corpus: &Path,
    output: &Path,
    config: &TrainConfig,
    verbose: bool,
) -> Result<()> {
    let corpus = langid::load_corpus(corpus)
        .with_context(|| format!("loading labeled corpus {}", corpus.display()))?;
    let model = langid::train(&corpus, config).context("training language identifier")?;
    if verbose {
        eprintln!(
            "[langid-train] labels {:?}, training accuracy {:.4}",
            model.labels,
            langid::accuracy(&model, &corpus)
        );
    }
    ensure_parent(output)?;
    langid::save_model(&model, output)
        .with_context(|| format!("writing model {}", output.display()))
}

/// Attach a language label to every token of every line.
pub fn run_langid_label(input: &Path, model: &Path, output: &Path) -> Result<()> {
    let mut doc = load_doc(input)?;
    let model = langid::load_model(model)
        .with_context(|| format!("loading langid model {}", model.display()))?;
    for page in &mut doc.pages {
        for line in &mut page.lines {
            let context = line.text();
            if context.trim().is_empty() {
                continue;
            }
            for tok in &mut line.tokens {
                let label = langid::predict_token(&model, &tok.text, &context)
                    .with_context(|| format!("labeling token {:?}", tok.text))?;
                tok.lang = Some(label);
            }
        }
    }
    save_doc(&doc, output)
}

/// Detect columns per page and repair reading order.
pub fn run_reorder(input: &Path, output: &Path, gap_ratio: f64) -> Result<()> {
    let mut doc = load_doc(input)?;
    for page in &mut doc.pages {
        let columns = detect_columns(page, gap_ratio);
        *page = reorder_page(page, &columns);
    }
    save_doc(&doc, output)
}

/// Remove policy-matching tokens, writing the masked document and sidecar.
pub fn run_mask(input: &Path, output: &Path, sidecar: &Path, policy: &MaskPolicy) -> Result<()> {
    let doc = load_doc(input)?;
    let (masked, records) = mask_document(&doc, policy).context("masking document")?;
    save_doc(&masked, output)?;
    ensure_parent(sidecar)?;
    records
        .save(sidecar)
        .with_context(|| format!("writing sidecar {}", sidecar.display()))
}

/// Correct every line of the document.
pub fn run_correct(input: &Path, output: &Path, mode: &CorrectMode) -> Result<()> {
    let doc = load_doc(input)?;
    let lines = document_lines(&doc);
    let corrected = match mode {
        CorrectMode::Beam {
            channel,
            lm,
            config,
        } => {
            let channel = load_channel(channel)
                .with_context(|| format!("loading channel model {}", channel.display()))?;
            let lm =
                load_lm(lm).with_context(|| format!("loading language model {}", lm.display()))?;
            lines
                .iter()
                .map(|l| correct_line(l, &channel, &lm, config))
                .collect()
        }
        CorrectMode::External(command) => {
            correct_external(&lines, command).context("running external corrector")?
        }
    };
    let out = apply_corrections(&doc, &corrected).context("rebuilding corrected document")?;
    save_doc(&out, output)
}

/// Train the channel and character language models from aligned line pairs.
pub fn run_correct_train(
    pairs: &Path,
    channel_out: &Path,
    lm_out: &Path,
    channel_k: f64,
    lm_order: usize,
    lm_k: f64,
    verbose: bool,
) -> Result<()> {
    let pairs =
        load_pairs(pairs).with_context(|| format!("loading training pairs {}", pairs.display()))?;
    let channel = train_channel(&pairs, channel_k).context("training channel model")?;
    let refs: Vec<String> = pairs.iter().map(|p| p.reference.clone()).collect();
    let lm = train_lm(&refs, lm_order, lm_k).context("training language model")?;
    if verbose {
        eprintln!(
            "[correct-train] {} pairs, channel alphabet {} chars",
            pairs.len(),
            channel.alphabet().count()
        );
    }
    ensure_parent(channel_out)?;
    save_channel(&channel, channel_out)
        .with_context(|| format!("writing channel model {}", channel_out.display()))?;
    ensure_parent(lm_out)?;
    save_lm(&lm, lm_out).with_context(|| format!("writing language model {}", lm_out.display()))
}

/// Reinsert masked tokens at their recorded positions.
pub fn run_unmask(input: &Path, sidecar: &Path, output: &Path) -> Result<()> {
    let doc = load_doc(input)?;
    let records =
        Sidecar::load(sidecar).with_context(|| format!("loading sidecar {}", sidecar.display()))?;
    let (restored, drifts) = unmask_document(&doc, &records).context("unmasking document")?;
    for d in &drifts {
        eprintln!(
            "warning: token count drift on page {} line {}: corrector kept {} tokens, expected {}",
            d.page, d.line_id, d.actual_kept, d.expected_kept
        );
    }
    save_doc(&restored, output)
}

/// Rewrite unmasked token text through the orthography rule table.
pub fn run_translit(input: &Path, rules: &Path, output: &Path) -> Result<()> {
    let doc = load_doc(input)?;
    let table =
        load_rules(rules).with_context(|| format!("loading rule table {}", rules.display()))?;
    let out = transliterate_document(&doc, &table).context("transliterating document")?;
    save_doc(&out, output)
}

/// Score a hypothesis document against a reference; writes the JSON report
/// and prints the plain-text table to standard output.
pub fn run_eval(
    hyp: &Path,
    reference: &Path,
    output: &Path,
    weights: &SerWeights,
) -> Result<EvalReport> {
    let hyp_doc = load_doc(hyp)?;
    let ref_doc = load_doc(reference)?;
    let rep = report(&hyp_doc, &ref_doc, weights).context("evaluating document")?;
    ensure_parent(output)?;
    fs::write(output, report_to_json(&rep))
        .with_context(|| format!("writing report {}", output.display()))?;
    print!("{}", render_table(&rep));
    Ok(rep)
}
