//! Command-line driver for the OCR post-processing pipeline.
//!
//! Each subcommand runs one pipeline stage on files, and `pipeline` runs
//! every enabled stage in fixed order from a TOML config, writing numbered
//! intermediates plus a content-hash manifest. Exit codes: 0 on success, 1
//! on validation or processing errors, 2 on usage errors.

mod config;
mod manifest;
mod pipeline;
mod stages;

use std::path::PathBuf;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};
use ocrpost::langid::TrainConfig;
use ocrpost::maskio::MaskPolicy;
use ocrpost::postcorrect::{BeamConfig, ExternalCommand};

#[derive(Parser)]
#[command(
    name = "ocrpost",
    version,
    about = "OCR post-processing pipeline: language labeling, reading-order repair, masking, noisy-channel correction, transliteration, and evaluation"
)]
struct Cli {
    /// Pipeline config file (used by the `pipeline` subcommand).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for pipeline artifacts (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run seed (overrides the config; recorded in the manifest).
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Print per-stage progress to standard error.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convert an OCR engine response into the canonical document format.
    Ingest {
        /// OCR response JSON (or an already-canonical document).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the language identification model on a labeled corpus.
    LangidTrain {
        /// Labeled corpus: one `__label__<code><TAB><text>` line per example.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_n: usize,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        /// Hashed feature dimension.
        #[arg(long, default_value_t = 1 << 18)]
        dimension: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
    },
    /// Attach a language label to every token of a document.
    LangidLabel {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Detect columns and repair reading order.
    Reorder {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Minimum inter-column gap as a fraction of the page text width.
        #[arg(long, default_value_t = 0.15)]
        gap_ratio: f64,
    },
    /// Remove non-target-language tokens, numerals, and configured
    /// punctuation, recording them in a sidecar for later reinsertion.
    Mask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
        /// Language label whose tokens are kept for correction.
        #[arg(long)]
        target_lang: String,
        /// Language label to mask (repeatable).
        #[arg(long = "mask-lang")]
        mask_langs: Vec<String>,
        /// Keep all-numeral tokens instead of masking them.
        #[arg(long)]
        keep_numerals: bool,
        /// Punctuation token to mask (repeatable; default: `(` and `)`).
        #[arg(long = "punct")]
        punct: Vec<String>,
    },
    /// Correct every line with the noisy-channel decoder or an external
    /// command.
    Correct {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Trained channel model file.
        #[arg(long, required_unless_present = "external")]
        channel: Option<PathBuf>,
        /// Trained character language model file.
        #[arg(long, required_unless_present = "external")]
        lm: Option<PathBuf>,
        /// External corrector command (program followed by its arguments);
        /// reads lines on stdin, writes the same number of lines on stdout.
        #[arg(long, num_args = 1.., conflicts_with_all = ["channel", "lm"])]
        external: Vec<String>,
        #[arg(long, default_value_t = 8)]
        beam_width: usize,
        /// Weight of the channel score against the language model.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Characters the decoder may reinsert per position.
        #[arg(long, default_value_t = 1)]
        max_insertions: usize,
    },
    /// Train the channel and character language models from aligned
    /// first-pass/gold line pairs (TSV: `observed<TAB>gold`).
    CorrectTrain {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        channel_out: PathBuf,
        #[arg(long)]
        lm_out: PathBuf,
        /// Channel add-k smoothing constant.
        #[arg(long, default_value_t = ocrpost::postcorrect::DEFAULT_CHANNEL_K)]
        channel_k: f64,
        #[arg(long, default_value_t = ocrpost::postcorrect::DEFAULT_LM_ORDER)]
        lm_order: usize,
        /// Language model add-k smoothing constant.
        #[arg(long, default_value_t = ocrpost::postcorrect::DEFAULT_LM_K)]
        lm_k: f64,
    },
    /// Reinsert masked tokens at their recorded positions.
    Unmask {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Rewrite token text through an orthography rule table.
    Translit {
        #[arg(long)]
        input: PathBuf,
        /// Rule table TSV with an `#orthography: <src> -> <dst>` header.
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a hypothesis document against a reference document.
    Eval {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Report JSON output path.
        #[arg(long, default_value = "report.json")]
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        w_insert: f64,
        #[arg(long, default_value_t = 1.0)]
        w_delete: f64,
        #[arg(long, default_value_t = 1.0)]
        w_move: f64,
        /// Minimum line similarity for two lines to count as the same line.
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
    },
    /// Run every enabled stage in fixed order from `--config`.
    Pipeline,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Ingest { input, output } => stages::run_ingest(&input, &output),
        Cmd::LangidTrain {
            corpus,
            output,
            min_n,
            max_n,
            dimension,
            epochs,
            learning_rate,
        } => {
            let config = TrainConfig {
                min_n,
                max_n,
                dimension,
                epochs,
                learning_rate,
                seed: cli.seed.unwrap_or(0),
            };
            stages::run_langid_train(&corpus, &output, &config, cli.verbose)
        }
        Cmd::LangidLabel {
            input,
            model,
            output,
        } => stages::run_langid_label(&input, &model, &output),
        Cmd::Reorder {
            input,
            output,
            gap_ratio,
        } => stages::run_reorder(&input, &output, gap_ratio),
        Cmd::Mask {
            input,
            output,
            sidecar,
            target_lang,
            mask_langs,
            keep_numerals,
            punct,
        } => {
            let mut policy = MaskPolicy::new(target_lang, mask_langs)?;
            policy.mask_numerals = !keep_numerals;
            if !punct.is_empty() {
                policy.mask_punct = punct.into_iter().collect();
            }
            stages::run_mask(&input, &output, &sidecar, &policy)
        }
        Cmd::Correct {
            input,
            output,
            channel,
            lm,
            external,
            beam_width,
            lambda,
            max_insertions,
        } => {
            let mode = if external.is_empty() {
                stages::CorrectMode::Beam {
                    channel: channel.expect("required unless --external"),
                    lm: lm.expect("required unless --external"),
                    config: BeamConfig {
                        beam_width,
                        lambda,
                        max_insertions,
                    },
                }
            } else {
                let (program, args) = external.split_first().expect("non-empty");
                stages::CorrectMode::External(ExternalCommand::new(program.clone(), args.to_vec()))
            };
            stages::run_correct(&input, &output, &mode)
        }
        Cmd::CorrectTrain {
            pairs,
            channel_out,
            lm_out,
            channel_k,
            lm_order,
            lm_k,
        } => stages::run_correct_train(
            &pairs,
            &channel_out,
            &lm_out,
            channel_k,
            lm_order,
            lm_k,
            cli.verbose,
        ),
        Cmd::Unmask {
            input,
            sidecar,
            output,
        } => stages::run_unmask(&input, &sidecar, &output),
        Cmd::Translit {
            input,
            rules,
            output,
        } => stages::run_translit(&input, &rules, &output),
        Cmd::Eval {
            hyp,
            reference,
            output,
            w_insert,
            w_delete,
            w_move,
            theta,
        } => {
            let weights = ocrpost::eval::SerWeights {
                w_insert,
                w_delete,
                w_move,
                theta,
            };
            stages::run_eval(&hyp, &reference, &output, &weights).map(|_| ())
        }
        Cmd::Pipeline => {
            let Some(config) = cli.config else {
                // Missing --config is a usage error, same exit code as
                // missing required arguments elsewhere.
                Cli::command()
                    .error(
                        ErrorKind::MissingRequiredArgument,
                        "the pipeline subcommand requires --config <PATH>",
                    )
                    .exit();
            };
            pipeline::run_pipeline(&config, cli.out.as_deref(), cli.seed, cli.verbose)
        }
    }
}
