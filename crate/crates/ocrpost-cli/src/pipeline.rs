//! Full-pipeline driver: runs the enabled stages in fixed order, persisting
//! every intermediate artifact and a manifest of content hashes.
//!
//! Stage order is ingest → langid-label → reorder → mask → correct →
//! unmask → translit → eval. Masking must see final reading order (its
//! indices refer to positions in the reordered lines), which is why reorder
//! precedes mask. A failing stage aborts the run but leaves all completed
//! intermediates and the manifest recorded so far in place.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::{load_config, preflight, PipelineConfig};
use crate::manifest::Manifest;
use crate::stages;

const ARTIFACTS: &[&str] = &[
    "00_ingested.json",
    "01_labeled.json",
    "02_reordered.json",
    "03_masked.json",
    "03_mask_sidecar.jsonl",
    "04_corrected.json",
    "05_unmasked.json",
    "06_translit.json",
    "07_report.json",
];

fn artifact(out_dir: &Path, name: &str) -> PathBuf {
    debug_assert!(ARTIFACTS.contains(&name));
    out_dir.join(name)
}

pub fn run_pipeline(
    config_path: &Path,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
    verbose: bool,
) -> Result<()> {
    let cfg: PipelineConfig = load_config(config_path)?;
    let out_dir: PathBuf = out_override
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = seed_override.unwrap_or(cfg.seed);

    preflight(&cfg)?;
    std::fs::create_dir_all(&out_dir).with_context(|| {
        format!(
            "pre-flight: creating output directory {}",
            out_dir.display()
        )
    })?;

    let mut manifest = Manifest::new(config_path, seed)?;
    let manifest_path = out_dir.join("manifest.json");
    let progress = |name: &str, out: &Path| {
        if verbose {
            eprintln!("[{name}] wrote {}", out.display());
        }
    };

    // The latest document artifact; stages consume and replace it.
    let mut current: PathBuf = cfg
        .paths
        .input
        .clone()
        .expect("pre-flight guarantees an input");
    let st = &cfg.stages;

    if st.ingest {
        let out = artifact(&out_dir, "00_ingested.json");
        stages::run_ingest(&current, &out).context("ingest stage")?;
        manifest.record("ingest", &[&current], &[&out], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("ingest", &out);
        current = out;
    }

    if st.langid_label {
        let model = cfg.paths.langid_model.as_ref().unwrap();
        let out = artifact(&out_dir, "01_labeled.json");
        stages::run_langid_label(&current, model, &out).context("langid-label stage")?;
        manifest.record("langid-label", &[&current, model], &[&out], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("langid-label", &out);
        current = out;
    }

    if st.reorder {
        let out = artifact(&out_dir, "02_reordered.json");
        stages::run_reorder(&current, &out, cfg.reorder.gap_ratio).context("reorder stage")?;
        manifest.record("reorder", &[&current], &[&out], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("reorder", &out);
        current = out;
    }

    let mut sidecar: Option<PathBuf> = None;
    if st.mask {
        let policy = cfg.mask.as_ref().unwrap().policy()?;
        let out = artifact(&out_dir, "03_masked.json");
        let sc = artifact(&out_dir, "03_mask_sidecar.jsonl");
        stages::run_mask(&current, &out, &sc, &policy).context("mask stage")?;
        manifest.record("mask", &[&current], &[&out, &sc], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("mask", &out);
        current = out;
        sidecar = Some(sc);
    }

    if st.correct {
        let mode = if cfg.paths.external.is_empty() {
            stages::CorrectMode::Beam {
                channel: cfg.paths.channel_model.clone().unwrap(),
                lm: cfg.paths.lm_model.clone().unwrap(),
                config: cfg.correct.beam(),
            }
        } else {
            let (program, args) = cfg.paths.external.split_first().unwrap();
            stages::CorrectMode::External(ocrpost::postcorrect::ExternalCommand::new(
                program.clone(),
                args.to_vec(),
            ))
        };
        let out = artifact(&out_dir, "04_corrected.json");
        stages::run_correct(&current, &out, &mode).context("correct stage")?;
        let mut inputs: Vec<&Path> = vec![&current];
        if let stages::CorrectMode::Beam { channel, lm, .. } = &mode {
            inputs.push(channel);
            inputs.push(lm);
        }
        manifest.record("correct", &inputs, &[&out], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("correct", &out);
        current = out;
    }

    if st.unmask {
        let sc = sidecar.as_ref().expect("pre-flight requires mask stage");
        let out = artifact(&out_dir, "05_unmasked.json");
        stages::run_unmask(&current, sc, &out).context("unmask stage")?;
        manifest.record("unmask", &[&current, sc], &[&out], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("unmask", &out);
        current = out;
    }

    if st.translit {
        let rules = cfg.paths.rules.as_ref().unwrap();
        let out = artifact(&out_dir, "06_translit.json");
        stages::run_translit(&current, rules, &out).context("translit stage")?;
        manifest.record("translit", &[&current, rules], &[&out], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("translit", &out);
        current = out;
    }

    if st.eval {
        let reference = cfg.paths.reference.as_ref().unwrap();
        let out = artifact(&out_dir, "07_report.json");
        stages::run_eval(&current, reference, &out, &cfg.eval.weights()).context("eval stage")?;
        manifest.record("eval", &[&current, reference], &[&out], &out_dir)?;
        manifest.write(&manifest_path)?;
        progress("eval", &out);
    }

    Ok(())
}
