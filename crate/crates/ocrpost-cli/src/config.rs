//! Declarative pipeline configuration.
//!
//! The config is a TOML file with one section per stage plus a `[paths]`
//! section naming every external file the run depends on. Relative paths are
//! resolved against the directory containing the config file, so a config
//! can be committed next to its data. Stage toggles default to enabled.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ocrpost::maskio::MaskPolicy;
use ocrpost::postcorrect::BeamConfig;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Output directory for stage artifacts; `--out` overrides it.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Run seed, recorded in the manifest; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub stages: StageToggles,
    #[serde(default)]
    pub reorder: ReorderConfig,
    #[serde(default)]
    pub mask: Option<MaskConfig>,
    #[serde(default)]
    pub correct: CorrectConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// OCR engine response (or canonical document) feeding the pipeline.
    pub input: Option<PathBuf>,
    pub langid_model: Option<PathBuf>,
    pub channel_model: Option<PathBuf>,
    pub lm_model: Option<PathBuf>,
    /// External corrector command (program + arguments). When set, the
    /// correct stage pipes lines through it instead of beam decoding.
    #[serde(default)]
    pub external: Vec<String>,
    pub rules: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageToggles {
    pub ingest: bool,
    pub langid_label: bool,
    pub reorder: bool,
    pub mask: bool,
    pub correct: bool,
    pub unmask: bool,
    pub translit: bool,
    pub eval: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            ingest: true,
            langid_label: true,
            reorder: true,
            mask: true,
            correct: true,
            unmask: true,
            translit: true,
            eval: true,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReorderConfig {
    /// Minimum inter-column gap as a fraction of the page text width.
    pub gap_ratio: f64,
}

impl Default for ReorderConfig {
    fn default() -> Self {
        ReorderConfig { gap_ratio: 0.15 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskConfig {
    pub target_lang: String,
    #[serde(default)]
    pub mask_langs: Vec<String>,
    #[serde(default = "default_true")]
    pub mask_numerals: bool,
    /// Punctuation tokens to mask; omitted means the default `(` and `)`.
    #[serde(default)]
    pub mask_punct: Option<Vec<String>>,
}

fn default_true() -> bool {
    true
}

impl MaskConfig {
    pub fn policy(&self) -> Result<MaskPolicy> {
        let mut policy = MaskPolicy::new(self.target_lang.clone(), self.mask_langs.clone())
            .context("invalid mask policy")?;
        policy.mask_numerals = self.mask_numerals;
        if let Some(punct) = &self.mask_punct {
            policy.mask_punct = punct.iter().cloned().collect();
        }
        Ok(policy)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectConfig {
    pub beam_width: usize,
    pub lambda: f64,
    pub max_insertions: usize,
}

impl Default for CorrectConfig {
    fn default() -> Self {
        let b = BeamConfig::default();
        CorrectConfig {
            beam_width: b.beam_width,
            lambda: b.lambda,
            max_insertions: b.max_insertions,
        }
    }
}

impl CorrectConfig {
    pub fn beam(&self) -> BeamConfig {
        BeamConfig {
            beam_width: self.beam_width,
            lambda: self.lambda,
            max_insertions: self.max_insertions,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub w_insert: f64,
    pub w_delete: f64,
    pub w_move: f64,
    pub theta: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            w_insert: 1.0,
            w_delete: 1.0,
            w_move: 1.0,
            theta: 0.5,
        }
    }
}

impl EvalConfig {
    pub fn weights(&self) -> ocrpost::eval::SerWeights {
        ocrpost::eval::SerWeights {
            w_insert: self.w_insert,
            w_delete: self.w_delete,
            w_move: self.w_move,
            theta: self.theta,
        }
    }
}

/// Load a config file and resolve its relative paths against the config's
/// own directory.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let data = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: PipelineConfig =
        toml::from_str(&data).with_context(|| format!("parsing config {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for p in [
        &mut cfg.out_dir,
        &mut cfg.paths.input,
        &mut cfg.paths.langid_model,
        &mut cfg.paths.channel_model,
        &mut cfg.paths.lm_model,
        &mut cfg.paths.rules,
        &mut cfg.paths.reference,
    ]
    .into_iter()
    .flatten()
    {
        if p.is_relative() {
            *p = base.join(&p);
        }
    }
    Ok(cfg)
}

/// Check, before any stage runs, that every file an enabled stage needs
/// exists and that the stage combination is coherent.
pub fn preflight(cfg: &PipelineConfig) -> Result<()> {
    let st = &cfg.stages;
    let need = |path: &Option<PathBuf>, what: &str, stage: &str| -> Result<()> {
        match path {
            None => bail!("pre-flight: [paths] {what} is required by the {stage} stage"),
            Some(p) if !p.is_file() => bail!(
                "pre-flight: {what} {} not found ({stage} stage)",
                p.display()
            ),
            Some(_) => Ok(()),
        }
    };
    need(&cfg.paths.input, "input", "first")?;
    if st.langid_label {
        need(&cfg.paths.langid_model, "langid_model", "langid-label")?;
    }
    if st.mask {
        let mask = cfg
            .mask
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("pre-flight: [mask] section is required"))?;
        mask.policy()?;
    }
    if st.unmask && !st.mask {
        bail!("pre-flight: the unmask stage requires the mask stage (the sidecar is produced in the same run)");
    }
    if st.correct && cfg.paths.external.is_empty() {
        need(&cfg.paths.channel_model, "channel_model", "correct")?;
        need(&cfg.paths.lm_model, "lm_model", "correct")?;
    }
    if st.translit {
        need(&cfg.paths.rules, "rules", "translit")?;
    }
    if st.eval {
        need(&cfg.paths.reference, "reference", "eval")?;
        cfg.eval.weights().validate().context("pre-flight")?;
    }
    Ok(())
}
