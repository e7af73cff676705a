use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contrastive::{ContrastiveConfig, ProjectionKind};
use crate::corpus::{SamplerConfig, SynthConfig};
use crate::encoder::EncoderSettings;
use crate::error::{Error, Result};
use crate::llmclient::{LlmConfig, PromptKind, SelectionMode, DEFAULT_EVAL_SIZE};
use crate::protocols::{Alternative, ModelVariant, ProtocolKind};

pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub train_corpus: Option<PathBuf>,
    pub test_corpus: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolSettings {
    pub kind: ProtocolKind,
    pub train_fraction: f64,
    /// One-sample signed-rank test of per-experiment F1 against this value.
    pub reference_f1: Option<f64>,
    pub alternative: Alternative,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            kind: ProtocolKind::RandomSeen,
            train_fraction: 0.8,
            reference_f1: None,
            alternative: Alternative::Less,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmRunSettings {
    pub prompt: PromptKind,
    pub mode: SelectionMode,
    pub n: usize,
    pub folds: usize,
}

impl Default for LlmRunSettings {
    fn default() -> Self {
        Self {
            prompt: PromptKind::Contrastive,
            mode: SelectionMode::Unseen,
            n: DEFAULT_EVAL_SIZE,
            folds: 10,
        }
    }
}

/// Everything a command needs; loaded from TOML, overridden by flags and
/// written next to the command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub variant: ModelVariant,
    pub head: ProjectionKind,
    pub encoder: EncoderSettings,
    pub contrastive: ContrastiveConfig,
    pub sampler: SamplerConfig,
    pub protocol: ProtocolSettings,
    pub llm: LlmConfig,
    pub llm_run: LlmRunSettings,
    /// Generator parameters of a `dataset synth` run.
    pub synth: Option<SynthConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            paths: Paths {
                out_dir: PathBuf::from("out"),
                ..Default::default()
            },
            variant: ModelVariant::Cl,
            head: ProjectionKind::Batchnorm,
            encoder: EncoderSettings::default(),
            contrastive: ContrastiveConfig::default(),
            sampler: SamplerConfig::default(),
            protocol: ProtocolSettings::default(),
            llm: LlmConfig::default(),
            llm_run: LlmRunSettings::default(),
            synth: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Write `run_config.json` into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RUN_CONFIG_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reference_configuration() {
        let c = RunConfig::default();
        assert_eq!(c.contrastive.margin, 0.5);
        assert_eq!(c.contrastive.threshold, 0.5);
        assert_eq!(c.head, ProjectionKind::Batchnorm);
        assert_eq!(c.sampler.per_class_cap, 100);
        assert_eq!(c.llm.temperature, 0.0);
        assert_eq!(c.llm_run.n, 404);
    }

    #[test]
    fn toml_overrides_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "seed = 9\nhead = \"identity\"\n[contrastive]\nmargin = 5.0\n[llm]\nmodel = \"m\"\n").unwrap();
        let c = RunConfig::from_toml_file(&p).unwrap();
        assert_eq!((c.seed, c.head, c.contrastive.margin), (9, ProjectionKind::Identity, 5.0));
        assert_eq!(c.contrastive.epochs, 30);
        let saved = c.persist(dir.path()).unwrap();
        assert_eq!(RunConfig::from_json_file(&saved).unwrap(), c);
    }

    #[test]
    fn malformed_toml_reports_a_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.toml");
        std::fs::write(&p, "seed = 1\nseed = = 2\n").unwrap();
        assert!(matches!(RunConfig::from_toml_file(&p), Err(Error::Malformed { line: 2, .. })));
    }
}
