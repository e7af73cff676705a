//! JSON model checkpoints.
//!
//! Floats are written with shortest round-trip formatting and parsed back
//! exactly, so a loaded model reproduces the saved one bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::baseline::BaselineModel;
use super::model::ContrastiveModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "xfclone-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TrainedModel {
    Contrastive(ContrastiveModel),
    Baseline(BaselineModel),
}

impl TrainedModel {
    pub fn variant(&self) -> &'static str {
        match self {
            TrainedModel::Contrastive(_) => "cl",
            TrainedModel::Baseline(_) => "baseline",
        }
    }
}

impl super::model::PairClassifier for TrainedModel {
    fn classify(
        &self,
        left: &crate::corpus::CodeSnippet,
        right: &crate::corpus::CodeSnippet,
    ) -> Result<super::model::Prediction> {
        match self {
            TrainedModel::Contrastive(m) => m.predict(left, right),
            TrainedModel::Baseline(m) => m.predict(left, right),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: TrainedModel,
    #[serde(default)]
    pub epoch_losses: Vec<f64>,
}

impl Checkpoint {
    pub fn new(model: TrainedModel, epoch_losses: Vec<f64>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model,
            epoch_losses,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("unreadable header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format `{}`", header.format)));
        }
        if header.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version {} is not supported (expected {CHECKPOINT_VERSION})",
                header.version
            )));
        }
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, checkpoint.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::{fit_baseline, fit_contrastive, ContrastiveConfig, ProjectionKind};
    use crate::corpus::synthesize_corpus;
    use crate::encoder::{EncoderSettings, EncoderSource};

    #[test]
    fn round_trip_preserves_every_bit() {
        let corpus = synthesize_corpus(2, 6, 0.8, 9).unwrap();
        let idx: Vec<usize> = (0..corpus.len()).collect();
        let source = EncoderSource::Trainable(EncoderSettings {
            dim: 8,
            ..Default::default()
        });
        let cfg = ContrastiveConfig {
            epochs: 4,
            ..Default::default()
        };
        let (cl, r) = fit_contrastive(&source, ProjectionKind::Batchnorm, cfg, &corpus, &idx).unwrap();
        let (bl, _) = fit_baseline(&source, cfg, &corpus, &idx).unwrap();
        for model in [TrainedModel::Contrastive(cl), TrainedModel::Baseline(bl)] {
            let ck = Checkpoint::new(model, r.epoch_losses.clone());
            let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
            assert_eq!(back, ck);
        }
    }

    #[test]
    fn rejects_foreign_or_future_files() {
        assert!(matches!(Checkpoint::from_json("{}"), Err(Error::Checkpoint(_))));
        let wrong = r#"{"format":"other","version":1}"#;
        assert!(matches!(Checkpoint::from_json(wrong), Err(Error::Checkpoint(_))));
        let future = format!(r#"{{"format":"{CHECKPOINT_FORMAT}","version":99}}"#);
        assert!(matches!(Checkpoint::from_json(&future), Err(Error::Checkpoint(_))));
    }
}
