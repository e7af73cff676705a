use serde::{Deserialize, Serialize};

use super::loss::cosine_similarity;
use super::projection::{Mode, ProjectionHead, ProjectionKind};
use crate::corpus::CodeSnippet;
use crate::encoder::Encoder;
use crate::error::{Error, Result};

/// Hyperparameters of contrastive training and inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContrastiveConfig {
    pub margin: f64,
    /// Cosine threshold: `cos(r, r') >= threshold` means clone.
    pub threshold: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        Self {
            margin: 0.5,
            threshold: 0.5,
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 30,
            seed: 1,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.margin.is_finite() || self.margin < 0.0 {
            return Err(Error::Validation(format!("margin must be a finite value >= 0, got {}", self.margin)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Validation(format!("threshold must lie in [0, 1], got {}", self.threshold)));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Validation(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// A clone / non-clone decision with its score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub clone: bool,
    pub score: f64,
    /// Set when a representation had zero norm and the score was defined as 0.
    pub degenerate: bool,
}

/// Classify by cosine similarity against `threshold` (ties count as clone).
pub fn cosine_decision(r: &[f64], r_prime: &[f64], threshold: f64) -> Prediction {
    match cosine_similarity(r, r_prime) {
        Some(score) => Prediction {
            clone: score >= threshold,
            score,
            degenerate: false,
        },
        None => Prediction {
            clone: false,
            score: 0.0,
            degenerate: true,
        },
    }
}

/// Anything that labels a snippet pair.
pub trait PairClassifier {
    fn classify(&self, left: &CodeSnippet, right: &CodeSnippet) -> Result<Prediction>;
}

/// Encoder `f`, projection head `g` and the training/inference config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveModel {
    pub(crate) encoder: Encoder,
    pub(crate) head: ProjectionHead,
    pub(crate) config: ContrastiveConfig,
}

impl ContrastiveModel {
    pub fn new(encoder: Encoder, kind: ProjectionKind, config: ContrastiveConfig) -> Result<Self> {
        config.validate()?;
        let head = ProjectionHead::new(kind, encoder.dim());
        Ok(Self { encoder, head, config })
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn encoder_mut(&mut self) -> &mut Encoder {
        &mut self.encoder
    }

    pub fn head(&self) -> &ProjectionHead {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut ProjectionHead {
        &mut self.head
    }

    pub fn config(&self) -> &ContrastiveConfig {
        &self.config
    }

    /// Inference-mode representation `r = g(f(snippet))`.
    pub fn represent(&self, snippet: &CodeSnippet) -> Result<Vec<f64>> {
        self.head.forward_infer(&self.encoder.encode(snippet)?)
    }

    pub fn predict(&self, left: &CodeSnippet, right: &CodeSnippet) -> Result<Prediction> {
        if self.head.mode() != Mode::Infer {
            return Err(Error::Validation("predict requires a model in infer mode".into()));
        }
        let r = self.represent(left)?;
        let r_prime = self.represent(right)?;
        Ok(cosine_decision(&r, &r_prime, self.config.threshold))
    }
}

impl PairClassifier for ContrastiveModel {
    fn classify(&self, left: &CodeSnippet, right: &CodeSnippet) -> Result<Prediction> {
        self.predict(left, right)
    }
}
