use serde::{Deserialize, Serialize};

use super::model::{ContrastiveConfig, PairClassifier, Prediction};
use crate::corpus::CodeSnippet;
use crate::encoder::Encoder;
use crate::error::{Error, Result};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic unit over the element-wise absolute difference `|q - q'|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub(crate) encoder: Encoder,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: f64,
    /// Only `learning_rate`, `batch_size`, `epochs`, `seed` and `threshold`
    /// (on the output probability) are used.
    pub(crate) config: ContrastiveConfig,
}

impl BaselineModel {
    /// Zero-initialised output unit.
    pub fn new(encoder: Encoder, config: ContrastiveConfig) -> Result<Self> {
        config.validate()?;
        let dim = encoder.dim();
        Ok(Self {
            encoder,
            weights: vec![0.0; dim],
            bias: 0.0,
            config,
        })
    }

    pub fn with_parameters(mut self, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() != self.encoder.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.encoder.dim(),
                got: weights.len(),
            });
        }
        self.weights = weights;
        self.bias = bias;
        Ok(self)
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn config(&self) -> &ContrastiveConfig {
        &self.config
    }

    pub(crate) fn logit(&self, q: &[f64], q_prime: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(q.iter().zip(q_prime))
            .map(|(w, (a, b))| w * (a - b).abs())
            .sum::<f64>()
            + self.bias
    }

    /// Clone probability for a pair of encoder outputs.
    pub fn probability(&self, q: &[f64], q_prime: &[f64]) -> f64 {
        sigmoid(self.logit(q, q_prime))
    }

    pub fn predict(&self, left: &CodeSnippet, right: &CodeSnippet) -> Result<Prediction> {
        let p = self.probability(&self.encoder.encode(left)?, &self.encoder.encode(right)?);
        Ok(Prediction {
            clone: p >= self.config.threshold,
            score: p,
            degenerate: false,
        })
    }
}

impl PairClassifier for BaselineModel {
    fn classify(&self, left: &CodeSnippet, right: &CodeSnippet) -> Result<Prediction> {
        self.predict(left, right)
    }
}
