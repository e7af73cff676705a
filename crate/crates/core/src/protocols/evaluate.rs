use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{Confusion, MetricsTuple};
use crate::contrastive::{PairClassifier, Prediction};
use crate::corpus::PairCorpus;
use crate::error::{Error, Result};

/// Predictions of one classifier over a set of corpus pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    pub pair_indices: Vec<usize>,
    pub predictions: Vec<Prediction>,
    pub labels: Vec<bool>,
    pub confusion: Confusion,
    pub metrics: MetricsTuple,
    /// Pairs where a zero-norm representation forced a non-clone decision.
    pub degenerate: usize,
}

/// Classify every pair in `pairs` (in parallel; output keeps input order).
pub fn evaluate_pairs<C>(model: &C, corpus: &PairCorpus, pairs: &[usize]) -> Result<PairEvaluation>
where
    C: PairClassifier + Sync,
{
    if pairs.is_empty() {
        return Err(Error::UndefinedMetrics("evaluation split has no pairs".into()));
    }
    let predictions = pairs
        .par_iter()
        .map(|&i| {
            let (l, r) = corpus.resolve(i);
            model.classify(l, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = pairs.iter().map(|&i| corpus.pairs()[i].label.is_clone()).collect();
    let decided: Vec<bool> = predictions.iter().map(|p| p.clone).collect();
    let confusion = Confusion::from_pairs(&decided, &labels)?;
    Ok(PairEvaluation {
        pair_indices: pairs.to_vec(),
        degenerate: predictions.iter().filter(|p| p.degenerate).count(),
        metrics: confusion.metrics(),
        confusion,
        predictions,
        labels,
    })
}
