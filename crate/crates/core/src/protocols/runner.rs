use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::evaluate_pairs;
use super::metrics::{Confusion, MetricsTuple};
use super::split::{ProtocolKind, SplitPlan};
use super::wilcoxon::{wilcoxon_signed_rank, Alternative, TestResult};
use crate::contrastive::{fit_baseline, fit_contrastive, ContrastiveConfig, ProjectionKind, TrainedModel};
use crate::corpus::PairCorpus;
use crate::encoder::EncoderSource;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    Cl,
    Baseline,
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cl" | "contrastive" => Ok(ModelVariant::Cl),
            "baseline" => Ok(ModelVariant::Baseline),
            other => Err(Error::Validation(format!("unknown model variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelVariant::Cl => "cl",
            ModelVariant::Baseline => "baseline",
        })
    }
}

/// Everything needed to train a fresh model for an experiment.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    pub variant: ModelVariant,
    pub head: ProjectionKind,
    pub config: ContrastiveConfig,
    pub source: EncoderSource,
}

impl TrainSpec {
    pub fn fit(&self, corpus: &PairCorpus, train: &[usize]) -> Result<(TrainedModel, Vec<f64>)> {
        Ok(match self.variant {
            ModelVariant::Cl => {
                let (m, r) = fit_contrastive(&self.source, self.head, self.config, corpus, train)?;
                (TrainedModel::Contrastive(m), r.epoch_losses)
            }
            ModelVariant::Baseline => {
                let (m, r) = fit_baseline(&self.source, self.config, corpus, train)?;
                (TrainedModel::Baseline(m), r.epoch_losses)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment_id: String,
    pub protocol: ProtocolKind,
    pub variant: ModelVariant,
    pub metrics: MetricsTuple,
    pub confusion: Confusion,
    pub degenerate: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub final_loss: f64,
}

/// A named significance test in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTest {
    pub name: String,
    #[serde(flatten)]
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub protocol: ProtocolKind,
    pub variant: ModelVariant,
    pub stratified: bool,
    pub rows: Vec<ExperimentResult>,
    pub mean: MetricsTuple,
    pub tests: Vec<NamedTest>,
}

/// Train and evaluate every experiment of `plan`. Experiments run in
/// parallel; results come back in plan order.
pub fn run_plan(
    plan: &SplitPlan,
    train_corpus: &PairCorpus,
    test_corpus: &PairCorpus,
    spec: &TrainSpec,
) -> Result<EvaluationReport> {
    if plan.experiments.is_empty() {
        return Err(Error::Validation("plan has no experiments".into()));
    }
    let rows = plan
        .experiments
        .par_iter()
        .map(|e| {
            let (model, losses) = spec.fit(train_corpus, &e.train)?;
            let eval = evaluate_pairs(&model, test_corpus, &e.test)?;
            Ok(ExperimentResult {
                experiment_id: e.id.clone(),
                protocol: plan.kind,
                variant: spec.variant,
                metrics: eval.metrics,
                confusion: eval.confusion,
                degenerate: eval.degenerate,
                n_train: e.train.len(),
                n_test: e.test.len(),
                final_loss: losses.last().copied().unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics: Vec<MetricsTuple> = rows.iter().map(|r| r.metrics).collect();
    Ok(EvaluationReport {
        protocol: plan.kind,
        variant: spec.variant,
        stratified: plan.stratified,
        mean: MetricsTuple::mean(&metrics).expect("nonempty"),
        rows,
        tests: Vec::new(),
    })
}

impl EvaluationReport {
    /// Add a one-sample signed-rank test of the per-experiment F1 scores
    /// against a reference F1.
    pub fn test_against_reference(&mut self, reference_f1: f64, alternative: Alternative) -> Result<&TestResult> {
        let f1: Vec<f64> = self.rows.iter().map(|r| r.metrics.f1).collect();
        let result = wilcoxon_signed_rank(&f1, reference_f1, alternative)?;
        self.tests.push(NamedTest {
            name: format!("f1_vs_reference_{reference_f1}"),
            result,
        });
        Ok(&self.tests.last().expect("just pushed").result)
    }
}
