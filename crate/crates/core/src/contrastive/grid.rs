use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::ContrastiveConfig;
use super::projection::ProjectionKind;
use super::trainer::fit_contrastive;
use crate::corpus::PairCorpus;
use crate::encoder::EncoderSource;
use crate::error::{Error, Result};
use crate::protocols::{evaluate_pairs, MetricsTuple};

pub const DEFAULT_MARGINS: [f64; 3] = [0.5, 5.0, 50.0];
pub const DEFAULT_HEADS: [ProjectionKind; 2] = [ProjectionKind::Identity, ProjectionKind::Batchnorm];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub margins: Vec<f64>,
    pub heads: Vec<ProjectionKind>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            margins: DEFAULT_MARGINS.to_vec(),
            heads: DEFAULT_HEADS.to_vec(),
        }
    }
}

impl Grid {
    pub fn cells(&self) -> Vec<(f64, ProjectionKind)> {
        self.margins
            .iter()
            .flat_map(|&m| self.heads.iter().map(move |&g| (m, g)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub margin: f64,
    pub head: ProjectionKind,
    pub metrics: MetricsTuple,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridCell,
    pub table: Vec<GridCell>,
}

/// Highest validation F1; ties go to the smaller margin, then identity.
pub fn select_best(table: &[GridCell]) -> Option<&GridCell> {
    table.iter().min_by(|a, b| {
        b.metrics
            .f1
            .total_cmp(&a.metrics.f1)
            .then(a.margin.total_cmp(&b.margin))
            .then(a.head.cmp(&b.head))
    })
}

/// Train one contrastive model per grid cell on `train` and score it on
/// `validation`. Cells run in parallel, each with its own model.
pub fn grid_search(
    source: &EncoderSource,
    grid: &Grid,
    base: ContrastiveConfig,
    corpus: &PairCorpus,
    train: &[usize],
    validation: &[usize],
) -> Result<GridResult> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Validation("grid has no cells".into()));
    }
    let table = cells
        .par_iter()
        .map(|&(margin, head)| {
            let cfg = ContrastiveConfig { margin, ..base };
            let (model, report) = fit_contrastive(source, head, cfg, corpus, train)?;
            let eval = evaluate_pairs(&model, corpus, validation)?;
            Ok(GridCell {
                margin,
                head,
                metrics: eval.metrics,
                final_loss: report.epoch_losses.last().copied().unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = select_best(&table).cloned().expect("nonempty table");
    Ok(GridResult { best, table })
}
