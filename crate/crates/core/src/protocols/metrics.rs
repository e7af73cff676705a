use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion-matrix counts with the clone class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_pairs(predictions: &[bool], labels: &[bool]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: predictions.len(),
            });
        }
        let mut c = Confusion::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Metrics of these counts. Precision and recall with a zero denominator
    /// are reported as 0, as is F1 when `P + R = 0`.
    pub fn metrics(&self) -> MetricsTuple {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        MetricsTuple {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }

    /// True when precision or recall has a zero denominator (no predicted
    /// or no actual positives).
    pub fn f1_undefined(&self) -> bool {
        self.tp + self.fp == 0 || self.tp + self.fn_ == 0
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsTuple {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricsTuple {
    /// Component-wise mean.
    pub fn mean(rows: &[MetricsTuple]) -> Option<MetricsTuple> {
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let sum = |f: fn(&MetricsTuple) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Some(MetricsTuple {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
        })
    }
}

/// Accuracy, precision, recall and F1 of clone predictions.
pub fn compute_metrics(predictions: &[bool], labels: &[bool]) -> Result<MetricsTuple> {
    if labels.is_empty() {
        return Err(Error::UndefinedMetrics("no predictions".into()));
    }
    Ok(Confusion::from_pairs(predictions, labels)?.metrics())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_of_each_outcome() {
        let m = compute_metrics(&[true, true, false, false], &[true, false, true, false]).unwrap();
        assert_eq!(
            m,
            MetricsTuple {
                accuracy: 0.5,
                precision: 0.5,
                recall: 0.5,
                f1: 0.5
            }
        );
    }

    #[test]
    fn perfect_predictions() {
        let y = [true, false, true, true, false];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_clone_on_balanced_labels() {
        let m = compute_metrics(&[true; 4], &[true, false, true, false]).unwrap();
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors_and_degenerate_cases() {
        assert!(matches!(compute_metrics(&[true], &[true, false]), Err(Error::DimensionMismatch { .. })));
        assert!(compute_metrics(&[], &[]).is_err());
        let c = Confusion::from_pairs(&[false, false], &[false, false]).unwrap();
        assert!(c.f1_undefined());
        assert_eq!(c.metrics().f1, 0.0);
        assert_eq!(c.metrics().accuracy, 1.0);
    }
}
