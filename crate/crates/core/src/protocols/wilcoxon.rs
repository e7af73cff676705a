//! Wilcoxon signed-rank tests.
//!
//! The statistic is `W+`, the sum of ranks of positive differences, with
//! average ranks for ties in `|d|` and zero differences dropped. For
//! `n <= EXACT_CUTOFF` the null distribution is enumerated exactly by a
//! subset-sum count over doubled ranks (so half-integer average ranks stay
//! integral). Larger samples use the normal approximation with tie and
//! continuity correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const EXACT_CUTOFF: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Less,
    Greater,
    TwoSided,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "less" => Ok(Alternative::Less),
            "greater" => Ok(Alternative::Greater),
            "two_sided" | "twosided" => Ok(Alternative::TwoSided),
            other => Err(Error::Validation(format!("unknown alternative `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// `W+`.
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    pub alternative: Alternative,
    /// Number of nonzero differences.
    pub n: usize,
    /// Matched-pairs rank-biserial correlation `(W+ - W-) / (W+ + W-)`.
    pub rank_biserial: f64,
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Exact `(P(W+ <= w), P(W+ >= w))` under the null for the given ranks.
fn exact_tails(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    // counts[s] = number of sign assignments whose doubled W+ equals s
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let target = (2.0 * w_plus).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let le: f64 = counts[..=target].iter().sum();
    let ge: f64 = counts[target..].iter().sum();
    (le / all, ge / all)
}

fn normal_tails(ranks: &[f64], abs_d: &[f64], w_plus: f64) -> (f64, f64) {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = abs_d.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    let phi = Normal::standard();
    let le = phi.cdf((w_plus - mean + 0.5) / sd);
    let ge = phi.cdf(-(w_plus - mean - 0.5) / sd);
    (le.min(1.0), ge.min(1.0))
}

/// One-sample signed-rank test of `values` against location `mu0`.
pub fn wilcoxon_signed_rank(values: &[f64], mu0: f64, alternative: Alternative) -> Result<TestResult> {
    if values.iter().any(|v| !v.is_finite()) || !mu0.is_finite() {
        return Err(Error::Validation("signed-rank test needs finite values".into()));
    }
    let diffs: Vec<f64> = values.iter().map(|v| v - mu0).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::AllZeroDifferences);
    }
    let abs_d: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs_d);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).fold(0.0, |acc, (_, r)| acc + r);
    let n = diffs.len();
    let total = (n * (n + 1)) as f64 / 2.0;
    let (method, (le, ge)) = if n <= EXACT_CUTOFF {
        (Method::Exact, exact_tails(&ranks, w_plus))
    } else {
        (Method::NormalApprox, normal_tails(&ranks, &abs_d, w_plus))
    };
    let p_value = match alternative {
        Alternative::Less => le,
        Alternative::Greater => ge,
        Alternative::TwoSided => (2.0 * le.min(ge)).min(1.0),
    };
    Ok(TestResult {
        statistic: w_plus,
        p_value,
        method,
        alternative,
        n,
        rank_biserial: (2.0 * w_plus - total) / total,
    })
}

/// Paired test: the one-sample test on `x - y` against 0.
pub fn wilcoxon_paired(x: &[f64], y: &[f64], alternative: Alternative) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    wilcoxon_signed_rank(&d, 0.0, alternative)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_reference_value() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], 10.0, Alternative::Less).unwrap();
        assert_eq!(r.p_value, 0.125);
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.statistic, 0.0);
        assert!(r.statistic.is_sign_positive());
        assert_eq!(r.rank_biserial, -1.0);
    }

    #[test]
    fn paired_strictly_greater() {
        let x = [5.0, 6.0, 7.0, 8.0, 9.0];
        let y = [1.0, 2.5, 3.0, 1.0, 0.0];
        assert_eq!(wilcoxon_paired(&x, &y, Alternative::Greater).unwrap().p_value, 1.0 / 32.0);
    }

    #[test]
    fn antisymmetry() {
        let x = [0.3, 0.9, 0.4, 0.8, 0.75, 0.2];
        let y = [0.1, 0.5, 0.6, 0.2, 0.7, 0.25];
        let a = wilcoxon_paired(&x, &y, Alternative::Less).unwrap();
        let b = wilcoxon_paired(&y, &x, Alternative::Greater).unwrap();
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn zero_differences() {
        assert!(matches!(
            wilcoxon_paired(&[1.0, 2.0], &[1.0, 2.0], Alternative::TwoSided),
            Err(Error::AllZeroDifferences)
        ));
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn large_samples_switch_to_normal() {
        let v: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&v, 15.2, Alternative::TwoSided).unwrap();
        assert_eq!(r.method, Method::NormalApprox);
        assert!(r.p_value > 0.5);
    }
}
