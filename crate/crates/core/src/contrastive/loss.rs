//! Margin-based contrastive loss over pairs of projected representations.
//!
//! For a batch of `N` pairs with Euclidean distance `d_i = ||r_i - r'_i||`:
//!
//! ```text
//! L = 1/(2N) * sum_i [ y_i * d_i^2 + (1 - y_i) * max(0, m - d_i)^2 ]
//! ```

use crate::error::{Error, Result};

/// One `(r, r', y)` entry of a loss batch.
#[derive(Debug, Clone, Copy)]
pub struct LossTerm<'a> {
    pub r: &'a [f64],
    pub r_prime: &'a [f64],
    pub clone: bool,
}

impl<'a> LossTerm<'a> {
    pub fn new(r: &'a [f64], r_prime: &'a [f64], clone: bool) -> Self {
        Self { r, r_prime, clone }
    }
}

/// Loss value with gradients for every `r` and `r'`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub d_r: Vec<Vec<f64>>,
    pub d_r_prime: Vec<Vec<f64>>,
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Cosine similarity, or `None` when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

fn validate(batch: &[LossTerm<'_>], margin: f64) -> Result<usize> {
    if margin.is_nan() || margin < 0.0 {
        return Err(Error::Validation(format!("margin must be nonnegative, got {margin}")));
    }
    let first = batch
        .first()
        .ok_or_else(|| Error::Validation("loss batch must not be empty".into()))?;
    let dim = first.r.len();
    for t in batch {
        for v in [t.r, t.r_prime] {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
    }
    Ok(dim)
}

pub fn contrastive_loss(batch: &[LossTerm<'_>], margin: f64) -> Result<f64> {
    validate(batch, margin)?;
    let sum: f64 = batch
        .iter()
        .map(|t| {
            let d = euclidean_distance(t.r, t.r_prime);
            if t.clone {
                d * d
            } else {
                let h = (margin - d).max(0.0);
                h * h
            }
        })
        .sum();
    Ok(sum / (2.0 * batch.len() as f64))
}

/// Loss and its analytic gradient.
///
/// At `r == r'` for a non-clone pair the distance is not differentiable;
/// the zero subgradient is returned there.
pub fn contrastive_loss_grad(batch: &[LossTerm<'_>], margin: f64) -> Result<LossGradient> {
    let dim = validate(batch, margin)?;
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut d_r = Vec::with_capacity(batch.len());
    let mut d_r_prime = Vec::with_capacity(batch.len());
    for t in batch {
        let diff: Vec<f64> = t.r.iter().zip(t.r_prime).map(|(a, b)| a - b).collect();
        let d = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
        let coef = if t.clone {
            loss += d * d;
            1.0 / n
        } else {
            let h = (margin - d).max(0.0);
            loss += h * h;
            if h > 0.0 && d > 0.0 {
                -h / (n * d)
            } else {
                0.0
            }
        };
        let g: Vec<f64> = if coef == 0.0 {
            vec![0.0; dim]
        } else {
            diff.iter().map(|x| coef * x).collect()
        };
        d_r_prime.push(g.iter().map(|x| -x).collect());
        d_r.push(g);
    }
    Ok(LossGradient {
        loss: loss / (2.0 * n),
        d_r,
        d_r_prime,
    })
}
