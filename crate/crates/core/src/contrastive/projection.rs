//! Projection head `g` mapping encoder output `q` to contrastive space `r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    Identity,
    #[serde(alias = "bn")]
    Batchnorm,
}

impl std::str::FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(ProjectionKind::Identity),
            "batchnorm" | "bn" | "batch_norm" => Ok(ProjectionKind::Batchnorm),
            other => Err(Error::Validation(format!("unknown projection head `{other}`"))),
        }
    }
}

impl std::fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProjectionKind::Identity => "identity",
            ProjectionKind::Batchnorm => "batchnorm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Infer,
}

/// Per-dimension batch normalisation parameters and running statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: 0.9,
            eps: 1e-5,
        }
    }
}

/// Intermediate values of a train-mode forward pass, needed by
/// [`ProjectionHead::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    normalized: Vec<Vec<f64>>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
}

impl ForwardCache {
    /// Rows after standardisation, before the affine transform.
    pub fn normalized(&self) -> &[Vec<f64>] {
        &self.normalized
    }
}

/// Gradients of a backward pass through the head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient {
    pub d_input: Vec<Vec<f64>>,
    /// Empty for the identity head.
    pub d_gamma: Vec<f64>,
    pub d_beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionHead {
    kind: ProjectionKind,
    mode: Mode,
    dim: usize,
    batchnorm: Option<BatchNorm>,
}

impl ProjectionHead {
    pub fn new(kind: ProjectionKind, dim: usize) -> Self {
        Self {
            kind,
            mode: Mode::Infer,
            dim,
            batchnorm: (kind == ProjectionKind::Batchnorm).then(|| BatchNorm::new(dim)),
        }
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn batchnorm(&self) -> Option<&BatchNorm> {
        self.batchnorm.as_ref()
    }

    pub fn batchnorm_mut(&mut self) -> Option<&mut BatchNorm> {
        self.batchnorm.as_mut()
    }

    fn check(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        Ok(())
    }

    /// Inference path: running statistics only.
    pub fn forward_infer(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check(q)?;
        Ok(match &self.batchnorm {
            None => q.to_vec(),
            Some(bn) => (0..self.dim)
                .map(|j| {
                    let x = (q[j] - bn.running_mean[j]) / (bn.running_var[j] + bn.eps).sqrt();
                    bn.gamma[j] * x + bn.beta[j]
                })
                .collect(),
        })
    }

    /// Train-mode forward over a whole batch, normalised with the batch's
    /// own mean and (biased) variance. Does not touch running statistics.
    pub fn forward_train(&self, rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, ForwardCache)> {
        for r in rows {
            self.check(r)?;
        }
        let Some(bn) = &self.batchnorm else {
            return Ok((
                rows.to_vec(),
                ForwardCache {
                    normalized: Vec::new(),
                    batch_mean: Vec::new(),
                    batch_var: Vec::new(),
                },
            ));
        };
        if rows.is_empty() {
            return Err(Error::Validation("batch norm needs a nonempty batch".into()));
        }
        let b = rows.len() as f64;
        let mut mean = vec![0.0; self.dim];
        for r in rows {
            mean.iter_mut().zip(r).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= b);
        let mut var = vec![0.0; self.dim];
        for r in rows {
            for j in 0..self.dim {
                let c = r[j] - mean[j];
                var[j] += c * c;
            }
        }
        var.iter_mut().for_each(|v| *v /= b);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + bn.eps).sqrt()).collect();
        let normalized: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| (0..self.dim).map(|j| (r[j] - mean[j]) * inv_std[j]).collect())
            .collect();
        let out = normalized
            .iter()
            .map(|x| (0..self.dim).map(|j| bn.gamma[j] * x[j] + bn.beta[j]).collect())
            .collect();
        Ok((
            out,
            ForwardCache {
                normalized,
                batch_mean: mean,
                batch_var: var,
            },
        ))
    }

    /// Backpropagate `d_out` through a train-mode forward pass.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[Vec<f64>]) -> HeadGradient {
        let Some(bn) = &self.batchnorm else {
            return HeadGradient {
                d_input: d_out.to_vec(),
                d_gamma: Vec::new(),
                d_beta: Vec::new(),
            };
        };
        let b = d_out.len() as f64;
        let mut d_gamma = vec![0.0; self.dim];
        let mut d_beta = vec![0.0; self.dim];
        // sums over the batch of dx_hat and dx_hat * x_hat
        let mut sum_dxh = vec![0.0; self.dim];
        let mut sum_dxh_xh = vec![0.0; self.dim];
        for (g, xh) in d_out.iter().zip(&cache.normalized) {
            for j in 0..self.dim {
                d_gamma[j] += g[j] * xh[j];
                d_beta[j] += g[j];
                let dxh = g[j] * bn.gamma[j];
                sum_dxh[j] += dxh;
                sum_dxh_xh[j] += dxh * xh[j];
            }
        }
        let inv_std: Vec<f64> = cache.batch_var.iter().map(|v| 1.0 / (v + bn.eps).sqrt()).collect();
        let d_input = d_out
            .iter()
            .zip(&cache.normalized)
            .map(|(g, xh)| {
                (0..self.dim)
                    .map(|j| {
                        let dxh = g[j] * bn.gamma[j];
                        inv_std[j] / b * (b * dxh - sum_dxh[j] - xh[j] * sum_dxh_xh[j])
                    })
                    .collect()
            })
            .collect();
        HeadGradient {
            d_input,
            d_gamma,
            d_beta,
        }
    }

    /// Blend the batch statistics of `cache` into the running statistics:
    /// `running = momentum * running + (1 - momentum) * batch`.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        if let Some(bn) = &mut self.batchnorm {
            let m = bn.momentum;
            for j in 0..self.dim {
                bn.running_mean[j] = m * bn.running_mean[j] + (1.0 - m) * cache.batch_mean[j];
                bn.running_var[j] = m * bn.running_var[j] + (1.0 - m) * cache.batch_var[j];
            }
        }
    }

    /// SGD step on `gamma`/`beta`.
    pub fn apply_gradient(&mut self, grad: &HeadGradient, lr: f64) {
        if let Some(bn) = &mut self.batchnorm {
            for j in 0..self.dim {
                bn.gamma[j] -= lr * grad.d_gamma[j];
                bn.beta[j] -= lr * grad.d_beta[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::seeded(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    }

    #[test]
    fn identity_is_parameter_free() {
        let h = ProjectionHead::new(ProjectionKind::Identity, 3);
        assert!(h.batchnorm().is_none());
        assert_eq!(h.forward_infer(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    fn column_moments(rows: &[Vec<f64>], j: usize) -> (f64, f64) {
        let n = rows.len() as f64;
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn train_mode_standardises_each_dimension() {
        let mut h = ProjectionHead::new(ProjectionKind::Batchnorm, 5);
        let rows = random_rows(16, 5, 2);

        // exact standardisation without the stabiliser
        h.batchnorm_mut().unwrap().eps = 0.0;
        let (_, cache) = h.forward_train(&rows).unwrap();
        for j in 0..5 {
            let (mean, var) = column_moments(cache.normalized(), j);
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-6, "var {var}");
        }

        // with eps the variance is exactly var / (var + eps)
        h.batchnorm_mut().unwrap().eps = 1e-5;
        let (_, cache) = h.forward_train(&rows).unwrap();
        for j in 0..5 {
            let (_, raw) = column_moments(&rows, j);
            let (mean, var) = column_moments(cache.normalized(), j);
            assert!(mean.abs() < 1e-6);
            assert!((var - raw / (raw + 1e-5)).abs() < 1e-6);
        }
    }

    #[test]
    fn infer_uses_running_stats_only() {
        let mut h = ProjectionHead::new(ProjectionKind::Batchnorm, 2);
        let bn = h.batchnorm_mut().unwrap();
        bn.running_mean = vec![1.0, -1.0];
        bn.running_var = vec![4.0 - 1e-5, 1.0 - 1e-5];
        let r = h.forward_infer(&[3.0, 0.0]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut h = ProjectionHead::new(ProjectionKind::Batchnorm, 1);
        let (_, cache) = h.forward_train(&[vec![1.0], vec![3.0]]).unwrap();
        h.update_running_stats(&cache);
        let bn = h.batchnorm().unwrap();
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-12);
        assert!((bn.running_var[0] - (0.9 + 0.1 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dimension_checked() {
        let h = ProjectionHead::new(ProjectionKind::Batchnorm, 2);
        assert!(h.forward_infer(&[1.0]).is_err());
        assert!(h.forward_train(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn parses_kind_names() {
        assert_eq!("BN".parse::<ProjectionKind>().unwrap(), ProjectionKind::Batchnorm);
        assert_eq!("identity".parse::<ProjectionKind>().unwrap(), ProjectionKind::Identity);
        assert!("relu".parse::<ProjectionKind>().is_err());
    }
}
