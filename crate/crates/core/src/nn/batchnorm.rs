//! Batch normalization over a batch of feature vectors.
//!
//! Training normalizes with the biased batch variance; the running variance
//! tracks the unbiased estimate. `running = momentum * running + (1 - momentum) * batch`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchNormConfig {
    pub epsilon: f64,
    pub momentum: f64,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            momentum: 0.9,
        }
    }
}

/// Forward-pass state needed by the training backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: Vec<Vec<f64>>,
    pub inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    /// Unbiased batch variance, the quantity folded into the running estimate.
    pub batch_var_unbiased: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGrads {
    pub input: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

fn check_dims(batch: &[Vec<f64>], gamma: &[f64], beta: &[f64]) -> Result<usize> {
    let dim = gamma.len();
    if beta.len() != dim || batch.iter().any(|v| v.len() != dim) {
        return Err(Error::config(format!(
            "batch norm over {dim} features received mismatched vectors"
        )));
    }
    Ok(dim)
}

pub fn batchnorm_forward_train(
    batch: &[Vec<f64>],
    gamma: &[f64],
    beta: &[f64],
    cfg: BatchNormConfig,
) -> Result<(Vec<Vec<f64>>, BatchNormCache)> {
    if batch.len() < 2 {
        return Err(Error::Training(format!(
            "batch normalization in training mode needs at least 2 samples, got {}",
            batch.len()
        )));
    }
    let dim = check_dims(batch, gamma, beta)?;
    let n = batch.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in batch {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for v in batch {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let unbiased: Vec<f64> = var.iter().map(|s| s / (n - 1.0)).collect();
    let inv_std: Vec<f64> = var
        .iter()
        .map(|s| 1.0 / (s / n + cfg.epsilon).sqrt())
        .collect();
    let normalized: Vec<Vec<f64>> = batch
        .iter()
        .map(|v| {
            v.iter()
                .zip(&mean)
                .zip(&inv_std)
                .map(|((x, m), is)| (x - m) * is)
                .collect()
        })
        .collect();
    let out = normalized
        .iter()
        .map(|xh| {
            xh.iter()
                .zip(gamma)
                .zip(beta)
                .map(|((x, g), b)| g * x + b)
                .collect()
        })
        .collect();
    Ok((
        out,
        BatchNormCache {
            normalized,
            inv_std,
            batch_mean: mean,
            batch_var_unbiased: unbiased,
        },
    ))
}

pub fn batchnorm_backward_train(
    upstream: &[Vec<f64>],
    cache: &BatchNormCache,
    gamma: &[f64],
) -> BatchNormGrads {
    let dim = gamma.len();
    let n = upstream.len() as f64;
    let mut d_gamma = vec![0.0; dim];
    let mut d_beta = vec![0.0; dim];
    for (g, xh) in upstream.iter().zip(&cache.normalized) {
        for j in 0..dim {
            d_beta[j] += g[j];
            d_gamma[j] += g[j] * xh[j];
        }
    }
    // dx = gamma * inv_std * (g - mean(g) - x_hat * mean(g * x_hat))
    let input = upstream
        .iter()
        .zip(&cache.normalized)
        .map(|(g, xh)| {
            (0..dim)
                .map(|j| {
                    gamma[j] * cache.inv_std[j] * (g[j] - d_beta[j] / n - xh[j] * d_gamma[j] / n)
                })
                .collect()
        })
        .collect();
    BatchNormGrads {
        input,
        gamma: d_gamma,
        beta: d_beta,
    }
}

pub fn batchnorm_forward_eval(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    running_mean: &[f64],
    running_var: &[f64],
    cfg: BatchNormConfig,
) -> Vec<f64> {
    (0..gamma.len())
        .map(|j| gamma[j] * (x[j] - running_mean[j]) / (running_var[j] + cfg.epsilon).sqrt() + beta[j])
        .collect()
}

/// Backward pass of the inference-mode transform, a per-feature affine map.
/// Returns `(d_input, d_gamma, d_beta)` for one vector.
pub fn batchnorm_backward_eval(
    x: &[f64],
    upstream: &[f64],
    gamma: &[f64],
    running_mean: &[f64],
    running_var: &[f64],
    cfg: BatchNormConfig,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dim = gamma.len();
    let mut dx = vec![0.0; dim];
    let mut dg = vec![0.0; dim];
    for j in 0..dim {
        let inv = 1.0 / (running_var[j] + cfg.epsilon).sqrt();
        dx[j] = upstream[j] * gamma[j] * inv;
        dg[j] = upstream[j] * (x[j] - running_mean[j]) * inv;
    }
    (dx, dg, upstream.to_vec())
}

pub fn update_running_stats(
    running_mean: &mut [f64],
    running_var: &mut [f64],
    cache_mean: &[f64],
    cache_var_unbiased: &[f64],
    momentum: f64,
) {
    for (r, b) in running_mean.iter_mut().zip(cache_mean) {
        *r = momentum * *r + (1.0 - momentum) * b;
    }
    for (r, b) in running_var.iter_mut().zip(cache_var_unbiased) {
        *r = momentum * *r + (1.0 - momentum) * b;
    }
}
