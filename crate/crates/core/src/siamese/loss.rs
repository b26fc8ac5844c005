//! Pair losses on embeddings.
//!
//! Contrastive: `y·d² + (1 − y)·max(0, m² − d²)` with `d` the Euclidean
//! distance between the two embeddings.
//! Binary cross-entropy: `p = sigmoid(w·|e1 − e2| + b)` is the probability of
//! "same writer", clamped to `[1e-7, 1 − 1e-7]` before the log.

use crate::nn::sigmoid;

pub const BCE_CLAMP: f64 = 1e-7;

/// Loss value and its gradients with respect to both embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    pub d_e1: Vec<f64>,
    pub d_e2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BceLoss {
    pub loss: f64,
    pub probability: f64,
    pub d_e1: Vec<f64>,
    pub d_e2: Vec<f64>,
    pub d_weights: Vec<f64>,
    pub d_bias: f64,
}

pub fn squared_distance(e1: &[f64], e2: &[f64]) -> f64 {
    debug_assert_eq!(e1.len(), e2.len());
    e1.iter().zip(e2).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Euclidean distance `‖e1 − e2‖` (not squared).
pub fn pair_distance(e1: &[f64], e2: &[f64]) -> f64 {
    squared_distance(e1, e2).sqrt()
}

pub fn contrastive_loss(e1: &[f64], e2: &[f64], same_writer: bool, margin: f64) -> PairLoss {
    let d2 = squared_distance(e1, e2);
    let diff: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a - b).collect();
    let (loss, coef) = if same_writer {
        (d2, 2.0)
    } else if margin * margin - d2 > 0.0 {
        (margin * margin - d2, -2.0)
    } else {
        (0.0, 0.0)
    };
    let d_e1: Vec<f64> = diff.iter().map(|d| coef * d).collect();
    let d_e2 = d_e1.iter().map(|g| -g).collect();
    PairLoss { loss, d_e1, d_e2 }
}

pub fn bce_head_probability(e1: &[f64], e2: &[f64], weights: &[f64], bias: f64) -> f64 {
    let z: f64 = bias
        + e1.iter()
            .zip(e2)
            .zip(weights)
            .map(|((a, b), w)| w * (a - b).abs())
            .sum::<f64>();
    sigmoid(z)
}

pub fn bce_head_loss(e1: &[f64], e2: &[f64], weights: &[f64], bias: f64, same_writer: bool) -> BceLoss {
    let p = bce_head_probability(e1, e2, weights, bias);
    let y = if same_writer { 1.0 } else { 0.0 };
    let pc = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    let loss = -(y * pc.ln() + (1.0 - y) * (1.0 - pc).ln());
    // the clamp has zero slope outside its range
    let d_z = if p == pc { p - y } else { 0.0 };
    let diff: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a - b).collect();
    let d_weights = diff.iter().map(|d| d_z * d.abs()).collect();
    let d_e1: Vec<f64> = diff
        .iter()
        .zip(weights)
        .map(|(d, w)| d_z * w * sign(*d))
        .collect();
    let d_e2 = d_e1.iter().map(|g| -g).collect();
    BceLoss {
        loss,
        probability: p,
        d_e1,
        d_e2,
        d_weights,
        d_bias: d_z,
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
