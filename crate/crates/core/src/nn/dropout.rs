//! Inverted dropout: survivors are scaled by `1 / (1 - rate)` during training
//! so evaluation is a plain identity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

/// Applies dropout and returns the output together with the per-element
/// multiplier (0 or the survivor scale) needed by the backward pass.
pub fn dropout<R: Rng + ?Sized>(
    input: &[f64],
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((input.to_vec(), vec![1.0; input.len()]));
    }
    let scale = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = input
        .iter()
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { scale })
        .collect();
    let out = input.iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((out, mask))
}

pub fn dropout_backward(mask: &[f64], upstream: &[f64]) -> Vec<f64> {
    mask.iter().zip(upstream).map(|(m, g)| m * g).collect()
}
