use super::Activation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Vec<f64>,
}

fn check(input: &[f64], weights: &[f64], bias: &[f64]) -> Result<(usize, usize)> {
    let (m, n) = (bias.len(), input.len());
    if m == 0 || n == 0 || weights.len() != m * n {
        return Err(Error::config(format!(
            "dense layer with {n} inputs and {m} outputs needs {} weights, got {}",
            m * n,
            weights.len()
        )));
    }
    Ok((m, n))
}

/// `W x + b` with `W` row-major `[outputs × inputs]`.
pub fn dense_affine(input: &[f64], weights: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    let (_, n) = check(input, weights, bias)?;
    Ok(weights
        .chunks_exact(n)
        .zip(bias)
        .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
        .collect())
}

pub fn dense_forward(
    input: &[f64],
    weights: &[f64],
    bias: &[f64],
    activation: Activation,
) -> Result<Vec<f64>> {
    Ok(activation.forward(&dense_affine(input, weights, bias)?))
}

/// Gradients of the affine part given the gradient at the pre-activation.
pub fn dense_backward(
    input: &[f64],
    weights: &[f64],
    bias: &[f64],
    grad_pre: &[f64],
) -> Result<DenseGrads> {
    let (m, n) = check(input, weights, bias)?;
    if grad_pre.len() != m {
        return Err(Error::config(format!(
            "dense upstream gradient has {} values, layer has {m} outputs",
            grad_pre.len()
        )));
    }
    let mut d_w = vec![0.0; m * n];
    let mut d_x = vec![0.0; n];
    for (o, &g) in grad_pre.iter().enumerate() {
        let row = &weights[o * n..(o + 1) * n];
        let d_row = &mut d_w[o * n..(o + 1) * n];
        for i in 0..n {
            d_row[i] = g * input[i];
            d_x[i] += g * row[i];
        }
    }
    Ok(DenseGrads {
        weights: d_w,
        bias: grad_pre.to_vec(),
        input: d_x,
    })
}
