//! One-dimensional convolution with zero "same" padding and stride 1.
//!
//! Kernels are laid out `[out_channel][in_channel][tap]`. Like most deep
//! learning frameworks this is a cross-correlation: output position `i` of
//! channel `o` is `bias[o] + Σ_c Σ_k w[o][c][k] · x[c][i + k - pad]`.

use super::Tensor2;
use crate::error::{Error, Result};

/// Parameter and input gradients of one convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Tensor2,
}

fn check_shapes(input: &Tensor2, kernel: &[f64], bias: &[f64], width: usize) -> Result<usize> {
    if width == 0 || width.is_multiple_of(2) {
        return Err(Error::config(format!(
            "kernel width must be odd for same padding, got {width}"
        )));
    }
    let out_ch = bias.len();
    if out_ch == 0 {
        return Err(Error::config("convolution needs at least one kernel"));
    }
    let expected = out_ch * input.channels() * width;
    if kernel.len() != expected {
        return Err(Error::config(format!(
            "kernel holds {} weights, expected {out_ch}x{}x{width} = {expected}",
            kernel.len(),
            input.channels()
        )));
    }
    Ok(out_ch)
}

pub fn conv1d_forward(
    input: &Tensor2,
    kernel: &[f64],
    bias: &[f64],
    width: usize,
) -> Result<Tensor2> {
    let out_ch = check_shapes(input, kernel, bias, width)?;
    let in_ch = input.channels();
    let len = input.length();
    let pad = width / 2;
    let mut out = Tensor2::zeros(out_ch, len);
    for o in 0..out_ch {
        let row = out.row_mut(o);
        row.fill(bias[o]);
        for c in 0..in_ch {
            let x = input.row(c);
            let w = &kernel[(o * in_ch + c) * width..(o * in_ch + c + 1) * width];
            for (k, &wk) in w.iter().enumerate() {
                // output i reads x[i + k - pad]; clip i to keep the read in range
                let lo = pad.saturating_sub(k);
                let hi = (len + pad).saturating_sub(k).min(len);
                for i in lo..hi {
                    row[i] += wk * x[i + k - pad];
                }
            }
        }
    }
    Ok(out)
}

pub fn conv1d_backward(
    input: &Tensor2,
    kernel: &[f64],
    bias: &[f64],
    width: usize,
    upstream: &Tensor2,
) -> Result<ConvGrads> {
    let out_ch = check_shapes(input, kernel, bias, width)?;
    if upstream.channels() != out_ch || upstream.length() != input.length() {
        return Err(Error::config(format!(
            "upstream gradient is {}x{}, convolution output is {out_ch}x{}",
            upstream.channels(),
            upstream.length(),
            input.length()
        )));
    }
    let in_ch = input.channels();
    let len = input.length();
    let pad = width / 2;
    let mut d_kernel = vec![0.0; kernel.len()];
    let mut d_bias = vec![0.0; out_ch];
    let mut d_input = Tensor2::zeros(in_ch, len);
    for o in 0..out_ch {
        let g = upstream.row(o);
        d_bias[o] = g.iter().sum();
        for c in 0..in_ch {
            let x = input.row(c);
            let base = (o * in_ch + c) * width;
            for k in 0..width {
                let lo = pad.saturating_sub(k);
                let hi = (len + pad).saturating_sub(k).min(len);
                let wk = kernel[base + k];
                let mut acc = 0.0;
                let dx = d_input.row_mut(c);
                for i in lo..hi {
                    acc += g[i] * x[i + k - pad];
                    dx[i + k - pad] += g[i] * wk;
                }
                d_kernel[base + k] += acc;
            }
        }
    }
    Ok(ConvGrads {
        kernel: d_kernel,
        bias: d_bias,
        input: d_input,
    })
}
