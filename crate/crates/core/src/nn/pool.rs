//! Max pooling along the length axis, ceil mode.
//!
//! A trailing partial window (odd length with pool size 2) is treated as if
//! padded with -inf, so its maximum is taken over the real elements only.

use super::Tensor2;
use crate::error::{Error, Result};

/// Pooled output plus the flat input index that won each window.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub output: Tensor2,
    pub argmax: Vec<usize>,
}

pub fn pooled_length(length: usize, pool_size: usize) -> usize {
    length.div_ceil(pool_size)
}

pub fn maxpool1d(input: &Tensor2, pool_size: usize) -> Result<Pooled> {
    if pool_size == 0 {
        return Err(Error::config("pool size must be positive"));
    }
    let len = input.length();
    let out_len = pooled_length(len, pool_size);
    let mut output = Tensor2::zeros(input.channels(), out_len);
    let mut argmax = Vec::with_capacity(input.channels() * out_len);
    for c in 0..input.channels() {
        let row = input.row(c);
        for j in 0..out_len {
            let start = j * pool_size;
            let end = (start + pool_size).min(len);
            // first maximum wins ties
            let mut best = start;
            for i in start + 1..end {
                if row[i] > row[best] {
                    best = i;
                }
            }
            output.row_mut(c)[j] = row[best];
            argmax.push(c * len + best);
        }
    }
    Ok(Pooled { output, argmax })
}

/// Routes each upstream value back to the input position that won its window.
pub fn maxpool1d_backward(
    input_channels: usize,
    input_length: usize,
    argmax: &[usize],
    upstream: &Tensor2,
) -> Result<Tensor2> {
    if upstream.data().len() != argmax.len() {
        return Err(Error::config(format!(
            "upstream gradient has {} values but {} windows were recorded",
            upstream.data().len(),
            argmax.len()
        )));
    }
    let mut grad = Tensor2::zeros(input_channels, input_length);
    for (&idx, &g) in argmax.iter().zip(upstream.data()) {
        grad.data_mut()[idx] += g;
    }
    Ok(grad)
}

/// Smallest gap between a window's winner and its runner-up. Gradient checks
/// use this to stay away from points where the argmax could flip.
pub fn min_window_gap(input: &Tensor2, pool_size: usize) -> f64 {
    let len = input.length();
    let mut gap = f64::INFINITY;
    for c in 0..input.channels() {
        let row = input.row(c);
        for start in (0..len).step_by(pool_size.max(1)) {
            let end = (start + pool_size).min(len);
            let mut w: Vec<f64> = row[start..end].to_vec();
            if w.len() < 2 {
                continue;
            }
            w.sort_by(|a, b| b.total_cmp(a));
            gap = gap.min(w[0] - w[1]);
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_shapes() {
        let p = maxpool1d(&Tensor2::zeros(16, 100), 2).unwrap();
        assert_eq!((p.output.channels(), p.output.length()), (16, 50));
        let p = maxpool1d(&p.output, 2).unwrap();
        assert_eq!(p.output.length(), 25);
    }

    #[test]
    fn ceil_mode_on_odd_length() {
        let x = Tensor2::from_row(vec![3.0, 1.0, 4.0, 1.0, 5.0]).unwrap();
        let p = maxpool1d(&x, 2).unwrap();
        assert_eq!(p.output.data(), &[3.0, 4.0, 5.0]);
        assert_eq!(p.argmax, vec![0, 2, 4]);
        assert_eq!(pooled_length(47, 2), 24);
        assert_eq!(pooled_length(24, 2), 12);
    }

    #[test]
    fn backward_routes_to_argmax_and_conserves_sum() {
        let x = Tensor2::new(2, 5, vec![3.0, 1.0, 4.0, 1.0, 5.0, -1.0, -2.0, 0.0, 7.0, 2.0]).unwrap();
        let p = maxpool1d(&x, 2).unwrap();
        let up = Tensor2::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let g = maxpool1d_backward(2, 5, &p.argmax, &up).unwrap();
        assert_eq!(g.data(), &[1.0, 0.0, 2.0, 0.0, 3.0, 4.0, 0.0, 0.0, 5.0, 6.0]);
        let total: f64 = g.data().iter().sum();
        assert_eq!(total, up.data().iter().sum::<f64>());
    }
}
