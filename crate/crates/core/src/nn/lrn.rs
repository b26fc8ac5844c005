//! Local response normalization: `b_i = a_i / (k + alpha * Σ_{j ∈ N(i)} a_j²)^beta`
//! where `N(i)` is the window of `size` neighbours centred on `i`, clipped at
//! the edges. On a vector the neighbours are adjacent positions; on a
//! [`Tensor2`] they are adjacent channels at the same position.

use serde::{Deserialize, Serialize};

use super::Tensor2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lrn {
    pub k: f64,
    pub size: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Lrn {
    fn default() -> Self {
        Self {
            k: 2.0,
            size: 5,
            alpha: 1e-4,
            beta: 0.75,
        }
    }
}

impl Lrn {
    pub fn validate(&self) -> Result<()> {
        if self.size.is_multiple_of(2) {
            return Err(Error::config(format!("LRN window must be odd, got {}", self.size)));
        }
        if self.k <= 0.0 || self.alpha < 0.0 {
            return Err(Error::config("LRN needs k > 0 and alpha >= 0"));
        }
        Ok(())
    }

    fn denominators(&self, x: &[f64]) -> Vec<f64> {
        let half = self.size / 2;
        let n = x.len();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(n);
                self.k + self.alpha * x[lo..hi].iter().map(|v| v * v).sum::<f64>()
            })
            .collect()
    }

    pub fn forward_vector(&self, x: &[f64]) -> Vec<f64> {
        self.denominators(x)
            .iter()
            .zip(x)
            .map(|(d, v)| v * d.powf(-self.beta))
            .collect()
    }

    pub fn backward_vector(&self, x: &[f64], upstream: &[f64]) -> Vec<f64> {
        let half = self.size / 2;
        let n = x.len();
        let d = self.denominators(x);
        // c_i = g_i * a_i * D_i^(-beta-1), shared by every j in the window of i
        let c: Vec<f64> = (0..n)
            .map(|i| upstream[i] * x[i] * d[i].powf(-self.beta - 1.0))
            .collect();
        (0..n)
            .map(|j| {
                let lo = j.saturating_sub(half);
                let hi = (j + half + 1).min(n);
                let cross: f64 = c[lo..hi].iter().sum();
                upstream[j] * d[j].powf(-self.beta) - 2.0 * self.alpha * self.beta * x[j] * cross
            })
            .collect()
    }

    fn map_columns(input: &Tensor2, mut f: impl FnMut(&[f64], usize) -> Vec<f64>) -> Tensor2 {
        let (ch, len) = (input.channels(), input.length());
        let mut out = Tensor2::zeros(ch, len);
        let mut column = vec![0.0; ch];
        for p in 0..len {
            for c in 0..ch {
                column[c] = input.get(c, p);
            }
            let res = f(&column, p);
            for c in 0..ch {
                out.row_mut(c)[p] = res[c];
            }
        }
        out
    }

    pub fn forward_channels(&self, input: &Tensor2) -> Tensor2 {
        Self::map_columns(input, |col, _| self.forward_vector(col))
    }

    pub fn backward_channels(&self, input: &Tensor2, upstream: &Tensor2) -> Tensor2 {
        let ch = input.channels();
        let mut g = vec![0.0; ch];
        Self::map_columns(input, |col, p| {
            for c in 0..ch {
                g[c] = upstream.get(c, p);
            }
            self.backward_vector(col, &g)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_alpha_divides_by_k_power() {
        let lrn = Lrn { alpha: 0.0, ..Lrn::default() };
        let x = [1.0, -2.0, 3.5];
        let scale = 2f64.powf(0.75);
        for (y, v) in lrn.forward_vector(&x).iter().zip(x) {
            assert!((y - v / scale).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_input_stays_zero() {
        assert!(Lrn::default().forward_vector(&[0.0; 7]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_element_formula() {
        let lrn = Lrn { k: 1.5, size: 1, alpha: 0.3, beta: 0.6 };
        let v = 1.7f64;
        let expected = v / (1.5 + 0.3 * v * v).powf(0.6);
        assert!((lrn.forward_vector(&[v])[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn even_window_rejected() {
        assert!(Lrn { size: 4, ..Lrn::default() }.validate().is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // a large alpha makes the cross terms visible
        let lrn = Lrn { k: 1.0, size: 3, alpha: 0.5, beta: 0.75 };
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.5..1.5)).collect();
        let up: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |x: &[f64]| lrn.forward_vector(x).iter().zip(&up).map(|(a, b)| a * b).sum::<f64>();
        let g = lrn.backward_vector(&x, &up);
        let h = 1e-6;
        for i in 0..6 {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[i] += h;
            m[i] -= h;
            let n = (f(&p) - f(&m)) / (2.0 * h);
            assert!((n - g[i]).abs() / n.abs().max(1e-6) < 1e-6);
        }
    }

    #[test]
    fn channel_mode_matches_per_column_vector_mode() {
        let lrn = Lrn { alpha: 0.2, ..Lrn::default() };
        let t = Tensor2::new(3, 2, vec![1.0, 2.0, -1.0, 0.5, 3.0, -2.0]).unwrap();
        let out = lrn.forward_channels(&t);
        let col0 = lrn.forward_vector(&[1.0, -1.0, 3.0]);
        assert_eq!([out.get(0, 0), out.get(1, 0), out.get(2, 0)], [col0[0], col0[1], col0[2]]);
    }
}
