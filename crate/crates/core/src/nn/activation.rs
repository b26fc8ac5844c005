use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient 0 at the kink.
#[inline]
pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative expressed through the output `y = sigmoid(x)`.
#[inline]
pub fn sigmoid_grad_from_output(y: f64) -> f64 {
    y * (1.0 - y)
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    pub fn forward(self, pre: &[f64]) -> Vec<f64> {
        pre.iter().map(|&x| self.apply(x)).collect()
    }

    /// Chain rule through the activation given the pre-activation `pre`, its
    /// output `out` and the gradient flowing into `out`.
    pub fn backward(self, pre: &[f64], out: &[f64], upstream: &[f64]) -> Vec<f64> {
        match self {
            Activation::Relu => pre
                .iter()
                .zip(upstream)
                .map(|(&x, &g)| g * relu_grad(x))
                .collect(),
            Activation::Sigmoid => out
                .iter()
                .zip(upstream)
                .map(|(&y, &g)| g * sigmoid_grad_from_output(y))
                .collect(),
            Activation::Identity => upstream.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_values() {
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(2.0), 2.0);
        assert_eq!(relu_grad(0.0), 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid_grad_from_output(sigmoid(0.0)), 0.25);
        assert!(sigmoid(-800.0).is_finite() && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for act in [Activation::Relu, Activation::Sigmoid, Activation::Identity] {
            for _ in 0..200 {
                let mut x: f64 = rng.random_range(-4.0..4.0);
                while x.abs() < 1e-3 {
                    x = rng.random_range(-4.0..4.0);
                }
                let y = act.apply(x);
                let analytic = act.backward(&[x], &[y], &[1.0])[0];
                let numeric = (act.apply(x + h) - act.apply(x - h)) / (2.0 * h);
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(err < 1e-6 || (analytic == 0.0 && numeric == 0.0), "{act:?} at {x}: {err}");
            }
        }
    }
}
