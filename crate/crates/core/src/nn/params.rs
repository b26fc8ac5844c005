//! Named trainable tensors, uniform initialization and the max-norm
//! constraint.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a parameter tensor does, which decides how it is initialized,
/// regularized and constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    /// Convolution or dense weights; first shape axis is the output unit.
    Kernel,
    Bias,
    /// Batch-norm scale, initialized to one.
    NormScale,
    /// Batch-norm shift, initialized to zero.
    NormShift,
}

impl ParamRole {
    /// Kernels and biases carry the L2 penalty and the max-norm constraint.
    pub fn is_regularized(self) -> bool {
        matches!(self, ParamRole::Kernel | ParamRole::Bias)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub role: ParamRole,
    pub data: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>, role: ParamRole) -> Self {
        let n = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            role,
            data: vec![0.0; n],
        }
    }

    /// Size of one max-norm group: a kernel is constrained per output unit
    /// (all weights feeding that unit), a bias vector as a whole.
    pub fn norm_group_len(&self) -> usize {
        match self.role {
            ParamRole::Kernel => self.shape[1..].iter().product::<usize>().max(1),
            _ => self.data.len().max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub scheme: InitScheme,
    pub seed: u64,
}

/// Half-width of the default uniform range. At 0.05 the activations entering
/// batch norm have variance below its epsilon and the L2 penalty wins, so
/// every embedding collapses to a constant.
pub const DEFAULT_INIT_RANGE: f64 = 0.1;

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            scheme: InitScheme::Uniform { lo: -DEFAULT_INIT_RANGE, hi: DEFAULT_INIT_RANGE },
            seed: 0,
        }
    }
}

impl InitSpec {
    pub fn uniform(lo: f64, hi: f64, seed: u64) -> Self {
        Self {
            scheme: InitScheme::Uniform { lo, hi },
            seed,
        }
    }
}

/// Fills kernels and biases i.i.d. from the init distribution, in slice
/// order. Batch-norm scale/shift get 1/0.
pub fn init_uniform(params: &mut [Param], spec: InitSpec) -> Result<()> {
    let InitScheme::Uniform { lo, hi } = spec.scheme;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::config(format!("uniform init needs lo < hi, got ({lo}, {hi})")));
    }
    let dist = Uniform::new(lo, hi).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for p in params.iter_mut() {
        match p.role {
            ParamRole::Kernel | ParamRole::Bias => {
                p.data.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
            }
            ParamRole::NormScale => p.data.fill(1.0),
            ParamRole::NormShift => p.data.fill(0.0),
        }
    }
    Ok(())
}

/// Rescales every constrained group whose L2 norm exceeds `max_norm` back
/// onto the sphere of radius `max_norm`.
pub fn apply_max_norm(params: &mut [Param], max_norm: f64) {
    for p in params.iter_mut().filter(|p| p.role.is_regularized()) {
        let group = p.norm_group_len();
        for chunk in p.data.chunks_mut(group) {
            let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > max_norm {
                let scale = max_norm / norm;
                chunk.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }
}

/// Largest group norm over all constrained tensors.
pub fn max_group_norm(params: &[Param]) -> f64 {
    params
        .iter()
        .filter(|p| p.role.is_regularized())
        .flat_map(|p| {
            p.data
                .chunks(p.norm_group_len())
                .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// `coefficient * Σ w²` over regularized tensors.
pub fn l2_penalty(params: &[Param], coefficient: f64) -> f64 {
    coefficient
        * params
            .iter()
            .filter(|p| p.role.is_regularized())
            .flat_map(|p| p.data.iter())
            .map(|v| v * v)
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sample_params() -> Vec<Param> {
        vec![
            Param::zeros("conv.kernel", vec![4, 2, 3], ParamRole::Kernel),
            Param::zeros("conv.bias", vec![4], ParamRole::Bias),
            Param::zeros("bn.gamma", vec![4], ParamRole::NormScale),
            Param::zeros("bn.beta", vec![4], ParamRole::NormShift),
        ]
    }

    #[test]
    fn init_is_deterministic_and_in_range() {
        let mut a = sample_params();
        let mut b = sample_params();
        init_uniform(&mut a, InitSpec::uniform(0.3, 0.3 + 1e-6, 12)).unwrap();
        init_uniform(&mut b, InitSpec::uniform(0.3, 0.3 + 1e-6, 12)).unwrap();
        assert_eq!(a, b);
        for v in a[0].data.iter().chain(&a[1].data) {
            assert!((0.3..0.3 + 1e-6).contains(v));
        }
        assert!(a[2].data.iter().all(|&v| v == 1.0));
        assert!(a[3].data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_rejects_empty_range() {
        assert!(init_uniform(&mut sample_params(), InitSpec::uniform(1.0, 1.0, 0)).is_err());
    }

    #[test]
    fn default_range_is_centered() {
        let mut p = vec![Param::zeros("w", vec![100, 100], ParamRole::Kernel)];
        init_uniform(&mut p, InitSpec { seed: 99, ..InitSpec::default() }).unwrap();
        let mean = p[0].data.iter().sum::<f64>() / 1e4;
        assert!(mean.abs() < 0.002, "mean {mean}");
        assert!(p[0].data.iter().all(|v| (-0.1..0.1).contains(v)));
    }

    #[test]
    fn max_norm_identity_below_bound() {
        let mut p = sample_params();
        init_uniform(&mut p, InitSpec::default()).unwrap();
        let before = p.clone();
        apply_max_norm(&mut p, 4.0);
        assert_eq!(p, before);
    }

    #[test]
    fn max_norm_rescales_large_kernel() {
        let mut p = vec![Param::zeros("k", vec![2, 1, 4], ParamRole::Kernel)];
        p[0].data = vec![4.0, 4.0, 4.0, 4.0, 0.1, 0.1, 0.1, 0.1];
        apply_max_norm(&mut p, 4.0);
        assert_eq!(&p[0].data[..4], &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(&p[0].data[4..], &[0.1; 4]);
        let norm = p[0].data[..4].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 4.0).abs() < 1e-9);
    }

    #[test]
    fn no_group_exceeds_bound_after_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = sample_params();
        for q in p.iter_mut() {
            q.data.iter_mut().for_each(|v| *v = rng.random_range(-10.0..10.0));
        }
        apply_max_norm(&mut p, 4.0);
        assert!(max_group_norm(&p) <= 4.0 + 1e-9);
    }
}
