use serde::{Deserialize, Serialize};

use super::arch::ArchSpec;
use crate::error::{Error, Result};
use crate::nn::{self, InitSpec, Param};

/// The single parameter set shared by both branches of the twin network,
/// plus the batch-norm running statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: ArchSpec,
    pub tensors: Vec<Param>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

/// Gradient buffers aligned one-to-one with [`ModelParams::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Grads(params.tensors.iter().map(|p| vec![0.0; p.data.len()]).collect())
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.iter_mut().flatten().for_each(|g| *g *= factor);
    }
}

/// Builds the branch parameters for `arch` and fills them from `init`.
pub fn init_params(arch: &ArchSpec, init: InitSpec) -> Result<ModelParams> {
    arch.validate()?;
    let mut tensors = arch.param_layout();
    nn::init_uniform(&mut tensors, init)?;
    Ok(ModelParams {
        arch: arch.clone(),
        tensors,
        running_mean: vec![0.0; arch.embedding_dim],
        running_var: vec![1.0; arch.embedding_dim],
    })
}

impl ModelParams {
    pub fn get(&self, index: usize) -> &[f64] {
        &self.tensors[index].data
    }

    pub fn apply_max_norm(&mut self, max_norm: f64) {
        nn::apply_max_norm(&mut self.tensors, max_norm);
    }

    pub fn max_group_norm(&self) -> f64 {
        nn::max_group_norm(&self.tensors)
    }

    pub fn l2_penalty(&self, coefficient: f64) -> f64 {
        nn::l2_penalty(&self.tensors, coefficient)
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|p| p.data.len()).sum()
    }

    /// Checks that the stored tensors match the layout `arch` implies.
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let layout = self.arch.param_layout();
        if layout.len() != self.tensors.len() {
            return Err(Error::config(format!(
                "expected {} parameter tensors, found {}",
                layout.len(),
                self.tensors.len()
            )));
        }
        for (want, have) in layout.iter().zip(&self.tensors) {
            if want.name != have.name || want.shape != have.shape || have.data.len() != want.data.len() {
                return Err(Error::config(format!(
                    "parameter {} has shape {:?}, expected {} {:?}",
                    have.name, have.shape, want.name, want.shape
                )));
            }
        }
        let e = self.arch.embedding_dim;
        if self.running_mean.len() != e || self.running_var.len() != e {
            return Err(Error::config("running statistics do not match the embedding size"));
        }
        Ok(())
    }
}
