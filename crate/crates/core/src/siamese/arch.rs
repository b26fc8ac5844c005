use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{pooled_length, Activation, BatchNormConfig, Lrn, Param, ParamRole};

/// Where local response normalization sits in the branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrnPlacement {
    AfterEmbedding,
    AfterEachConv,
    Off,
}

/// Which loss the twin network is trained with. `Bce` adds a one-unit
/// sigmoid head on `|e1 - e2|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Contrastive,
    Bce,
}

/// Shape and layer options of one CNN branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchSpec {
    pub input_length: usize,
    pub conv_channels: usize,
    pub kernel_width: usize,
    pub pool_size: usize,
    pub embedding_dim: usize,
    pub lrn_placement: LrnPlacement,
    pub lrn: Lrn,
    pub head: LossMode,
    /// Activation of the last dense layer.
    pub embedding_activation: Activation,
    pub dropout_rate: f64,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self {
            input_length: 100,
            conv_channels: 16,
            kernel_width: 3,
            pool_size: 2,
            embedding_dim: 36,
            lrn_placement: LrnPlacement::AfterEmbedding,
            lrn: Lrn::default(),
            head: LossMode::Contrastive,
            embedding_activation: Activation::Sigmoid,
            dropout_rate: 0.5,
            bn_epsilon: 1e-5,
            bn_momentum: 0.9,
        }
    }
}

pub(crate) const CONV1_KERNEL: usize = 0;
pub(crate) const CONV1_BIAS: usize = 1;
pub(crate) const CONV2_KERNEL: usize = 2;
pub(crate) const CONV2_BIAS: usize = 3;
pub(crate) const DENSE1_KERNEL: usize = 4;
pub(crate) const DENSE1_BIAS: usize = 5;
pub(crate) const BN_GAMMA: usize = 6;
pub(crate) const BN_BETA: usize = 7;
pub(crate) const DENSE2_KERNEL: usize = 8;
pub(crate) const DENSE2_BIAS: usize = 9;
pub(crate) const HEAD_KERNEL: usize = 10;
pub(crate) const HEAD_BIAS: usize = 11;

impl ArchSpec {
    pub fn with_input_length(input_length: usize) -> Self {
        Self {
            input_length,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_length < 4 {
            return Err(Error::config(format!(
                "input length must be at least 4, got {}",
                self.input_length
            )));
        }
        if self.conv_channels == 0 || self.embedding_dim == 0 {
            return Err(Error::config("channel count and embedding size must be positive"));
        }
        if self.kernel_width.is_multiple_of(2) {
            return Err(Error::config(format!(
                "kernel width must be odd, got {}",
                self.kernel_width
            )));
        }
        if self.pool_size == 0 {
            return Err(Error::config("pool size must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(self.bn_epsilon > 0.0) || !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::config("batch norm needs epsilon > 0 and momentum in [0, 1]"));
        }
        if self.lrn_placement != LrnPlacement::Off {
            self.lrn.validate()?;
        }
        Ok(())
    }

    pub fn pooled_lengths(&self) -> (usize, usize) {
        let first = pooled_length(self.input_length, self.pool_size);
        (first, pooled_length(first, self.pool_size))
    }

    /// Length of the flattened feature map fed to the first dense layer.
    pub fn flatten_len(&self) -> usize {
        self.conv_channels * self.pooled_lengths().1
    }

    pub fn batch_norm(&self) -> BatchNormConfig {
        BatchNormConfig {
            epsilon: self.bn_epsilon,
            momentum: self.bn_momentum,
        }
    }

    /// Zero-filled parameter tensors in canonical order.
    pub fn param_layout(&self) -> Vec<Param> {
        let (c, w, e) = (self.conv_channels, self.kernel_width, self.embedding_dim);
        let mut params = vec![
            Param::zeros("conv1.kernel", vec![c, 1, w], ParamRole::Kernel),
            Param::zeros("conv1.bias", vec![c], ParamRole::Bias),
            Param::zeros("conv2.kernel", vec![c, c, w], ParamRole::Kernel),
            Param::zeros("conv2.bias", vec![c], ParamRole::Bias),
            Param::zeros("dense1.kernel", vec![e, self.flatten_len()], ParamRole::Kernel),
            Param::zeros("dense1.bias", vec![e], ParamRole::Bias),
            Param::zeros("bn.gamma", vec![e], ParamRole::NormScale),
            Param::zeros("bn.beta", vec![e], ParamRole::NormShift),
            Param::zeros("dense2.kernel", vec![e, e], ParamRole::Kernel),
            Param::zeros("dense2.bias", vec![e], ParamRole::Bias),
        ];
        if self.head == LossMode::Bce {
            params.push(Param::zeros("head.kernel", vec![1, e], ParamRole::Kernel));
            params.push(Param::zeros("head.bias", vec![1], ParamRole::Bias));
        }
        params
    }
}
