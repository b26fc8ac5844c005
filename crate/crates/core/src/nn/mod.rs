//! Hand-differentiated layers for the signature CNN.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod lrn;
mod params;
mod pool;
mod tensor;

pub use activation::{relu, relu_grad, sigmoid, sigmoid_grad_from_output, Activation};
pub use batchnorm::{
    batchnorm_backward_eval, batchnorm_backward_train, batchnorm_forward_eval,
    batchnorm_forward_train, update_running_stats, BatchNormCache, BatchNormConfig,
    BatchNormGrads,
};
pub use conv::{conv1d_backward, conv1d_forward, ConvGrads};
pub use dense::{dense_affine, dense_backward, dense_forward, DenseGrads};
pub use dropout::{dropout, dropout_backward, Mode};
pub use lrn::Lrn;
pub use params::{
    apply_max_norm, init_uniform, l2_penalty, max_group_norm, InitScheme, InitSpec, Param, DEFAULT_INIT_RANGE,
    ParamRole,
};
pub use pool::{maxpool1d, maxpool1d_backward, min_window_gap, pooled_length, Pooled};
pub use tensor::Tensor2;
