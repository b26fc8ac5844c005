//! The twin network: one CNN branch whose parameters are shared by both
//! members of a signature pair, and the pair losses it is trained with.

mod arch;
mod batch;
mod branch;
mod loss;
mod model;

pub use arch::{ArchSpec, LossMode, LrnPlacement};
pub use batch::{batch_loss, pair_losses, BatchLoss, BatchStats, LossConfig, SignaturePair};
pub use branch::{backward_branch, embed, embed_all, forward_branch, BranchForward, Embedding};
pub use loss::{
    bce_head_loss, bce_head_probability, contrastive_loss, pair_distance, squared_distance,
    BceLoss, PairLoss,
};
pub use model::{init_params, Grads, ModelParams};

pub(crate) use arch::{HEAD_BIAS, HEAD_KERNEL};

impl ModelParams {
    /// Folds batch statistics from a training step into the running
    /// estimates, in the order the branch passes ran.
    pub fn absorb_batch_stats(&mut self, stats: &BatchStats) {
        let momentum = self.arch.bn_momentum;
        for (mean, var) in stats {
            crate::nn::update_running_stats(
                &mut self.running_mean,
                &mut self.running_var,
                mean,
                var,
                momentum,
            );
        }
    }
}
