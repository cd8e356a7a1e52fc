//! Reference CNN with hand-derived gradients and the Mixup / MixAugment losses.
//!
//! Topology: conv3×3(8)+ReLU+maxpool2 → conv3×3(16)+ReLU+maxpool2 → flatten →
//! dense(64)+ReLU → dropout → dense(K) → softmax.

mod checkpoint;
mod forward;
mod layers;
mod loss;
mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use forward::{backprop, forward, ForwardTrace, Mode};
pub use loss::{
    backward, cce_logit_grad, cce_loss, mix_labels, mixaugment_loss_and_grad,
    mixaugment_loss_factored, mixaugment_loss_sum, mixup_only_loss_and_grad, vanilla_loss_and_grad,
    LOG_CLAMP, SIMPLEX_TOLERANCE,
};
pub use params::{
    Architecture, GradientSet, NetworkParams, CONV1_FILTERS, CONV2_FILTERS, HIDDEN, KERNEL,
    PARAM_NAMES,
};

/// Dropout rate used whenever dropout is switched on.
pub const DEFAULT_DROPOUT: f64 = 0.5;
