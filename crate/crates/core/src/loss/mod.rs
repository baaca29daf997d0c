//! Training objectives on node predictions.

mod ce;
mod cldice;
mod combined;
mod soft_skeleton;

pub use ce::cross_entropy_loss;
pub use cldice::soft_cldice_loss;
pub use combined::{combined_loss, softmax_foreground, LossConfig, LossKind, NodeTargets};
pub use soft_skeleton::{soft_dilate, soft_erode, soft_open, soft_skeleton, SoftSkeleton};

/// Foreground probabilities on the node grid.
pub type SoftMaskField = crate::graph::GridField;
