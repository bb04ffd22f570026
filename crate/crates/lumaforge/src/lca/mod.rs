//! Double-precision numeric reference of the lighting-aware convolutional
//! attention module and its training losses.
//!
//! Everything here operates on small in-memory tensors; it exists so the
//! module's algebra (three parallel gates, gated residual fusion, the
//! segmentation/consistency loss stack) can be validated end to end against
//! finite differences and hand-computed values, not to train real models.

pub mod backward;
pub mod forward;
pub mod gradcheck;
pub mod loss;
pub mod params;
pub mod selftest;
pub mod tensor;

pub use forward::{
    channel_gate, contrast_gate, fuse, gated_residual, laplacian_filter, lca_forward, project,
    sigmoid, spatial_gate, Block, IdentityBlock, LcaGates, LinearBlock,
};
pub use gradcheck::{
    grad_check, grad_check_with, relative_error, standard_grad_checks, GradCheckReport,
    TensorCheck, FD_STEP, FD_TOLERANCE, GRAD_CHECK_SEEDS,
};
pub use loss::{
    aggregate_instances, bce, consistency_loss, dice, seg_loss, total_loss, LossWeights,
    DICE_SMOOTHING,
};
pub use params::{param_count, LcaConfig, LcaGrads, LcaParams, ParamBreakdown, TENSOR_NAMES};
pub use tensor::Tensor4;
