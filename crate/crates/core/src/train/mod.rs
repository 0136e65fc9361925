//! Self-supervised training of a transformation decoder.
//!
//! A shared dense encoder embeds an image and its warped copy; a decoder maps
//! the two embeddings to eight homography entries. The decoder is trained to
//! recover the warp under either the surrogate geodesic loss or plain MSE.

mod adam;
mod config;
mod head;
mod model;
mod run;

pub use adam::{AdamParams, AdamState};
pub use config::{LossKind, TrainConfig};
pub use head::{
    decoder_output_to_homography, loss_head_grad, normalization_adjoint, raw_to_matrix, HeadOutput,
};
pub use model::{
    backward, forward, BranchCache, Dense, ForwardCache, ModelWeights, IDENTITY_RAW, RAW_OUTPUTS,
};
pub use run::{
    eval_samples, init_weights, make_sample, mean_angle_error, train, train_with_weights, Sample,
    TrainReport, TrainSummary,
};
