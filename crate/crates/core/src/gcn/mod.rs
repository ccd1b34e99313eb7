//! Graph convolutional refinement of document embeddings.
//!
//! Each layer computes `act(Â·(X·W) + R(X))` where `X` is the (optionally
//! dropped-out) layer input, `Â` the normalized adjacency (optionally with
//! edge dropout), and `R` either the identity or a learned projection when
//! the layer changes width. Hidden layers use a rectifier; the output layer
//! is linear. Training minimizes a margin hinge loss over graph edges plus a
//! two-view contrastive loss, with exact gradients and Adam updates.

mod adam;
mod loss;
mod model;
mod train;

pub use adam::Adam;
pub use loss::{contrastive_loss, contrastive_loss_grad, hinge_loss, hinge_loss_grad, sample_negatives, Triplet};
pub use model::{DropoutMasks, ForwardCache, GcnModel, Gradients, Layer, Mode};
pub use train::{
    batch_loss_and_grad, train, train_model, BatchInputs, LossConfig, RefinedEmbeddings, TrainConfig,
    TrainOutcome,
};
