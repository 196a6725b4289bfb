//! Variational objective, Adam, the training loop and checkpoints.

mod adam;
mod checkpoint;
mod loss;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC, VERSION};
pub use loss::{
    draw_eps, elbo_graph, elbo_loss, elbo_loss_with_eps, kl_term, reconstruction_loss, ElboNodes, ElboValue,
};
pub use train::{train, EpochRecord, StopReason, TrainConfig, TrainReport};
