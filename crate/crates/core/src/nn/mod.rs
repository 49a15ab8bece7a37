//! Dense feed-forward networks with exact backpropagation, Adam and soft target blending.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::{clip_global_norm, AdamState};
pub use checkpoint::{NetworkDoc, Tensor};
pub use mlp::{soft_update, Activation, Batch, Dense, ForwardCache, Mlp, MlpSpec};
