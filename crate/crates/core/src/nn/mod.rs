//! Dense feed-forward networks with hand-written reverse-mode gradients.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{decode, encode, load, save};
pub use mlp::{
    backward, forward, init_params, soft_update, Activation, Architecture, ForwardCache,
    GradTarget, Gradients, Layer, LayerGrad, Mlp,
};
