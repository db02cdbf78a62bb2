//! Reverse-mode automatic differentiation on a flat tape, plus the small set of
//! neural-network building blocks needed for 1D field-to-field models: dense and
//! 1D convolution layers (circular or replicate padding), max-pooling, nearest
//! upsampling, a residual shared MLP, a 1D U-Net, the AdamW optimizer, and a
//! binary checkpoint container.
//!
//! A [`Tape`] records every operation; calling [`Tensor::backward`] on a scalar
//! result walks the tape in reverse and accumulates gradients for every tensor
//! created with [`Tape::leaf`]. All values are 64-bit floats and all operations
//! are deterministic, so runs with a fixed seed are bitwise reproducible.

mod checkpoint;
mod nn;
mod optim;
mod tape;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, ChannelStats, CheckpointError, NetworkCheckpoint};
pub use nn::{conv1d, dense, forward, maxpool2, upsample2, Activation, ArchDesc, Model, NnError, Param};
pub use optim::AdamW;
pub use tape::{GradSink, Gradients, Tape};
pub use tensor::{PadMode, Tensor};
