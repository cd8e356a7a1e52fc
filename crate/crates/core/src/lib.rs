//! Mixup and MixAugment image-classification training toolkit.
//!
//! * [`numerics`]: tensors, seeded sampling (Gamma/Beta), gradient oracle.
//! * [`augment`]: Mixup virtual examples, batch triples, flipping.
//! * [`network`]: reference CNN, cross-entropy losses, backpropagation, checkpoints.
//! * [`train`]: Adam, training loop with early stopping.
//! * [`metrics`]: confusion matrix and derived scores.
//! * [`dataio`]: NetPBM and manifest loading, landmark alignment, synthetic data.
//! * [`cli`]: the `mixaug` command-line front end.

pub mod augment;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod metrics;
pub mod network;
pub mod numerics;
pub mod train;

pub use error::{Error, Result};
