//! Tensor arithmetic, seeded sampling and a finite-difference gradient oracle.

pub mod codec;
mod gradcheck;
mod rng;
mod sampling;
mod tensor;

pub use gradcheck::finite_diff_grad;
pub use rng::Rng;
pub use sampling::{sample_beta, sample_gamma};
pub use tensor::Tensor;
