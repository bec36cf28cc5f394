//! CoLU activation, a zoo of comparison activations with analytic
//! derivatives, property analysis, and a small CNN training stack used to
//! compare them.

pub mod activation;
pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use activation::ActivationKind;
pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::Tensor;
