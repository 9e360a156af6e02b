//! 64-bit tensors, a reverse-mode tape, Adam, and a finite-difference
//! gradient checker. Everything is deterministic given the injected RNG.

mod adam;
mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradReport};
pub use graph::{Graph, Var};
pub use params::{ParamId, ParamSet, Parameter};
pub use tensor::{sigmoid, Tensor};
