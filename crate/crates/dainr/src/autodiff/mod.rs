//! Reverse-mode automatic differentiation on dense tensors.
//!
//! A fresh [`Tape`] is built every step; parameters are registered with
//! [`Tape::param`], the forward pass records each operation, and
//! [`Tape::backward`] produces [`Gradients`] for an [`AdamW`] update.

mod optim;
mod tape;
mod tensor;

pub use optim::{AdamW, AdamWConfig};
pub use tape::{CustomGrad, Gradients, Tape, Var};
pub use tensor::Tensor;
