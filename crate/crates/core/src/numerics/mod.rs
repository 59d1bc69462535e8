//! Dense-tensor arithmetic and the attention building blocks, with a
//! reverse-mode gradient tape providing exact analytic gradients.

mod gradcheck;
pub mod ops;
mod tape;
mod tensor;

pub use gradcheck::grad_check;
pub use ops::{layer_norm, matmul, mlp_block, relu, scaled_dot_attention, softmax_rows};
pub use tape::{Gradients, Tape, VarId};
pub use tensor::Tensor;

/// Default layer-norm epsilon.
pub const LN_EPS: f64 = 1e-5;
