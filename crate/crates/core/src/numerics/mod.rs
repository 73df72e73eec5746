//! Dense `f64` linear algebra, activations, losses and gradient checking.

mod gradcheck;
mod linalg;
mod ops;
mod param;
mod rng;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, ParamCheck, TINY_GRAD};
pub use linalg::solve;
pub use ops::{
    argmax, cross_entropy, cross_entropy_with_grad, gelu, gelu_grad, layer_norm, layer_norm_rows,
    layer_norm_rows_backward, matmul, matmul_nt, matmul_tn, softmax, softmax_rows,
    softmax_rows_backward, LayerNormCache, LAYER_NORM_EPS,
};
pub use param::{ParamId, ParamStore, Parameter};
pub use rng::{mix_seed, SeededRng};
pub use tensor::Tensor2D;
