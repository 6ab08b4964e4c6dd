//! Dense row-major `f64` matrices with explicit forward/backward kernels.
//!
//! Every kernel accumulates in a fixed order (row-major, inner index
//! ascending), so identical inputs produce bit-identical outputs.

mod gradcheck;
mod matrix;
mod ops;

pub(crate) use ops::{softmax_in_place, softmax_row_backward};
pub use gradcheck::{finite_diff_check, finite_diff_check_adaptive, relative_error, GradCheckReport, Param, GRAD_EPS_FLOOR};
pub use matrix::Matrix;
pub use ops::{
    layer_norm, layer_norm_backward, matmul, matmul_nt, matmul_tn, relu, relu_backward,
    softmax_rows, softmax_rows_backward, tanh_backward, tanh_elem, LayerNormCache,
};
