//! Dense numerical primitives shared by the inference code.
//!
//! Everything here works in log space where densities are involved; the
//! Student-t kernels underflow quickly once `D` grows.

mod cholesky;
mod logspace;
mod matrix;
mod student_t;

pub use cholesky::{chol_factor, Cholesky};
pub use logspace::{log_sum_exp, sample_categorical};
pub use matrix::SymMatrix;
pub use student_t::{gaussian_logpdf, mvt_logpdf, StudentT};
pub(crate) use student_t::gaussian_logpdf_factored;
