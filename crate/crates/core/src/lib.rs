//! Reproducing kernels and pointwise bounds for weighted holomorphic `L^2`
//! spaces `HL^2(C, e^{-phi})`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod equivalence;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod poly;
pub mod potential;
pub mod quadrature;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
