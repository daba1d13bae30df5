//! First eigenvalue of the anisotropic Laplacian with a nonlocal average term
//! on Wulff sets: closed forms, discretized oracles and saturation curves.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closedform;
pub mod error;
pub mod gauge;
pub mod roots;
pub mod saturation;
pub mod specfun;
pub mod variational;

pub use error::{Error, Result};
