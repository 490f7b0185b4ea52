// negated comparisons below deliberately treat NaN as invalid input
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod kinetics;
pub mod log2;
mod ode;
pub mod quadrature;
pub mod rd_solver;
mod serde_ext;
pub mod source;
pub mod toy_pde;

pub use error::{Error, Result};
