//! Exact computer algebra for finite-dimensional *-algebras over the
//! Gaussian rationals and their formal deformations: inner-product modules
//! with complete positivity certificates, Morita equivalence bimodules, and
//! order-by-order constructions over truncated power series.
//!
//! Everything is exact: scalars are (truncated polynomials over) Gaussian
//! rationals, every positivity claim is backed by a checkable certificate,
//! and every refutation by a concrete witness. There are no floating-point
//! numbers anywhere in the crate.

pub mod error;
pub mod scalar;
pub mod verdict;
pub mod gaussian;
pub mod linalg;
pub mod module;
pub mod positivity;
pub mod tensor;
pub mod psd;
pub mod algebra;
pub mod amat;
pub mod sample;
pub mod structure;
pub mod morita;
pub mod deform;

pub use error::{Error, Result};
pub use scalar::{BaseRing, Scalar, Sign, Q};
pub use verdict::Verdict;
