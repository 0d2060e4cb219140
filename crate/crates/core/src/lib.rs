//! Nested Bethe ansatz workbench for the trigonometric SU(3) spin chain with
//! generic non-diagonal open boundaries.
//!
//! The crate builds every object of the construction as a dense matrix on
//! small chains (N ≤ 4), solves the two-level Bethe equations, assembles the
//! eigenstates and checks them against exact diagonalization.

pub mod bae;
pub mod bethe;
pub mod boundary;
pub mod chain;
pub mod error;
pub mod linalg;
pub mod nested;
pub mod reproduce;
pub mod rmatrix;
pub mod scalar;
pub mod suite;
pub mod tables;
pub mod tq;

pub use error::{Error, Result};
pub use linalg::{CMat, Cplx};
