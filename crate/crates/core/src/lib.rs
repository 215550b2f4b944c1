//! Approximate MAP inference for determinantal point processes.
//!
//! The crate provides exact, lazy, first-order partitioned and batch
//! stochastic greedy maximizers of `log det L_X`, the dense linear algebra
//! they rest on (incremental Cholesky, conjugate gradient, bordered Schur
//! solves), a Chebyshev/Hutchinson log-determinant estimator with shareable
//! probe vectors, and a benchmark harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod greedy;
pub mod kernel;
pub mod ldas;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};
pub use kernel::{KernelMatrix, SpectralBounds, SyntheticConfig};
