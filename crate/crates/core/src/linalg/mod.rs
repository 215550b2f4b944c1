//! Dense linear algebra used by the greedy maximizers.
//!
//! Matrices are `ndarray` arrays in row-major order. Blocks of vectors are
//! stored one vector per row so that operator application is a single
//! matrix product.

mod bordered;
mod cg;
mod cholesky;
mod gain;

pub use bordered::{border_average, bordered_inverse_columns, mat_inner_gain, BorderedFamily, BorderedKernel};
pub use cg::{cg_solve, cg_solve_block, CgOptions, CgReport, DenseOperator, LinearOperator};
pub use cholesky::{cholesky, cholesky_logdet, CholeskyFactor};
pub use gain::{schur_marginal_gain, GainMode};
pub(crate) use gain::log_or_neg_inf;

use ndarray::ArrayView2;

/// Inner product with four independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results are reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    let mut s = [0.0f64; 4];
    for (x, y) in ca.zip(cb) {
        s[0] += x[0] * y[0];
        s[1] += x[1] * y[1];
        s[2] += x[2] * y[2];
        s[3] += x[3] * y[3];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Frobenius norm of a matrix.
pub fn frobenius_norm(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
