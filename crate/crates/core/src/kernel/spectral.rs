use ndarray::{Array1, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::KernelMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cg_solve, CgOptions, DenseOperator};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Gershgorin,
    PowerIteration,
}

/// An interval `[lower, upper]` containing the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub lower: f64,
    pub upper: f64,
    /// How `lower` was obtained. `upper` always comes from Gershgorin discs.
    pub method: BoundMethod,
}

impl SpectralBounds {
    pub fn new(lower: f64, upper: f64, method: BoundMethod) -> Result<Self> {
        if !(lower > 0.0) || !(lower <= upper) || !upper.is_finite() {
            return Err(Error::Numeric(format!("invalid spectral bounds [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper, method })
    }
}

/// Safety factor applied to the power-iteration estimate of `λ_min`.
pub const POWER_ITERATION_SAFETY: f64 = 0.5;

/// Gershgorin interval `(min_i (a_ii − R_i), max_i (a_ii + R_i))` with
/// `R_i = Σ_{j≠i} |a_ij|`.
pub fn gershgorin(a: ArrayView2<'_, f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, row) in a.rows().into_iter().enumerate() {
        let radius: f64 = row.iter().map(|v| v.abs()).sum::<f64>() - row[i].abs();
        lo = lo.min(row[i] - radius);
        hi = hi.max(row[i] + radius);
    }
    (lo, hi)
}

/// Interval containing the spectrum of `kernel`.
///
/// The upper end is the Gershgorin bound. The lower end is Gershgorin when
/// that is positive; otherwise `power_iters` steps of power iteration on
/// `L⁻¹` (each step one CG solve) estimate `λ_min`, and the estimate is
/// multiplied by [`POWER_ITERATION_SAFETY`].
pub fn spectral_bounds(kernel: &KernelMatrix, power_iters: usize) -> Result<SpectralBounds> {
    if power_iters == 0 {
        return Err(Error::Parameter("power_iters must be at least 1".into()));
    }
    if kernel.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("kernel has non-finite entries".into()));
    }
    let (g_lo, g_hi) = gershgorin(kernel.view());
    if g_lo > 0.0 {
        return SpectralBounds::new(g_lo, g_hi, BoundMethod::Gershgorin);
    }
    let estimate = inverse_power_lambda_min(kernel.view(), power_iters)?;
    SpectralBounds::new((POWER_ITERATION_SAFETY * estimate).min(g_hi), g_hi, BoundMethod::PowerIteration)
}

/// Rayleigh-quotient estimate of `λ_min` from power iteration on `A⁻¹`.
fn inverse_power_lambda_min(a: ArrayView2<'_, f64>, iters: usize) -> Result<f64> {
    let d = a.nrows();
    let op = DenseOperator::new(a);
    let opts = CgOptions {
        tol: 1e-10,
        max_iter: 20 * d.max(10),
        jacobi: true,
    };
    let mut rng = stream(0, Purpose::PowerIteration, d as u64);
    let mut v: Array1<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    v /= v.dot(&v).sqrt();
    let mut mu = 0.0;
    for _ in 0..iters {
        let w = cg_solve(&op, v.view(), &opts)?.solution;
        mu = v.dot(&w);
        let n = w.dot(&w).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numeric("power iteration produced a degenerate vector".into()));
        }
        v = w / n;
    }
    if !(mu > 0.0) {
        return Err(Error::Numeric(format!("power iteration Rayleigh quotient {mu} is not positive")));
    }
    Ok(1.0 / mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_bounds_are_exact() {
        let b = spectral_bounds(&KernelMatrix::identity(5), 3).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        assert_eq!(b.method, BoundMethod::Gershgorin);
    }

    #[test]
    fn diagonal_bounds() {
        let b = spectral_bounds(&KernelMatrix::diagonal(&[2.0, 10.0]).unwrap(), 3).unwrap();
        assert!(b.upper >= 10.0 && b.lower <= 2.0);
    }

    #[test]
    fn power_iteration_fallback() {
        // Gershgorin lower end is 1 − 1.8 < 0; the spectrum is {2.8, 0.1, 0.1}.
        let k = KernelMatrix::new(ndarray::array![[1.0, 0.9, 0.9], [0.9, 1.0, 0.9], [0.9, 0.9, 1.0]]).unwrap();
        let b = spectral_bounds(&k, 20).unwrap();
        assert_eq!(b.method, BoundMethod::PowerIteration);
        assert!(b.lower <= 0.1 && b.lower >= 0.04, "{}", b.lower);
        assert!(b.upper >= 2.8);
    }

    #[test]
    fn zero_iterations_rejected() {
        assert!(spectral_bounds(&KernelMatrix::identity(2), 0).is_err());
    }
}
