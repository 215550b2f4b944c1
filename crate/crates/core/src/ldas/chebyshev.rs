use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chebyshev interpolant of `log x` on `[δ, 1−δ]`:
/// `p_n(x) = Σ_k c_k T_k((2x − 1)/(1 − 2δ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevExpansion {
    degree: usize,
    delta: f64,
    coefficients: Vec<f64>,
}

/// Coefficients from the `n+1` Chebyshev nodes `x_j = cos(π(j+½)/(n+1))`:
/// `c_0 = (1/(n+1)) Σ_j f(x_j)` and `c_k = (2/(n+1)) Σ_j f(x_j) T_k(x_j)`,
/// where `f(x) = log((1−2δ)x/2 + ½)`.
pub fn chebyshev_coefficients(degree: usize, delta: f64) -> Result<ChebyshevExpansion> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let nodes = degree + 1;
    let half_width = (1.0 - 2.0 * delta) / 2.0;
    let angles: Vec<f64> = (0..nodes).map(|j| PI * (j as f64 + 0.5) / nodes as f64).collect();
    let values: Vec<f64> = angles.iter().map(|a| (half_width * a.cos() + 0.5).ln()).collect();
    let coefficients = (0..=degree)
        .map(|k| {
            // T_k(cos θ) = cos(kθ)
            let s: f64 = values.iter().zip(&angles).map(|(f, a)| f * (k as f64 * a).cos()).sum();
            let w = if k == 0 { 1.0 } else { 2.0 };
            w * s / nodes as f64
        })
        .collect();
    Ok(ChebyshevExpansion { degree, delta, coefficients })
}

impl ChebyshevExpansion {
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `p_n(x)` by the three-term recurrence.
    pub fn evaluate(&self, x: f64) -> f64 {
        let y = (2.0 * x - 1.0) / (1.0 - 2.0 * self.delta);
        let mut t_prev = 1.0;
        let mut t_curr = y;
        let mut sum = self.coefficients[0];
        if self.degree >= 1 {
            sum += self.coefficients[1] * y;
        }
        for c in self.coefficients.iter().skip(2) {
            let t_next = 2.0 * y * t_curr - t_prev;
            sum += c * t_next;
            t_prev = t_curr;
            t_curr = t_next;
        }
        sum
    }

    /// Largest `|p_n(x) − log x|` on `points` evenly spaced points of
    /// `[δ, 1−δ]`.
    pub fn sup_error(&self, points: usize) -> f64 {
        let (a, b) = (self.delta, 1.0 - self.delta);
        (0..points)
            .map(|i| {
                let x = a + (b - a) * i as f64 / (points.max(2) - 1) as f64;
                (self.evaluate(x) - x.ln()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ_k k² |c_k|`.
    pub fn weighted_coefficient_sum(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| (k * k) as f64 * c.abs())
            .sum()
    }
}

/// `(M, ρ)` for `log` on `[δ, 1−δ]`: `M = 5 log(2/δ)`,
/// `ρ = 1 + 2/(√(2/δ − 1) − 1)`.
pub fn analytic_constants(delta: f64) -> (f64, f64) {
    let m = 5.0 * (2.0 / delta).ln();
    let rho = 1.0 + 2.0 / ((2.0 / delta - 1.0).sqrt() - 1.0);
    (m, rho)
}

/// Upper bound on `Σ k²|c_k|`: `2Mρ(ρ+1)/(ρ−1)³`.
pub fn coefficient_weight_bound(delta: f64) -> f64 {
    let (m, rho) = analytic_constants(delta);
    2.0 * m * rho * (rho + 1.0) / (rho - 1.0).powi(3)
}

/// Bound on the variance of a shared-probe difference of two estimates:
/// `32M²ρ²(ρ+1)² / (m(ρ−1)⁶(1−2δ)²) · ‖A−B‖_F²`.
pub fn variance_bound(delta: f64, probes: usize, frobenius_diff: f64) -> f64 {
    let (m_const, rho) = analytic_constants(delta);
    32.0 * m_const.powi(2) * rho.powi(2) * (rho + 1.0).powi(2)
        / (probes as f64 * (rho - 1.0).powi(6) * (1.0 - 2.0 * delta).powi(2))
        * frobenius_diff.powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_is_log_half() {
        let e = chebyshev_coefficients(0, 0.1).unwrap();
        assert!((e.coefficients()[0] - 0.5f64.ln()).abs() < 1e-15);
        assert!((e.evaluate(0.3) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn delta_out_of_range() {
        for d in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
            assert!(chebyshev_coefficients(5, d).is_err());
        }
    }

    #[test]
    fn interpolates_at_nodes() {
        let n = 9;
        let delta = 0.05;
        let e = chebyshev_coefficients(n, delta).unwrap();
        for j in 0..=n {
            let node = (PI * (j as f64 + 0.5) / (n + 1) as f64).cos();
            let x = (1.0 - 2.0 * delta) / 2.0 * node + 0.5;
            assert!((e.evaluate(x) - x.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn higher_degree_is_more_accurate() {
        let lo = chebyshev_coefficients(10, 0.05).unwrap().sup_error(1000);
        let hi = chebyshev_coefficients(20, 0.05).unwrap().sup_error(1000);
        assert!(hi < lo, "{hi} vs {lo}");
    }

    #[test]
    fn analytic_constants_for_default_delta() {
        let (m, rho) = analytic_constants(0.01);
        assert!((m - 5.0 * 200f64.ln()).abs() < 1e-12);
        assert!((rho - (1.0 + 2.0 / (199f64.sqrt() - 1.0))).abs() < 1e-12);
    }
}
