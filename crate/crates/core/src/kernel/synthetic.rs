use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::KernelMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Parameters of the synthetic quality/diversity kernel
/// `L_ij = q_i φ_iᵀφ_j q_j + shift·δ_ij` with `q_i = exp(β₁ x_i + β₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub dim: usize,
    /// Length of each feature vector `φ_i`.
    pub feature_dim: usize,
    /// `β₁`
    pub quality_slope: f64,
    /// `β₂`
    pub quality_offset: f64,
    /// Added to the diagonal. Values above 1 make every eigenvalue exceed 1,
    /// which makes `log det` monotone.
    pub monotone_shift: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub const DEFAULT_QUALITY_SLOPE: f64 = 0.01;
    pub const DEFAULT_QUALITY_OFFSET: f64 = 0.2;
    pub const DEFAULT_MONOTONE_SHIFT: f64 = 1.01;

    /// Defaults: `feature_dim = dim`, `β₁ = 0.01`, `β₂ = 0.2`, shift 1.01.
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            feature_dim: dim,
            quality_slope: Self::DEFAULT_QUALITY_SLOPE,
            quality_offset: Self::DEFAULT_QUALITY_OFFSET,
            monotone_shift: Self::DEFAULT_MONOTONE_SHIFT,
            seed,
        }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.monotone_shift = shift;
        self
    }

    pub fn with_feature_dim(mut self, feature_dim: usize) -> Self {
        self.feature_dim = feature_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be at least 1".into()));
        }
        if !(self.monotone_shift >= 0.0) || !self.monotone_shift.is_finite() {
            return Err(Error::Config(format!("monotone_shift must be a finite non-negative number, got {}", self.monotone_shift)));
        }
        if !self.quality_slope.is_finite() || !self.quality_offset.is_finite() {
            return Err(Error::Config("quality parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Builds the synthetic kernel.
///
/// Draw order: the feature matrix is filled row by row (item `i`, then
/// feature index) from the `Features` stream with index 0; the quality
/// scores `x_i` come in item order from the `Qualities` stream with index 0.
/// Every draw is a standard normal.
pub fn generate_synthetic_kernel(cfg: &SyntheticConfig) -> Result<KernelMatrix> {
    cfg.validate()?;
    let (d, f) = (cfg.dim, cfg.feature_dim);

    let mut features_rng = stream(cfg.seed, Purpose::Features, 0);
    let mut features = Array2::<f64>::zeros((d, f));
    for mut row in features.rows_mut() {
        for v in row.iter_mut() {
            *v = features_rng.sample(StandardNormal);
        }
        let n = row.dot(&row).sqrt();
        if n > 0.0 {
            row /= n;
        }
    }

    let mut quality_rng = stream(cfg.seed, Purpose::Qualities, 0);
    let quality: Vec<f64> = (0..d)
        .map(|_| {
            let x: f64 = quality_rng.sample(StandardNormal);
            (cfg.quality_slope * x + cfg.quality_offset).exp()
        })
        .collect();

    for (mut row, q) in features.rows_mut().into_iter().zip(&quality) {
        row *= *q;
    }
    let mut data = features.dot(&features.t());
    // Mirror the upper triangle so the result is exactly symmetric.
    for i in 0..d {
        for j in 0..i {
            data[[i, j]] = data[[j, i]];
        }
        data[[i, i]] += cfg.monotone_shift;
    }
    Ok(KernelMatrix::from_trusted(data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_item_kernel_is_squared_quality() {
        let cfg = SyntheticConfig::new(1, 11).with_shift(0.0);
        let k = generate_synthetic_kernel(&cfg).unwrap();
        let mut rng = stream(11, Purpose::Qualities, 0);
        let x: f64 = rng.sample(StandardNormal);
        let q = (0.01 * x + 0.2).exp();
        assert!((k.get(0, 0) - q * q).abs() < 1e-14);
        assert!(k.get(0, 0) > 0.0);
    }

    #[test]
    fn defaults_match_the_reference_choice() {
        let cfg = SyntheticConfig::new(5, 0);
        assert_eq!(cfg.quality_slope, 0.01);
        assert_eq!(cfg.quality_offset, 0.2);
        assert_eq!(cfg.feature_dim, 5);
        assert_eq!(cfg.monotone_shift, 1.01);
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(matches!(generate_synthetic_kernel(&SyntheticConfig::new(0, 1)), Err(Error::Config(_))));
        let cfg = SyntheticConfig::new(3, 1).with_feature_dim(0);
        assert!(matches!(generate_synthetic_kernel(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = SyntheticConfig::new(40, 5);
        let a = generate_synthetic_kernel(&cfg).unwrap();
        let b = generate_synthetic_kernel(&cfg).unwrap();
        let bits = |k: &KernelMatrix| k.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = generate_synthetic_kernel(&SyntheticConfig::new(40, 6)).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }
}
