use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// `count` Rademacher vectors of length `dim`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    vectors: Array2<f64>,
    seed: u64,
    index: u64,
}

impl ProbeSet {
    /// Draws probes from the `Probes` stream `(seed, index)`. Each entry is
    /// the sign given by the top bit of one 64-bit draw, filled row by row.
    pub fn rademacher(dim: usize, count: usize, seed: u64, index: u64) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(Error::Parameter(format!("probe set needs dim ≥ 1 and count ≥ 1, got {dim}×{count}")));
        }
        let mut rng = stream(seed, Purpose::Probes, index);
        let vectors = Array2::from_shape_simple_fn((count, dim), || if rng.next_u64() >> 63 == 1 { 1.0 } else { -1.0 });
        Ok(Self { vectors, seed, index })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
    pub fn count(&self) -> usize {
        self.vectors.nrows()
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }
    pub fn probe(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_are_signs_and_deterministic() {
        let a = ProbeSet::rademacher(50, 7, 3, 0).unwrap();
        assert!(a.vectors().iter().all(|v| *v == 1.0 || *v == -1.0));
        assert_eq!(a, ProbeSet::rademacher(50, 7, 3, 0).unwrap());
        assert_ne!(a, ProbeSet::rademacher(50, 7, 3, 1).unwrap());
    }

    #[test]
    fn second_moment_is_identity() {
        let d = 6;
        let n = 10_000;
        let p = ProbeSet::rademacher(d, n, 9, 0).unwrap();
        let m = p.vectors().t().dot(&p.vectors()) / n as f64;
        let tol = 5.0 / (n as f64).sqrt();
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((m[[i, j]] - target).abs() <= tol, "({i},{j}) = {}", m[[i, j]]);
            }
        }
    }

    #[test]
    fn empty_rejected() {
        assert!(ProbeSet::rademacher(0, 3, 0, 0).is_err());
        assert!(ProbeSet::rademacher(3, 0, 0, 0).is_err());
    }
}
