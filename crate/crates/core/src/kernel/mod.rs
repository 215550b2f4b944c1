//! DPP kernels: the L-ensemble matrix, the synthetic quality/diversity
//! generator, spectral bounds and file formats.

mod io;
mod spectral;
mod synthetic;

pub use io::{kernel_io_roundtrip, load_binary, load_csv, load_kernel, read_binary, save_binary, write_binary, MAGIC, VERSION};
pub use spectral::{gershgorin, spectral_bounds, BoundMethod, SpectralBounds};
pub use synthetic::{generate_synthetic_kernel, SyntheticConfig};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Dense symmetric positive-definite `d×d` kernel, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    data: Array2<f64>,
}

impl KernelMatrix {
    /// Validates symmetry, finiteness and positive definiteness.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let kernel = Self::checked_symmetric(data)?;
        crate::linalg::cholesky(kernel.view()).map_err(|e| e.context("kernel is not positive definite"))?;
        Ok(kernel)
    }

    pub fn from_row_major(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!("{} entries for dimension {dim}", entries.len())));
        }
        let data = Array2::from_shape_vec((dim, dim), entries).map_err(|e| Error::Dimension(e.to_string()))?;
        Self::new(data)
    }

    /// Symmetric and finite, positive definiteness not checked.
    fn checked_symmetric(data: Array2<f64>) -> Result<Self> {
        let (n, m) = data.dim();
        if n != m || n == 0 {
            return Err(Error::Dimension(format!("kernel must be square and non-empty, got {n}×{m}")));
        }
        for i in 0..n {
            for j in 0..n {
                let a = data[[i, j]];
                if !a.is_finite() {
                    return Err(Error::Numeric(format!("non-finite kernel entry at ({i}, {j})")));
                }
                if j > i {
                    let b = data[[j, i]];
                    if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                        return Err(Error::Numeric(format!("kernel not symmetric at ({i}, {j}): {a} vs {b}")));
                    }
                }
            }
        }
        let data = if data.is_standard_layout() { data } else { data.as_standard_layout().to_owned() };
        Ok(Self { data })
    }

    /// For matrices that are positive definite by construction.
    pub(crate) fn from_trusted(data: Array2<f64>) -> Self {
        debug_assert!(data.is_standard_layout() && data.nrows() == data.ncols());
        Self { data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_trusted(Array2::eye(dim))
    }

    /// Diagonal kernel; every entry must be positive.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(Array2::from_diag(&ndarray::arr1(values)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        self.data.as_slice().expect("standard layout")
    }

    /// `L_{items, items}` in the given order.
    pub fn submatrix(&self, items: &[usize]) -> Array2<f64> {
        let t = items.len();
        let mut out = Array2::zeros((t, t));
        for (a, &i) in items.iter().enumerate() {
            let row = self.row(i);
            for (b, &j) in items.iter().enumerate() {
                out[[a, b]] = row[j];
            }
        }
        out
    }

    /// `c · L` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Parameter(format!("scale must be positive, got {c}")));
        }
        Ok(Self::from_trusted(&self.data * c))
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_asymmetric_and_non_pd() {
        assert!(KernelMatrix::new(array![[1.0, 0.5], [0.4, 1.0]]).is_err());
        assert!(KernelMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(KernelMatrix::new(array![[f64::NAN]]).is_err());
        assert!(KernelMatrix::new(Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn accepts_tiny_asymmetry() {
        let k = KernelMatrix::new(array![[2.0, 0.5], [0.5 + 1e-14, 2.0]]).unwrap();
        assert_eq!(k.dim(), 2);
    }

    #[test]
    fn submatrix_follows_item_order() {
        let k = KernelMatrix::new(array![[3.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.0]]).unwrap();
        assert_eq!(k.submatrix(&[2, 0]), array![[1.0, 0.0], [0.0, 3.0]]);
        assert_eq!(k.row(1), &[1.0, 2.0, 0.5]);
    }
}
