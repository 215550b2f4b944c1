use ndarray::{Array2, ArrayView2};

use super::{axpy, dot};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor that can grow one row at a time.
///
/// Rows are packed: row `r` holds `r + 1` entries starting at `r(r+1)/2`.
/// Appending a row never moves existing data, which is what the greedy
/// maximizers need when they add an item to the selected set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CholeskyFactor {
    order: usize,
    packed: Vec<f64>,
    log_det: f64,
}

impl CholeskyFactor {
    /// Factor of the 0×0 matrix; its log-determinant is 0.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_capacity(order: usize) -> Self {
        Self {
            order: 0,
            packed: Vec::with_capacity(order * (order + 1) / 2),
            log_det: 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `log det` of the factored matrix, `2 Σ log diag`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Row `r` of the factor, entries `0..=r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        let start = r * (r + 1) / 2;
        &self.packed[start..start + r + 1]
    }

    pub fn diag(&self, r: usize) -> f64 {
        self.row(r)[r]
    }

    /// Solves `F y = b` in place.
    pub fn forward_solve_in_place(&self, y: &mut [f64]) {
        assert_eq!(y.len(), self.order, "forward solve length");
        for r in 0..self.order {
            let row = self.row(r);
            let s = dot(&row[..r], &y[..r]);
            y[r] = (y[r] - s) / row[r];
        }
    }

    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        self.forward_solve_in_place(&mut y);
        y
    }

    /// Solves `Fᵀ x = y` in place.
    pub fn backward_solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.order, "backward solve length");
        for r in (0..self.order).rev() {
            let row = self.row(r);
            x[r] /= row[r];
            let xr = x[r];
            axpy(-xr, &row[..r], &mut x[..r]);
        }
    }

    /// Solves `(F Fᵀ) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_solve_in_place(&mut x);
        self.backward_solve_in_place(&mut x);
        x
    }

    /// `corner − borderᵀ A⁻¹ border` for the matrix `A = F Fᵀ`, i.e. the
    /// Schur complement of `A` in the bordered matrix `[[A, b], [bᵀ, c]]`.
    pub fn schur_complement(&self, border: &[f64], corner: f64) -> f64 {
        let y = self.forward_solve(border);
        corner - dot(&y, &y)
    }

    /// Appends one row/column, factoring `[[A, border], [borderᵀ, corner]]`.
    /// Returns the increase in log-determinant, `log(corner − bᵀA⁻¹b)`.
    pub fn extend(&mut self, border: &[f64], corner: f64) -> Result<f64> {
        if border.len() != self.order {
            return Err(Error::Dimension(format!(
                "border has length {}, factor has order {}",
                border.len(),
                self.order
            )));
        }
        let mut y = border.to_vec();
        self.forward_solve_in_place(&mut y);
        let schur = corner - dot(&y, &y);
        if !(schur > 0.0) || !schur.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: self.order,
                value: schur,
            });
        }
        let pivot = schur.sqrt();
        self.packed.extend_from_slice(&y);
        self.packed.push(pivot);
        self.order += 1;
        let gain = schur.ln();
        self.log_det += gain;
        Ok(gain)
    }

    /// Non-mutating form of [`extend`](Self::extend).
    pub fn extended(&self, border: &[f64], corner: f64) -> Result<Self> {
        let mut next = self.clone();
        next.extend(border, corner)?;
        Ok(next)
    }

    /// Dense lower-triangular copy of the factor.
    pub fn to_dense(&self) -> Array2<f64> {
        let t = self.order;
        let mut out = Array2::zeros((t, t));
        for r in 0..t {
            for (c, v) in self.row(r).iter().enumerate() {
                out[[r, c]] = *v;
            }
        }
        out
    }

    /// `F Fᵀ`, the matrix this factor represents.
    pub fn reconstruct(&self) -> Array2<f64> {
        let f = self.to_dense();
        f.dot(&f.t())
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Only the lower triangle of `a` is read.
pub fn cholesky(a: ArrayView2<'_, f64>) -> Result<CholeskyFactor> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::Dimension(format!("matrix is {n}×{m}, not square")));
    }
    let mut factor = CholeskyFactor::with_capacity(n);
    let mut border = Vec::with_capacity(n);
    for i in 0..n {
        border.clear();
        border.extend((0..i).map(|j| a[[i, j]]));
        factor.extend(&border, a[[i, i]])?;
    }
    Ok(factor)
}

/// Factor together with `log det a`.
pub fn cholesky_logdet(a: ArrayView2<'_, f64>) -> Result<(CholeskyFactor, f64)> {
    let factor = cholesky(a)?;
    let log_det = factor.log_det();
    Ok((factor, log_det))
}
