use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm};
use crate::error::{Error, Result};

/// A symmetric linear operator that can be applied to a block of vectors.
///
/// Vectors are the rows of the block: `y.row(q) = A · x.row(q)`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply_block(&self, x: ArrayView2<'_, f64>, y: ArrayViewMut2<'_, f64>);

    /// Diagonal of the operator, used by the Jacobi preconditioner.
    fn diagonal(&self) -> Array1<f64>;

    fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let xb = x.insert_axis(Axis(0));
        let mut y = Array2::zeros((1, self.dim()));
        self.apply_block(xb, y.view_mut());
        y.index_axis_move(Axis(0), 0)
    }
}

/// A dense symmetric matrix viewed as an operator.
#[derive(Debug, Clone, Copy)]
pub struct DenseOperator<'a> {
    matrix: ArrayView2<'a, f64>,
}

impl<'a> DenseOperator<'a> {
    pub fn new(matrix: ArrayView2<'a, f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self { matrix }
    }
}

impl LinearOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_block(&self, x: ArrayView2<'_, f64>, mut y: ArrayViewMut2<'_, f64>) {
        // A single vector is faster as row dot products than through GEMM.
        if x.nrows() == 1 && self.matrix.ncols() > 0 && self.matrix.row(0).as_slice().is_some() {
            if let (Some(xs), Some(ys)) = (x.row(0).as_slice(), y.row_mut(0).into_slice()) {
                for (yi, row) in ys.iter_mut().zip(self.matrix.rows()) {
                    *yi = dot(row.as_slice().expect("unit column stride"), xs);
                }
                return;
            }
        }
        general_mat_mul(1.0, &x, &self.matrix.t(), 0.0, &mut y);
    }

    fn diagonal(&self) -> Array1<f64> {
        self.matrix.diag().to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    /// Relative tolerance: stop once `‖r‖ ≤ tol · ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Diagonal (Jacobi) preconditioning.
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1000,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub solution: Array1<f64>,
    pub iterations: usize,
    /// `‖A x − b‖₂`, recomputed from the returned solution.
    pub residual_norm: f64,
    /// Whether the recursive residual met the tolerance before `max_iter`.
    pub converged: bool,
}

/// Conjugate gradient for a single right-hand side.
pub fn cg_solve<O: LinearOperator + ?Sized>(op: &O, b: ArrayView1<'_, f64>, opts: &CgOptions) -> Result<CgReport> {
    let block = b.insert_axis(Axis(0));
    let mut reports = cg_solve_block(op, block, opts)?;
    Ok(reports.pop().expect("one report per row"))
}

/// Independent CG runs, one per row of `b`, sharing operator applications.
///
/// Each row keeps its own step lengths and stopping test; the block form only
/// batches the matrix products.
pub fn cg_solve_block<O: LinearOperator + ?Sized>(
    op: &O,
    b: ArrayView2<'_, f64>,
    opts: &CgOptions,
) -> Result<Vec<CgReport>> {
    let diag = opts.jacobi.then(|| op.diagonal());
    let rows = b.nrows();
    let diags = diag.map(|d| vec![d; rows]);
    block_cg(|_, x, y| op.apply_block(x, y), op.dim(), b, opts, diags.as_deref())
}

/// Shared CG driver.
///
/// `apply(rows, x, y)` multiplies every row of `x`; `rows[q]` is the index in
/// `b` of the system that row `q` belongs to (rows of converged systems are
/// dropped from the block). `diagonals`, when present, holds one Jacobi
/// diagonal per system.
pub(crate) fn block_cg<F>(
    mut apply: F,
    dim: usize,
    b: ArrayView2<'_, f64>,
    opts: &CgOptions,
    diagonals: Option<&[Array1<f64>]>,
) -> Result<Vec<CgReport>>
where
    F: FnMut(&[usize], ArrayView2<'_, f64>, ArrayViewMut2<'_, f64>),
{
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!("CG tolerance must be positive, got {}", opts.tol)));
    }
    let (rows, n) = b.dim();
    if n != dim {
        return Err(Error::Dimension(format!("right-hand side has length {n}, operator has dimension {dim}")));
    }
    let inv_diag: Option<Vec<Array1<f64>>> = diagonals.map(|ds| {
        ds.iter()
            .map(|d| d.mapv(|v| if v != 0.0 { 1.0 / v } else { 1.0 }))
            .collect()
    });

    let mut x = Array2::<f64>::zeros((rows, n));
    let mut r = b.to_owned();
    let mut z = r.clone();
    if let Some(inv) = &inv_diag {
        for q in 0..rows {
            z.row_mut(q).zip_mut_with(&inv[q], |zi, di| *zi *= di);
        }
    }
    let mut p = z.clone();
    let mut ap = Array2::<f64>::zeros((rows, n));

    let mut rz = vec![0.0; rows];
    let mut target = vec![0.0; rows];
    let mut iterations = vec![0usize; rows];
    let mut active = vec![false; rows];
    for q in 0..rows {
        let rq = r.row(q);
        let rs = rq.as_slice().expect("contiguous row");
        rz[q] = dot(rs, z.row(q).as_slice().expect("contiguous row"));
        let bn = norm(rs);
        target[q] = opts.tol * bn;
        active[q] = bn > target[q] && bn > 0.0;
    }

    let all: Vec<usize> = (0..rows).collect();
    for it in 0..opts.max_iter {
        let live: Vec<usize> = all.iter().copied().filter(|&q| active[q]).collect();
        if live.is_empty() {
            break;
        }
        if live.len() == rows {
            apply(&all, p.view(), ap.view_mut());
        } else {
            let packed = p.select(Axis(0), &live);
            let mut out = Array2::<f64>::zeros((live.len(), n));
            apply(&live, packed.view(), out.view_mut());
            for (c, &q) in live.iter().enumerate() {
                ap.row_mut(q).assign(&out.row(c));
            }
        }
        for q in 0..rows {
            if !active[q] {
                continue;
            }
            let pq = p.row(q);
            let apq = ap.row(q);
            let ps = pq.as_slice().expect("contiguous row");
            let aps = apq.as_slice().expect("contiguous row");
            let curvature = dot(ps, aps);
            if !(curvature > 0.0) || !curvature.is_finite() {
                return Err(Error::CgBreakdown { iteration: it, curvature });
            }
            let alpha = rz[q] / curvature;
            axpy(alpha, ps, x.row_mut(q).into_slice().expect("contiguous row"));
            let rs = r.row_mut(q).into_slice().expect("contiguous row");
            axpy(-alpha, aps, rs);
            iterations[q] += 1;
            if norm(rs) <= target[q] {
                active[q] = false;
                continue;
            }
            let zs = z.row_mut(q).into_slice().expect("contiguous row");
            zs.copy_from_slice(rs);
            if let Some(inv) = &inv_diag {
                for (zi, di) in zs.iter_mut().zip(inv[q].iter()) {
                    *zi *= di;
                }
            }
            let rz_next = dot(rs, zs);
            let beta = rz_next / rz[q];
            rz[q] = rz_next;
            let pm = p.row_mut(q).into_slice().expect("contiguous row");
            for (pi, zi) in pm.iter_mut().zip(zs.iter()) {
                *pi = zi + beta * *pi;
            }
        }
    }

    // Report the true residual of the returned iterate.
    apply(&all, x.view(), ap.view_mut());
    let mut reports = Vec::with_capacity(rows);
    for q in 0..rows {
        let residual: f64 = ap
            .row(q)
            .iter()
            .zip(b.row(q).iter())
            .map(|(a, bb)| (a - bb) * (a - bb))
            .sum::<f64>()
            .sqrt();
        reports.push(CgReport {
            solution: x.row(q).to_owned(),
            iterations: iterations[q],
            residual_norm: residual,
            converged: !active[q],
        });
    }
    Ok(reports)
}
