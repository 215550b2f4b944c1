#![allow(dead_code)]

use dppmap::KernelMatrix;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(a: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(a: ArrayView2<'_, f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(to_na(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn eigen_log_det(a: ArrayView2<'_, f64>) -> f64 {
    eigenvalues(a).iter().map(|l| l.ln()).sum()
}

pub fn na_log_det(a: ArrayView2<'_, f64>) -> f64 {
    let c = to_na(a).cholesky().expect("positive definite");
    2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>()
}

pub fn na_solve(a: ArrayView2<'_, f64>, b: &[f64]) -> Vec<f64> {
    let c = to_na(a).cholesky().expect("positive definite");
    c.solve(&DVector::from_column_slice(b)).iter().copied().collect()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `W Wᵀ / n + shift · I`.
pub fn random_spd(n: usize, shift: f64, rng: &mut impl Rng) -> Array2<f64> {
    let w = gaussian_matrix(n, n, rng);
    let a = &w * w.transpose() / n as f64 + DMatrix::identity(n, n) * shift;
    let a = (&a + a.transpose()) * 0.5;
    from_na(&a)
}

pub fn random_kernel(n: usize, shift: f64, rng: &mut impl Rng) -> KernelMatrix {
    KernelMatrix::new(random_spd(n, shift, rng)).expect("valid kernel")
}

pub fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = gaussian_matrix(n, n, rng);
    (&g + g.transpose()) * 0.5
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()))
}

/// log det of the principal submatrix on `items`, via nalgebra.
pub fn subset_log_det_oracle(kernel: &KernelMatrix, items: &[usize]) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let sub = DMatrix::from_fn(items.len(), items.len(), |a, b| kernel.get(items[a], items[b]));
    match sub.cholesky() {
        Some(c) => 2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    }
}

/// Greedy by full refactorization: at each step the item maximizing
/// `log det L_{X∪{i}}`, smallest index on ties, stopping when no gain is
/// positive.
pub fn refactorizing_greedy(kernel: &KernelMatrix, budget: usize) -> Vec<usize> {
    let mut set: Vec<usize> = Vec::new();
    let mut current = 0.0;
    while set.len() < budget {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..kernel.dim()).filter(|i| !set.contains(i)) {
            let mut trial = set.clone();
            trial.push(i);
            let v = subset_log_det_oracle(kernel, &trial);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, v)) if v - current > 0.0 => {
                set.push(i);
                current = v;
            }
            _ => break,
        }
    }
    set
}

pub fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
