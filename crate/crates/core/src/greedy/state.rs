use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::{cholesky_logdet, dot, log_or_neg_inf, CholeskyFactor};

/// Selected set of a greedy run, with the Cholesky factor and Gram block of
/// `L_X` kept up to date as items are added.
#[derive(Debug, Clone)]
pub struct GreedyState {
    dim: usize,
    selected: Vec<usize>,
    in_set: Vec<bool>,
    remaining: Vec<usize>,
    factor: CholeskyFactor,
    gram: Array2<f64>,
    gains: Vec<f64>,
}

impl GreedyState {
    /// Empty selection over the ground set `0..dim`.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            selected: Vec::new(),
            in_set: vec![false; dim],
            remaining: (0..dim).collect(),
            factor: CholeskyFactor::empty(),
            gram: Array2::zeros((0, 0)),
            gains: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Selected items in the order they were added.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }
    /// Unselected items in increasing order.
    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }
    pub fn len(&self) -> usize {
        self.selected.len()
    }
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
    pub fn contains(&self, item: usize) -> bool {
        self.in_set.get(item).copied().unwrap_or(false)
    }
    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }
    /// Cached `log det L_X`.
    pub fn log_det(&self) -> f64 {
        self.factor.log_det()
    }
    /// Exact gains accepted so far, one per selected item.
    pub fn accepted_gains(&self) -> &[f64] {
        &self.gains
    }

    /// `L_X` as a `t×t` view.
    pub fn gram(&self) -> ArrayView2<'_, f64> {
        let t = self.len();
        self.gram.slice(s![..t, ..t])
    }

    /// `L_{X,i}` in selection order.
    pub fn border_column(&self, kernel: &KernelMatrix, item: usize) -> Vec<f64> {
        let row = kernel.row(item);
        self.selected.iter().map(|&x| row[x]).collect()
    }

    /// `log(L_ii − L_{i,X} L_X⁻¹ L_{X,i})` from the factor, `−∞` if the
    /// Schur complement is not positive.
    pub fn exact_gain(&self, kernel: &KernelMatrix, item: usize) -> f64 {
        let border = self.border_column(kernel, item);
        log_or_neg_inf(self.factor.schur_complement(&border, kernel.get(item, item)))
    }

    /// `log det L_{X∪I} − log det L_X` for a batch `I`, via the log-determinant
    /// of its `k×k` Schur complement. `−∞` if that complement is not positive
    /// definite.
    pub fn batch_gain(&self, kernel: &KernelMatrix, items: &[usize]) -> f64 {
        let k = items.len();
        let solved: Vec<Vec<f64>> = items
            .iter()
            .map(|&i| self.factor.forward_solve(&self.border_column(kernel, i)))
            .collect();
        let mut schur = Array2::<f64>::zeros((k, k));
        for a in 0..k {
            for b in 0..=a {
                let v = kernel.get(items[a], items[b]) - dot(&solved[a], &solved[b]);
                schur[[a, b]] = v;
                schur[[b, a]] = v;
            }
        }
        match cholesky_logdet(schur.view()) {
            Ok((_, ld)) if ld.is_finite() => ld,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Adds `item` and returns its exact gain.
    pub fn commit(&mut self, kernel: &KernelMatrix, item: usize) -> Result<f64> {
        if item >= self.dim || kernel.dim() != self.dim {
            return Err(Error::Parameter(format!("item {item} outside ground set of size {}", self.dim)));
        }
        if self.in_set[item] {
            return Err(Error::Parameter(format!("item {item} is already selected")));
        }
        let border = self.border_column(kernel, item);
        let gain = self.factor.extend(&border, kernel.get(item, item))?;

        let t = self.selected.len();
        if t + 1 > self.gram.nrows() {
            let cap = (2 * self.gram.nrows()).max(8).min(self.dim.max(1));
            let mut grown = Array2::zeros((cap, cap));
            grown.slice_mut(s![..t, ..t]).assign(&self.gram.slice(s![..t, ..t]));
            self.gram = grown;
        }
        for (r, &b) in border.iter().enumerate() {
            self.gram[[r, t]] = b;
            self.gram[[t, r]] = b;
        }
        self.gram[[t, t]] = kernel.get(item, item);

        self.selected.push(item);
        self.in_set[item] = true;
        let pos = self.remaining.binary_search(&item).expect("unselected item is in the remaining list");
        self.remaining.remove(pos);
        self.gains.push(gain);
        Ok(gain)
    }

    /// Adds the items of a batch in order and returns the total gain.
    pub fn commit_batch(&mut self, kernel: &KernelMatrix, items: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &i in items {
            total += self.commit(kernel, i)?;
        }
        Ok(total)
    }

    /// `log det L_X` from a fresh factorization of the selected submatrix.
    pub fn recompute_log_det(&self, kernel: &KernelMatrix) -> Result<f64> {
        subset_log_det(kernel, &self.selected)
    }
}

/// `log det L_S` by a one-shot Cholesky factorization; 0 for the empty set.
pub fn subset_log_det(kernel: &KernelMatrix, items: &[usize]) -> Result<f64> {
    if items.is_empty() {
        return Ok(0.0);
    }
    Ok(cholesky_logdet(kernel.submatrix(items).view())?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_by_two() -> KernelMatrix {
        KernelMatrix::new(array![[2.0, 1.0], [1.0, 2.0]]).unwrap()
    }

    #[test]
    fn gains_and_gram_track_commits() {
        let l = two_by_two();
        let mut st = GreedyState::new(2);
        assert_eq!(st.exact_gain(&l, 1), 2f64.ln());
        st.commit(&l, 0).unwrap();
        assert!((st.exact_gain(&l, 1) - 1.5f64.ln()).abs() < 1e-15);
        st.commit(&l, 1).unwrap();
        assert!((st.log_det() - 3f64.ln()).abs() < 1e-14);
        assert_eq!(st.gram(), l.view());
        assert!(st.remaining().is_empty());
    }

    #[test]
    fn batch_gain_matches_sequential_commits() {
        let l = KernelMatrix::new(array![[3.0, 1.0, 0.5], [1.0, 2.0, 0.2], [0.5, 0.2, 1.5]]).unwrap();
        let mut st = GreedyState::new(3);
        st.commit(&l, 1).unwrap();
        let predicted = st.batch_gain(&l, &[0, 2]);
        let total = st.clone().commit_batch(&l, &[0, 2]).unwrap();
        assert!((predicted - total).abs() < 1e-13);
    }

    #[test]
    fn double_commit_rejected() {
        let l = two_by_two();
        let mut st = GreedyState::new(2);
        st.commit(&l, 0).unwrap();
        assert!(st.commit(&l, 0).is_err());
        assert!(st.commit(&l, 5).is_err());
    }
}
