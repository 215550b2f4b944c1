use ndarray::Array1;

use super::cg::{cg_solve, CgOptions, DenseOperator};
use super::dot;
use crate::error::{Error, Result};
use crate::greedy::GreedyState;
use crate::kernel::KernelMatrix;

/// How an exact Schur-complement gain is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainMode {
    /// Triangular solves with the state's maintained Cholesky factor.
    Factor,
    /// A CG solve with `L_X`.
    Cg(CgOptions),
}

/// `log(L_ii − L_{i,X} L_X⁻¹ L_{X,i})`, the exact increase of
/// `log det L_X` from adding item `i`.
///
/// Returns `−∞` when the Schur complement is not positive: such an item can
/// never be selected.
pub fn schur_marginal_gain(kernel: &KernelMatrix, state: &GreedyState, item: usize, mode: GainMode) -> Result<f64> {
    if item >= kernel.dim() {
        return Err(Error::Parameter(format!("item {item} out of range for dimension {}", kernel.dim())));
    }
    if state.contains(item) {
        return Err(Error::Parameter(format!("item {item} is already selected")));
    }
    match mode {
        GainMode::Factor => Ok(state.exact_gain(kernel, item)),
        GainMode::Cg(opts) => {
            let border = state.border_column(kernel, item);
            let diag = kernel.get(item, item);
            if state.is_empty() {
                return Ok(log_or_neg_inf(diag));
            }
            let gram = state.gram();
            let rep = cg_solve(&DenseOperator::new(gram), Array1::from(border.clone()).view(), &opts)?;
            let quad = dot(&border, rep.solution.as_slice().expect("contiguous"));
            Ok(log_or_neg_inf(diag - quad))
        }
    }
}

#[inline]
pub(crate) fn log_or_neg_inf(schur: f64) -> f64 {
    if schur > 0.0 && schur.is_finite() {
        schur.ln()
    } else {
        f64::NEG_INFINITY
    }
}
