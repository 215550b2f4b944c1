use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{budget_reached, BatchCandidate, GreedyOutcome, GreedyState, Partition, SolveStats};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::{
    border_average, cg_solve_block, cholesky, dot, log_or_neg_inf, BorderedFamily, BorderedKernel, CgOptions, DenseOperator,
};
use crate::rng::{stream, Purpose};

/// An item or a batch (by its index in the sampled batch list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Candidate {
    Item(usize),
    Batch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateKind {
    FirstOrder,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainEstimate {
    pub candidate: Candidate,
    pub value: f64,
    /// Partition the estimate was computed in.
    pub group: usize,
    pub kind: EstimateKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Options {
    pub p: usize,
    pub ell: usize,
    pub budget: Option<usize>,
    pub seed: u64,
    pub cg: CgOptions,
    /// Also compute the exact gain of every candidate to measure the
    /// largest estimation error. Does not change the selection.
    pub track_estimate_error: bool,
}

impl Default for Algorithm1Options {
    fn default() -> Self {
        Self {
            p: 5,
            ell: 20,
            budget: None,
            seed: 0,
            cg: CgOptions::default(),
            track_estimate_error: false,
        }
    }
}

/// Last `k` columns of `[[L_X, B], [Bᵀ, C]]⁻¹` from the factor of `L_X`,
/// or `None` if the bordered matrix is not positive definite.
pub(crate) fn factor_inverse_columns(factor: &crate::linalg::CholeskyFactor, bk: &BorderedKernel<'_>) -> Option<Array2<f64>> {
    let (t, k) = (bk.base_dim(), bk.k());
    let border = bk.border();
    let y: Vec<Vec<f64>> = (0..k).map(|c| factor.solve(&border.column(c).to_vec())).collect();
    let mut schur = bk.corner().to_owned();
    for a in 0..k {
        for b in 0..k {
            schur[[a, b]] -= dot(&border.column(a).to_vec(), &y[b]);
        }
    }
    let sym = (&schur + &schur.t()) * 0.5;
    let sf = cholesky(sym.view()).ok()?;
    let mut z = Array2::<f64>::zeros((t + k, k));
    for c in 0..k {
        let mut e = vec![0.0; k];
        e[c] = 1.0;
        let s_inv_col = sf.solve(&e);
        for r in 0..t {
            z[[r, c]] = -(0..k).map(|a| y[a][r] * s_inv_col[a]).sum::<f64>();
        }
        for a in 0..k {
            z[[t + a, c]] = s_inv_col[a];
        }
    }
    Some(z)
}

/// Solves for the last `k` inverse columns of every family member with CG,
/// redoing non-converged or failed members with the factor. `None` marks a
/// member whose bordered matrix is not positive definite.
pub(crate) fn family_inverse_columns(
    state: &GreedyState,
    members: &[BorderedKernel<'_>],
    cg: &CgOptions,
    stats: &mut SolveStats,
) -> Result<Vec<Option<Array2<f64>>>> {
    let k = members[0].k();
    let family = BorderedFamily::new(members.to_vec())?;
    match family.inverse_columns(cg) {
        Ok((zs, reports)) => {
            stats.record_cg(&reports);
            Ok(zs
                .into_iter()
                .enumerate()
                .map(|(g, z)| {
                    if reports[g * k..(g + 1) * k].iter().all(|r| r.converged) {
                        Some(z)
                    } else {
                        stats.fallbacks += 1;
                        factor_inverse_columns(state.factor(), &members[g])
                    }
                })
                .collect())
        }
        Err(Error::CgBreakdown { .. }) => {
            stats.fallbacks += members.len();
            Ok(members.iter().map(|m| factor_inverse_columns(state.factor(), m)).collect())
        }
        Err(e) => Err(e),
    }
}

/// First-order gain estimates for every candidate in `partition`.
///
/// For each group `j` the candidates' bordered kernels `L_{X∪{i}}` are
/// averaged into `L̄_j`; with `z_j` the last column of `L̄_j⁻¹` and
/// `Γ_j = log det L̄_j − log det L_X`,
/// `Δ_i = 2 (L_{X,i} − b̄_j)·z_top + (L_ii − c̄_j) z_bot + Γ_j`.
/// This costs `2p` CG solves, run as two blocks of `p` systems.
pub fn first_order_gains(
    state: &GreedyState,
    partition: &Partition,
    kernel: &KernelMatrix,
    cg: &CgOptions,
    stats: &mut SolveStats,
) -> Result<Vec<GainEstimate>> {
    let selected = state.selected();
    let t = selected.len();
    let mut members = Vec::with_capacity(partition.len());
    for group in partition.groups() {
        let singles: Vec<[usize; 1]> = group.iter().map(|&i| [i]).collect();
        members.push(border_average(kernel, state.gram(), selected, &singles)?);
    }
    let zs = family_inverse_columns(state, &members, cg, stats)?;
    let gammas = schur_log_gains(state, &members, cg, stats)?;

    let mut out = Vec::with_capacity(state.remaining().len());
    for (g, group) in partition.groups().iter().enumerate() {
        let bk = &members[g];
        let (Some(z), gamma) = (&zs[g], gammas[g]) else {
            out.extend(group.iter().map(|&i| estimate(Candidate::Item(i), f64::NEG_INFINITY, g)));
            continue;
        };
        let z_top: Vec<f64> = z.column(0).iter().take(t).copied().collect();
        let z_bot = z[[t, 0]];
        let b_mean = bk.border().column(0).to_vec();
        let c_mean = bk.corner()[[0, 0]];
        let zb = dot(&b_mean, &z_top);
        for &i in group {
            let value = if gamma.is_finite() {
                let border = state.border_column(kernel, i);
                2.0 * (dot(&border, &z_top) - zb) + (kernel.get(i, i) - c_mean) * z_bot + gamma
            } else {
                f64::NEG_INFINITY
            };
            out.push(estimate(Candidate::Item(i), value, g));
        }
    }
    Ok(out)
}

fn estimate(candidate: Candidate, value: f64, group: usize) -> GainEstimate {
    GainEstimate {
        candidate,
        value,
        group,
        kind: EstimateKind::FirstOrder,
    }
}

/// `log(c̄_j − b̄_jᵀ L_X⁻¹ b̄_j)` for each single-column member, by one block
/// of CG solves with `L_X`.
fn schur_log_gains(state: &GreedyState, members: &[BorderedKernel<'_>], cg: &CgOptions, stats: &mut SolveStats) -> Result<Vec<f64>> {
    let t = state.len();
    let corners: Vec<f64> = members.iter().map(|m| m.corner()[[0, 0]]).collect();
    if t == 0 {
        return Ok(corners.into_iter().map(log_or_neg_inf).collect());
    }
    let mut rhs = Array2::<f64>::zeros((members.len(), t));
    for (g, m) in members.iter().enumerate() {
        rhs.row_mut(g).assign(&m.border().column(0));
    }
    let op = DenseOperator::new(state.gram());
    let reports = match cg_solve_block(&op, rhs.view(), cg) {
        Ok(r) => r,
        Err(Error::CgBreakdown { .. }) => {
            stats.fallbacks += members.len();
            return Ok(rhs
                .rows()
                .into_iter()
                .zip(&corners)
                .map(|(b, &c)| log_or_neg_inf(state.factor().schur_complement(&b.to_vec(), c)))
                .collect());
        }
        Err(e) => return Err(e),
    };
    stats.record_cg(&reports);
    Ok(reports
        .iter()
        .zip(rhs.rows())
        .zip(&corners)
        .map(|((rep, b), &c)| {
            let b = b.to_vec();
            if rep.converged {
                log_or_neg_inf(c - dot(&b, rep.solution.as_slice().expect("contiguous")))
            } else {
                stats.fallbacks += 1;
                log_or_neg_inf(state.factor().schur_complement(&b, c))
            }
        })
        .collect())
}

pub(crate) fn exact_value(state: &GreedyState, kernel: &KernelMatrix, candidate: Candidate, batches: &[BatchCandidate]) -> f64 {
    match candidate {
        Candidate::Item(i) => state.exact_gain(kernel, i),
        Candidate::Batch(b) => state.batch_gain(kernel, &batches[b].items),
    }
}

/// Re-scores the `ℓ` highest estimates exactly and returns the best of them.
///
/// Ranking and the final choice both break ties by the smallest candidate.
/// Batch candidates index into `batches`.
pub fn top_l_refine(
    estimates: &[GainEstimate],
    ell: usize,
    state: &GreedyState,
    kernel: &KernelMatrix,
    batches: &[BatchCandidate],
    stats: &mut SolveStats,
) -> Result<GainEstimate> {
    if estimates.is_empty() {
        return Err(Error::Parameter("no estimates to refine".into()));
    }
    if ell == 0 {
        return Err(Error::Parameter("ℓ must be at least 1".into()));
    }
    let mut order: Vec<&GainEstimate> = estimates.iter().collect();
    let by_rank = |a: &&GainEstimate, b: &&GainEstimate| b.value.total_cmp(&a.value).then_with(|| a.candidate.cmp(&b.candidate));
    let take = ell.min(order.len());
    if take < order.len() {
        order.select_nth_unstable_by(take - 1, by_rank);
        order.truncate(take);
    }
    order.sort_unstable_by(by_rank);

    let mut best: Option<GainEstimate> = None;
    for e in order {
        let value = exact_value(state, kernel, e.candidate, batches);
        stats.exact_evals += 1;
        let better = match &best {
            None => true,
            Some(b) => value > b.value || (value == b.value && e.candidate < b.candidate),
        };
        if better {
            best = Some(GainEstimate {
                value,
                kind: EstimateKind::Exact,
                ..*e
            });
        }
    }
    Ok(best.expect("at least one candidate"))
}

pub(crate) fn track_errors(
    estimates: &[GainEstimate],
    state: &GreedyState,
    kernel: &KernelMatrix,
    batches: &[BatchCandidate],
    offset: f64,
    stats: &mut SolveStats,
) {
    for e in estimates {
        let exact = exact_value(state, kernel, e.candidate, batches);
        stats.record_estimate_error((e.value - offset - exact).abs());
    }
}

/// Partitioned first-order greedy.
///
/// Each iteration splits the unselected items into `p` random balanced
/// groups, estimates every gain with [`first_order_gains`], re-scores the
/// top `ℓ` exactly and adds the best item. Stops once the best exact gain
/// is negative or the budget is reached.
pub fn algorithm1(kernel: &KernelMatrix, opts: &Algorithm1Options) -> Result<GreedyOutcome> {
    if opts.p == 0 || opts.ell == 0 {
        return Err(Error::Parameter(format!("p and ℓ must be positive, got p={}, ℓ={}", opts.p, opts.ell)));
    }
    let start = Instant::now();
    let mut state = GreedyState::new(kernel.dim());
    let mut stats = SolveStats::default();
    let mut iteration = 0u64;
    while !budget_reached(&state, opts.budget) {
        let partition = Partition::balanced(state.remaining(), opts.p, &mut stream(opts.seed, Purpose::Partitions, iteration))?;
        let estimates = first_order_gains(&state, &partition, kernel, &opts.cg, &mut stats)?;
        if opts.track_estimate_error {
            track_errors(&estimates, &state, kernel, &[], 0.0, &mut stats);
        }
        let best = top_l_refine(&estimates, opts.ell, &state, kernel, &[], &mut stats)?;
        iteration += 1;
        if !(best.value >= 0.0) {
            break;
        }
        let Candidate::Item(i) = best.candidate else { unreachable!("single-item pool") };
        state.commit(kernel, i)?;
        stats.iterations += 1;
        stats.single_steps += 1;
    }
    GreedyOutcome::finish(kernel, state, stats, start.elapsed())
}

/// `L_{X,I} − B̄` for a batch `I`.
pub(crate) fn border_delta(state: &GreedyState, kernel: &KernelMatrix, items: &[usize], mean: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut d = Array2::<f64>::zeros(mean.raw_dim());
    for (c, &i) in items.iter().enumerate() {
        let row = kernel.row(i);
        for (r, &x) in state.selected().iter().enumerate() {
            d[[r, c]] = row[x] - mean[[r, c]];
        }
    }
    d
}

/// `L_{I,I} − C̄` for a batch `I`.
pub(crate) fn corner_delta(kernel: &KernelMatrix, items: &[usize], mean: ArrayView2<'_, f64>) -> Array2<f64> {
    let k = items.len();
    Array2::from_shape_fn((k, k), |(a, b)| kernel.get(items[a], items[b]) - mean[[a, b]])
}
