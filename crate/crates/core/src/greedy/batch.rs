use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::first_order::{border_delta, corner_delta, family_inverse_columns, track_errors};
use super::{
    budget_reached, first_order_gains, sample_batches, top_l_refine, BatchCandidate, Candidate, EstimateKind, GainEstimate, GreedyOutcome,
    GreedyState, Partition, SolveStats,
};
use crate::error::{Error, Result};
use crate::kernel::{BoundMethod, KernelMatrix, SpectralBounds};
use crate::ldas::{chebyshev_coefficients, ldas_logdet_family, ProbeSet, Rescaling, DEFAULT_DEGREE, DEFAULT_DELTA, DEFAULT_PROBES};
use crate::linalg::{border_average, cholesky, cholesky_logdet, mat_inner_gain, BorderedFamily, BorderedKernel, CgOptions, CholeskyFactor};
use crate::rng::{stream, Purpose};

const POWER_STEPS: usize = 8;
const LOWER_SAFETY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm2Options {
    pub p: usize,
    pub k: usize,
    pub s: usize,
    /// Probe vectors per log-determinant estimate.
    pub m: usize,
    /// Chebyshev degree.
    pub n: usize,
    pub ell: usize,
    pub budget: Option<usize>,
    pub seed: u64,
    pub cg: CgOptions,
    /// Interval margin requested from the spectrum rescaling.
    pub delta: f64,
    /// Also rank single items with the first-order estimator and keep
    /// whichever of the best item and the best batch gains more.
    pub synthesis: bool,
    /// Replace the stochastic log-determinant estimate with an exact one.
    pub exact_log_det: bool,
    pub track_estimate_error: bool,
}

impl Default for Algorithm2Options {
    fn default() -> Self {
        Self {
            p: 5,
            k: 10,
            s: 50,
            m: DEFAULT_PROBES,
            n: DEFAULT_DEGREE,
            ell: 20,
            budget: None,
            seed: 0,
            cg: CgOptions::default(),
            delta: DEFAULT_DELTA,
            synthesis: true,
            exact_log_det: false,
            track_estimate_error: false,
        }
    }
}

impl Algorithm2Options {
    fn validate(&self) -> Result<()> {
        let named = [("p", self.p), ("k", self.k), ("s", self.s), ("m", self.m), ("ℓ", self.ell)];
        if let Some((name, _)) = named.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be positive")));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Parameter(format!("delta must lie in (0, 1/2), got {}", self.delta)));
        }
        Ok(())
    }
}

/// Inputs of the batch log-determinant term for one iteration.
pub(crate) struct LogDetContext<'a> {
    pub(crate) exact: bool,
    pub(crate) lower: f64,
    pub(crate) delta: f64,
    pub(crate) degree: usize,
    pub(crate) probes: &'a ProbeSet,
}

/// First-order gain estimates for sampled batches.
///
/// `partition` groups batch indices, each group averaged into one bordered
/// kernel `L̄_j`. With `Z_j` its last `k` inverse columns and `Γ_j` an
/// estimate of `log det L̄_j`, a batch `I` in group `j` scores
/// `⟨L_{X∪I} − L̄_j, Mat(Z_j)⟩ + Γ_j`, which approximates `log det L_{X∪I}`.
/// All groups share the probe vectors.
///
/// `lower_bound_l_x` is a lower estimate of `λ_min(L_X)` (ignored when `X`
/// is empty).
pub fn batch_first_order_gains(
    state: &GreedyState,
    kernel: &KernelMatrix,
    batches: &[BatchCandidate],
    partition: &Partition,
    opts: &Algorithm2Options,
    iteration: u64,
    lower_bound_l_x: f64,
    stats: &mut SolveStats,
) -> Result<Vec<GainEstimate>> {
    let t = state.len();
    let probes = ProbeSet::rademacher(t + opts.k, opts.m, opts.seed, iteration)?;
    let ctx = LogDetContext {
        exact: opts.exact_log_det,
        lower: lower_bound_l_x,
        delta: opts.delta,
        degree: opts.n,
        probes: &probes,
    };
    batch_gains(state, kernel, batches, partition, &opts.cg, &ctx, stats)
}

pub(crate) fn batch_gains(
    state: &GreedyState,
    kernel: &KernelMatrix,
    batches: &[BatchCandidate],
    partition: &Partition,
    cg: &CgOptions,
    ctx: &LogDetContext<'_>,
    stats: &mut SolveStats,
) -> Result<Vec<GainEstimate>> {
    let mut members = Vec::with_capacity(partition.len());
    for group in partition.groups() {
        let items: Vec<&[usize]> = group.iter().map(|&b| batches[b].items.as_slice()).collect();
        members.push(border_average(kernel, state.gram(), state.selected(), &items)?);
    }
    let zs = family_inverse_columns(state, &members, cg, stats)?;
    let gammas = group_log_dets(state, &members, ctx, stats)?;

    let mut out = Vec::with_capacity(batches.len());
    for (g, group) in partition.groups().iter().enumerate() {
        let bk = &members[g];
        for &b in group {
            let value = match &zs[g] {
                Some(z) if gammas[g].is_finite() => {
                    let items = &batches[b].items;
                    let db = border_delta(state, kernel, items, bk.border());
                    let dc = corner_delta(kernel, items, bk.corner());
                    mat_inner_gain(db.view(), dc.view(), z.view())? + gammas[g]
                }
                _ => f64::NEG_INFINITY,
            };
            out.push(GainEstimate {
                candidate: Candidate::Batch(b),
                value,
                group: g,
                kind: EstimateKind::FirstOrder,
            });
        }
    }
    Ok(out)
}

fn group_log_dets(state: &GreedyState, members: &[BorderedKernel<'_>], ctx: &LogDetContext<'_>, stats: &mut SolveStats) -> Result<Vec<f64>> {
    if ctx.exact {
        return Ok(members
            .iter()
            .map(|m| cholesky_logdet(m.to_dense().view()).map_or(f64::NEG_INFINITY, |(_, ld)| ld))
            .collect());
    }
    let mut upper: f64 = 0.0;
    let mut lower = if state.is_empty() { f64::INFINITY } else { ctx.lower };
    for m in members {
        upper = upper.max(gershgorin_upper(m));
        match cholesky(m.corner()) {
            Ok(f) => lower = lower.min(LOWER_SAFETY * min_eigenvalue(&f, &mut vec![1.0; m.k()], POWER_STEPS)),
            Err(_) => return Err(Error::Rescale("averaged corner block is not positive definite".into())),
        }
    }
    let bounds = SpectralBounds::new(lower, upper, BoundMethod::PowerIteration)?;
    let rescaling = Rescaling::from_bounds(&bounds, ctx.delta)?;
    let expansion = chebyshev_coefficients(ctx.degree, rescaling.delta)?;
    let family = BorderedFamily::new(members.to_vec())?;
    stats.ldas_matvecs += members.len() * ctx.probes.count() * ctx.degree;
    ldas_logdet_family(&family, &rescaling, &expansion, ctx.probes)
}

/// Largest Gershgorin row sum of the assembled bordered matrix.
fn gershgorin_upper(m: &BorderedKernel<'_>) -> f64 {
    let (base, border, corner) = (m.base(), m.border(), m.corner());
    let top = base
        .rows()
        .into_iter()
        .zip(border.rows())
        .map(|(a, b)| a.iter().chain(b.iter()).map(|v| v.abs()).sum::<f64>());
    let bottom = border
        .columns()
        .into_iter()
        .zip(corner.rows())
        .map(|(a, b)| a.iter().chain(b.iter()).map(|v| v.abs()).sum::<f64>());
    top.chain(bottom).fold(0.0, f64::max)
}

/// Inverse power iteration with a Cholesky factor. Returns the Rayleigh
/// estimate of the smallest eigenvalue, which is never below the true one;
/// `x` is the warm start and holds the final iterate.
pub(crate) fn min_eigenvalue(factor: &CholeskyFactor, x: &mut [f64], steps: usize) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n0 = norm(x);
    for v in x.iter_mut() {
        *v /= n0;
    }
    let mut rq = f64::NAN;
    for _ in 0..steps.max(1) {
        let y = factor.solve(x);
        rq = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        let ny = norm(&y);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    1.0 / rq
}

/// Stochastic batch greedy.
///
/// Each iteration samples `s` batches of `k` items, groups them into `p`
/// random partitions, scores every batch with [`batch_first_order_gains`]
/// and re-scores the top `ℓ` batches exactly. With `synthesis` on, the
/// single-item estimator runs alongside on its own partitions and the
/// larger of the two exact winners is added. Stops once the winning exact
/// gain is negative or the budget is reached; when fewer than `k` items
/// remain (or fit in the budget) only single items are considered.
pub fn algorithm2(kernel: &KernelMatrix, opts: &Algorithm2Options) -> Result<GreedyOutcome> {
    opts.validate()?;
    let start = Instant::now();
    let mut state = GreedyState::new(kernel.dim());
    let mut stats = SolveStats::default();
    let mut power_vec: Vec<f64> = Vec::new();
    let mut iteration = 0u64;

    while !budget_reached(&state, opts.budget) {
        let left = opts.budget.map_or(usize::MAX, |b| b - state.len());
        let batch_mode = state.remaining().len() >= opts.k && left >= opts.k;
        let mut best_batch: Option<(GainEstimate, Vec<BatchCandidate>)> = None;

        if batch_mode {
            let batches = sample_batches(state.remaining(), opts.k, opts.s, &mut stream(opts.seed, Purpose::Batches, iteration))?;
            let ids: Vec<usize> = (0..batches.len()).collect();
            let partition = Partition::balanced(&ids, opts.p, &mut stream(opts.seed, Purpose::Partitions, iteration))?;
            let lower = if state.is_empty() {
                f64::INFINITY
            } else {
                let mut rng = stream(opts.seed, Purpose::PowerIteration, iteration);
                let scale = 1.0 / (state.len() as f64).sqrt();
                while power_vec.len() < state.len() {
                    power_vec.push(scale * rng.random_range(-1.0..1.0));
                }
                LOWER_SAFETY * min_eigenvalue(state.factor(), &mut power_vec, POWER_STEPS)
            };
            match batch_first_order_gains(&state, kernel, &batches, &partition, opts, iteration, lower, &mut stats) {
                Ok(estimates) => {
                    if opts.track_estimate_error {
                        track_errors(&estimates, &state, kernel, &batches, state.log_det(), &mut stats);
                    }
                    let best = top_l_refine(&estimates, opts.ell, &state, kernel, &batches, &mut stats)?;
                    best_batch = Some((best, batches));
                }
                Err(Error::Rescale(_)) => stats.fallbacks += 1,
                Err(e) => return Err(e.context(format!("batch estimates at iteration {iteration}"))),
            }
        }

        let mut best_single = None;
        if opts.synthesis || best_batch.is_none() {
            let purpose = if batch_mode { Purpose::SinglePartitions } else { Purpose::Partitions };
            let partition = Partition::balanced(state.remaining(), opts.p, &mut stream(opts.seed, purpose, iteration))?;
            let estimates = first_order_gains(&state, &partition, kernel, &opts.cg, &mut stats)?;
            if opts.track_estimate_error {
                track_errors(&estimates, &state, kernel, &[], 0.0, &mut stats);
            }
            best_single = Some(top_l_refine(&estimates, opts.ell, &state, kernel, &[], &mut stats)?);
        }
        iteration += 1;

        let single_value = best_single.map_or(f64::NEG_INFINITY, |e| e.value);
        let batch_value = best_batch.as_ref().map_or(f64::NEG_INFINITY, |(e, _)| e.value);
        if batch_value >= single_value && batch_value >= 0.0 {
            let (best, batches) = best_batch.expect("finite batch value");
            let Candidate::Batch(b) = best.candidate else { unreachable!("batch pool") };
            state.commit_batch(kernel, &batches[b].items)?;
            stats.batch_steps += 1;
        } else if single_value >= 0.0 {
            let Some(GainEstimate { candidate: Candidate::Item(i), .. }) = best_single else { unreachable!("single pool") };
            state.commit(kernel, i)?;
            stats.single_steps += 1;
        } else {
            break;
        }
        stats.iterations += 1;
    }
    GreedyOutcome::finish(kernel, state, stats, start.elapsed())
}
