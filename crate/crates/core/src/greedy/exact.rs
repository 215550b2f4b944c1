use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::{budget_reached, GreedyOutcome, GreedyState, SolveStats};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::{cg_solve, dot, log_or_neg_inf, CgOptions, CholeskyFactor, DenseOperator};

/// Largest number of subsets [`brute_force_map`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Exact maximizer of `log det L_S` over all `|S| ≤ budget`, by depth-first
/// enumeration in lexicographic order. A later set replaces the incumbent
/// only if it is strictly better, so ties resolve to the lexicographically
/// smallest set. The empty set (value 0) is a candidate.
pub fn brute_force_map(kernel: &KernelMatrix, budget: usize) -> Result<(Vec<usize>, f64)> {
    let d = kernel.dim();
    let max_size = budget.min(d);
    let mut count: u128 = 0;
    let mut binom: u128 = 1;
    for j in 0..=max_size {
        if j > 0 {
            binom = binom * (d - j + 1) as u128 / j as u128;
        }
        count += binom;
        if count > BRUTE_FORCE_LIMIT {
            return Err(Error::EnumerationTooLarge { count, limit: BRUTE_FORCE_LIMIT });
        }
    }

    struct Search<'k> {
        kernel: &'k KernelMatrix,
        max_size: usize,
        current: Vec<usize>,
        best: Vec<usize>,
        best_value: f64,
    }

    impl Search<'_> {
        fn visit(&mut self, start: usize, factor: &CholeskyFactor) {
            if self.current.len() == self.max_size {
                return;
            }
            for i in start..self.kernel.dim() {
                let row = self.kernel.row(i);
                let border: Vec<f64> = self.current.iter().map(|&x| row[x]).collect();
                // A non-positive-definite subset makes every superset singular too.
                let Ok(next) = factor.extended(&border, row[i]) else { continue };
                self.current.push(i);
                let value = next.log_det();
                if value > self.best_value + 1e-12 * self.best_value.abs().max(1.0) {
                    self.best_value = value;
                    self.best = self.current.clone();
                }
                self.visit(i + 1, &next);
                self.current.pop();
            }
        }
    }

    let mut search = Search {
        kernel,
        max_size,
        current: Vec::with_capacity(max_size),
        best: Vec::new(),
        best_value: 0.0,
    };
    search.visit(0, &CholeskyFactor::empty());
    Ok((search.best, search.best_value))
}

/// Adds the item of largest exact gain until no gain is positive or the
/// budget is reached. Ties go to the smallest index.
pub fn exact_greedy(kernel: &KernelMatrix, budget: Option<usize>) -> Result<GreedyOutcome> {
    let start = Instant::now();
    let mut state = GreedyState::new(kernel.dim());
    let mut stats = SolveStats::default();
    while !budget_reached(&state, budget) {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for &i in state.remaining() {
            let g = state.exact_gain(kernel, i);
            if g > best.0 {
                best = (g, i);
            }
        }
        stats.exact_evals += state.remaining().len();
        if !(best.0 > 0.0) {
            break;
        }
        state.commit(kernel, best.1)?;
        stats.iterations += 1;
    }
    GreedyOutcome::finish(kernel, state, stats, start.elapsed())
}

/// How [`lazy_greedy`] recomputes a stale gain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case")]
pub enum LazyBackend {
    /// Triangular solves with the maintained factor.
    #[default]
    Factor,
    /// A conjugate-gradient solve with `L_X` per re-evaluation.
    Cg(CgOptions),
}

#[derive(Debug, Clone, Copy)]
struct Bound {
    gain: f64,
    item: usize,
    stamp: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Bound {}
impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then_with(|| other.item.cmp(&self.item))
    }
}

/// Greedy with stale upper bounds kept in a max-heap.
///
/// By submodularity a gain computed for a smaller selected set bounds the
/// current one from above, so only the top of the heap needs refreshing.
/// With [`LazyBackend::Factor`] the selected sequence is identical to
/// [`exact_greedy`].
pub fn lazy_greedy(kernel: &KernelMatrix, budget: Option<usize>, backend: LazyBackend) -> Result<GreedyOutcome> {
    let start = Instant::now();
    let mut state = GreedyState::new(kernel.dim());
    let mut stats = SolveStats::default();
    let mut heap: BinaryHeap<Bound> = (0..kernel.dim())
        .map(|i| Bound {
            gain: log_or_neg_inf(kernel.get(i, i)),
            item: i,
            stamp: 0,
        })
        .collect();
    stats.exact_evals += kernel.dim();

    while !budget_reached(&state, budget) {
        let Some(top) = heap.pop() else { break };
        if top.stamp == state.len() {
            if !(top.gain > 0.0) {
                break;
            }
            state.commit(kernel, top.item)?;
            stats.iterations += 1;
            continue;
        }
        let gain = match backend {
            LazyBackend::Factor => state.exact_gain(kernel, top.item),
            LazyBackend::Cg(opts) => cg_gain(kernel, &state, top.item, &opts, &mut stats)?,
        };
        stats.exact_evals += 1;
        heap.push(Bound {
            gain,
            item: top.item,
            stamp: state.len(),
        });
    }
    GreedyOutcome::finish(kernel, state, stats, start.elapsed())
}

fn cg_gain(kernel: &KernelMatrix, state: &GreedyState, item: usize, opts: &CgOptions, stats: &mut SolveStats) -> Result<f64> {
    let border = state.border_column(kernel, item);
    let b = Array1::from(border);
    let rep = cg_solve(&DenseOperator::new(state.gram()), b.view(), opts)?;
    stats.record_cg(std::slice::from_ref(&rep));
    let quad = dot(b.as_slice().expect("contiguous"), rep.solution.as_slice().expect("contiguous"));
    Ok(log_or_neg_inf(kernel.get(item, item) - quad))
}
