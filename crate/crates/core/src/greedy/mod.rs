//! Greedy maximizers of `log det L_X`.
//!
//! [`exact_greedy`] and [`lazy_greedy`] evaluate exact Schur-complement
//! gains. [`algorithm1`] ranks candidates by a first-order expansion around
//! averaged bordered kernels, and [`algorithm2`] adds whole batches ranked
//! with shared-probe log-determinant estimates. Both approximate methods
//! re-score their top `ℓ` candidates exactly before committing.

mod batch;
mod exact;
mod first_order;
mod partition;
mod state;

use std::time::Duration;

use serde::Serialize;

use crate::linalg::CgReport;

pub use batch::{algorithm2, batch_first_order_gains, Algorithm2Options};
pub use exact::{brute_force_map, exact_greedy, lazy_greedy, LazyBackend, BRUTE_FORCE_LIMIT};
pub use first_order::{algorithm1, first_order_gains, top_l_refine, Algorithm1Options, Candidate, EstimateKind, GainEstimate};
pub use partition::{sample_batches, BatchCandidate, Partition};
pub use state::{subset_log_det, GreedyState};

/// Work counters collected during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub exact_evals: usize,
    pub cg_solves: usize,
    pub cg_iters: usize,
    pub cg_unconverged: usize,
    /// Iterations of every CG solve, in the order they were run.
    #[serde(skip)]
    pub cg_iteration_counts: Vec<u32>,
    /// Solves redone with the Cholesky factor after CG failed to converge.
    pub fallbacks: usize,
    pub batch_steps: usize,
    pub single_steps: usize,
    pub ldas_matvecs: usize,
    /// Largest `|Δ − exact gain|` seen, when estimate tracking is on.
    pub max_estimate_error: Option<f64>,
}

impl SolveStats {
    pub(crate) fn record_cg(&mut self, reports: &[CgReport]) {
        for r in reports {
            self.cg_solves += 1;
            self.cg_iters += r.iterations;
            self.cg_iteration_counts.push(r.iterations as u32);
            if !r.converged {
                self.cg_unconverged += 1;
            }
        }
    }

    pub(crate) fn record_estimate_error(&mut self, err: f64) {
        if err.is_finite() {
            let cur = self.max_estimate_error.unwrap_or(0.0);
            self.max_estimate_error = Some(cur.max(err));
        }
    }
}

/// Result of one greedy run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyOutcome {
    /// Items in the order they were added.
    pub selected: Vec<usize>,
    /// `log det L_X`, recomputed from scratch on the final set.
    pub log_det: f64,
    /// Exact gain of each added item.
    pub gains: Vec<f64>,
    pub stats: SolveStats,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl GreedyOutcome {
    pub(crate) fn finish(kernel: &crate::KernelMatrix, state: GreedyState, stats: SolveStats, elapsed: Duration) -> crate::Result<Self> {
        let log_det = state.recompute_log_det(kernel)?;
        Ok(Self {
            gains: state.accepted_gains().to_vec(),
            selected: state.selected().to_vec(),
            log_det,
            stats,
            elapsed,
        })
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e3
    }

    /// The selected items in increasing order.
    pub fn sorted_set(&self) -> Vec<usize> {
        let mut s = self.selected.clone();
        s.sort_unstable();
        s
    }
}

pub(crate) fn budget_reached(state: &GreedyState, budget: Option<usize>) -> bool {
    state.remaining().is_empty() || budget.is_some_and(|b| state.len() >= b)
}
