//! Stochastic log-determinant estimation.
//!
//! `log det A = tr log A ≈ tr p_n(A) ≈ (1/m) Σ vᵀ p_n(A) v`, with `p_n` the
//! degree-`n` Chebyshev interpolant of `log` on `[δ, 1−δ]` and `v` Rademacher
//! probes. The matrix must first be scaled so its spectrum lies in that
//! interval; [`rescale_spectrum`] does this from [`SpectralBounds`].
//!
//! [`SpectralBounds`]: crate::kernel::SpectralBounds

mod chebyshev;
mod estimate;
mod probes;
mod rescale;

pub use chebyshev::{analytic_constants, chebyshev_coefficients, coefficient_weight_bound, variance_bound, ChebyshevExpansion};
pub use estimate::{independent_probe_difference, ldas_logdet, ldas_logdet_family, quadratic_forms, shared_probe_difference};
pub use probes::ProbeSet;
pub use rescale::{rescale_spectrum, RescaledOperator, Rescaling};

/// Default interval margin before clamping.
pub const DEFAULT_DELTA: f64 = 0.01;
/// Default number of probe vectors.
pub const DEFAULT_PROBES: usize = 20;
/// Default polynomial degree.
pub const DEFAULT_DEGREE: usize = 15;
