use ndarray::{ArrayView2, ArrayViewMut2};

use crate::error::{Error, Result};
use crate::kernel::SpectralBounds;
use crate::linalg::LinearOperator;

const MIN_DELTA: f64 = 1e-4;
const MAX_DELTA: f64 = 0.2;

/// Scale `c` and margin `δ` with `c·spectrum ⊂ [δ, 1−δ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaling {
    pub scale: f64,
    pub delta: f64,
}

impl Rescaling {
    /// `c = (1−δ)/upper`, with `δ = min(δ_target, c·lower)` clamped to
    /// `[1e-4, 0.2]`; `c` is recomputed once if the clamped `δ` breaks
    /// either end of the interval.
    pub fn from_bounds(bounds: &SpectralBounds, delta_target: f64) -> Result<Self> {
        if !(bounds.lower > 0.0) || !(bounds.upper >= bounds.lower) || !bounds.upper.is_finite() {
            return Err(Error::Rescale(format!("invalid bounds [{}, {}]", bounds.lower, bounds.upper)));
        }
        if !(delta_target > 0.0 && delta_target < 0.5) {
            return Err(Error::Rescale(format!("target delta {delta_target} outside (0, 1/2)")));
        }
        let mut scale = (1.0 - delta_target) / bounds.upper;
        let delta = delta_target.min(scale * bounds.lower).clamp(MIN_DELTA, MAX_DELTA);
        let slack = 1e-12;
        if scale * bounds.upper > (1.0 - delta) * (1.0 + slack) || scale * bounds.lower < delta * (1.0 - slack) {
            scale = (1.0 - delta) / bounds.upper;
        }
        if scale * bounds.lower < delta * (1.0 - slack) {
            return Err(Error::Rescale(format!(
                "spectrum [{}, {}] is too wide for a margin of {delta}",
                bounds.lower, bounds.upper
            )));
        }
        Ok(Self { scale, delta })
    }

    /// Term to add to an estimate of `log det(cA)` to get `log det A`.
    pub fn log_det_correction(&self, dim: usize) -> f64 {
        -(dim as f64) * self.scale.ln()
    }
}

/// `c·A` for an operator `A`, with the interval margin it was scaled for.
#[derive(Debug, Clone, Copy)]
pub struct RescaledOperator<'a, O: ?Sized> {
    source: &'a O,
    rescaling: Rescaling,
}

pub fn rescale_spectrum<'a, O: LinearOperator + ?Sized>(
    source: &'a O,
    bounds: &SpectralBounds,
    delta_target: f64,
) -> Result<RescaledOperator<'a, O>> {
    Ok(RescaledOperator {
        source,
        rescaling: Rescaling::from_bounds(bounds, delta_target)?,
    })
}

impl<'a, O: LinearOperator + ?Sized> RescaledOperator<'a, O> {
    pub fn with_rescaling(source: &'a O, rescaling: Rescaling) -> Self {
        Self { source, rescaling }
    }
    pub fn source(&self) -> &'a O {
        self.source
    }
    pub fn rescaling(&self) -> Rescaling {
        self.rescaling
    }
    pub fn scale(&self) -> f64 {
        self.rescaling.scale
    }
    pub fn delta(&self) -> f64 {
        self.rescaling.delta
    }
    pub fn log_det_correction(&self) -> f64 {
        self.rescaling.log_det_correction(self.source.dim())
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for RescaledOperator<'_, O> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn apply_block(&self, x: ArrayView2<'_, f64>, mut y: ArrayViewMut2<'_, f64>) {
        self.source.apply_block(x, y.view_mut());
        y *= self.rescaling.scale;
    }

    fn diagonal(&self) -> ndarray::Array1<f64> {
        self.source.diagonal() * self.rescaling.scale
    }
}
