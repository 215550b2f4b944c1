use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut2, Axis, Zip};

use super::{ChebyshevExpansion, ProbeSet, RescaledOperator, Rescaling};
use crate::error::{Error, Result};
use crate::linalg::{BorderedFamily, LinearOperator};

/// Runs the Chebyshev recurrence on every row of `probes` at once and returns
/// `vᵀ p_n(cA) v` per row. `apply` must compute `y = A x` row-wise for the
/// unscaled operator.
fn chebyshev_forms<F>(mut apply: F, scale: f64, exp: &ChebyshevExpansion, probes: ArrayView2<'_, f64>) -> Result<Array1<f64>>
where
    F: FnMut(ArrayView2<'_, f64>, ArrayViewMut2<'_, f64>),
{
    let coeffs = exp.coefficients();
    let width = 1.0 - 2.0 * exp.delta();
    let shape = probes.raw_dim();

    let mut w0 = probes.to_owned();
    let mut u = &w0 * coeffs[0];
    let mut aw = Array2::<f64>::zeros(shape);
    if exp.degree() >= 1 {
        // w1 = (2/(1−2δ)) Ãv − (1/(1−2δ)) v
        apply(w0.view(), aw.view_mut());
        let mut w1 = Array2::<f64>::zeros(shape);
        let (a1, b1) = (2.0 * scale / width, 1.0 / width);
        Zip::from(&mut w1).and(&aw).and(&w0).for_each(|w, &a, &v| *w = a1 * a - b1 * v);
        u.scaled_add(coeffs[1], &w1);

        // w2 = (4/(1−2δ)) Ãw1 − (2/(1−2δ)) w1 − w0
        let (a2, b2) = (4.0 * scale / width, 2.0 / width);
        for &c in &coeffs[2..] {
            apply(w1.view(), aw.view_mut());
            Zip::from(&mut w0).and(&aw).and(&w1).for_each(|w_old, &a, &w| *w_old = a2 * a - b2 * w - *w_old);
            u.scaled_add(c, &w0);
            std::mem::swap(&mut w0, &mut w1);
        }
    }

    let forms: Array1<f64> = Zip::from(probes.rows()).and(u.rows()).map_collect(|v, u| v.dot(&u));
    if let Some(bad) = forms.iter().position(|f| !f.is_finite()) {
        return Err(Error::Numeric(format!("non-finite Chebyshev term for probe {bad}")));
    }
    Ok(forms)
}

fn check_expansion(rescaling: &Rescaling, exp: &ChebyshevExpansion) -> Result<()> {
    if exp.delta() > rescaling.delta * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "expansion interval margin {} exceeds the spectrum margin {}",
            exp.delta(),
            rescaling.delta
        )));
    }
    Ok(())
}

fn check_probes(dim: usize, probes: &ProbeSet) -> Result<()> {
    if probes.dim() != dim {
        return Err(Error::Dimension(format!("probe length {} != operator dimension {dim}", probes.dim())));
    }
    Ok(())
}

/// Per-probe values `vᵀ p_n(cA) v`, without the rescaling correction.
pub fn quadratic_forms<O: LinearOperator + ?Sized>(
    op: &RescaledOperator<'_, O>,
    exp: &ChebyshevExpansion,
    probes: &ProbeSet,
) -> Result<Array1<f64>> {
    check_expansion(&op.rescaling(), exp)?;
    check_probes(op.dim(), probes)?;
    let source = op.source();
    chebyshev_forms(|x, y| source.apply_block(x, y), op.scale(), exp, probes.vectors())
}

/// Estimate of `log det A` from the operator `cA`.
pub fn ldas_logdet<O: LinearOperator + ?Sized>(op: &RescaledOperator<'_, O>, exp: &ChebyshevExpansion, probes: &ProbeSet) -> Result<f64> {
    let forms = quadratic_forms(op, exp, probes)?;
    Ok(forms.sum() / forms.len() as f64 + op.log_det_correction())
}

/// `(Γ_A, Γ_B, Γ_A − Γ_B)` with both estimates drawn from the same probes.
pub fn shared_probe_difference<A, B>(
    a: &RescaledOperator<'_, A>,
    b: &RescaledOperator<'_, B>,
    exp: &ChebyshevExpansion,
    probes: &ProbeSet,
) -> Result<(f64, f64, f64)>
where
    A: LinearOperator + ?Sized,
    B: LinearOperator + ?Sized,
{
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("operators differ in dimension: {} vs {}", a.dim(), b.dim())));
    }
    if a.rescaling() != b.rescaling() {
        return Err(Error::Parameter("shared-probe comparison needs a common scale and margin".into()));
    }
    let ga = ldas_logdet(a, exp, probes)?;
    let gb = ldas_logdet(b, exp, probes)?;
    Ok((ga, gb, ga - gb))
}

/// As [`shared_probe_difference`], but each operator gets its own probes.
pub fn independent_probe_difference<A, B>(
    a: &RescaledOperator<'_, A>,
    b: &RescaledOperator<'_, B>,
    exp: &ChebyshevExpansion,
    probes_a: &ProbeSet,
    probes_b: &ProbeSet,
) -> Result<(f64, f64, f64)>
where
    A: LinearOperator + ?Sized,
    B: LinearOperator + ?Sized,
{
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("operators differ in dimension: {} vs {}", a.dim(), b.dim())));
    }
    let ga = ldas_logdet(a, exp, probes_a)?;
    let gb = ldas_logdet(b, exp, probes_b)?;
    Ok((ga, gb, ga - gb))
}

/// Log-determinant estimates for every member of a bordered family, all
/// scaled by the same `rescaling` and all using the same probes.
///
/// The members are estimated together: one Chebyshev recurrence over a block
/// of `len · m` probe rows, ordered member-major.
pub fn ldas_logdet_family(
    family: &BorderedFamily<'_>,
    rescaling: &Rescaling,
    exp: &ChebyshevExpansion,
    probes: &ProbeSet,
) -> Result<Vec<f64>> {
    check_expansion(rescaling, exp)?;
    check_probes(family.dim(), probes)?;
    let m = probes.count();
    let groups: Vec<usize> = (0..family.len()).flat_map(|g| std::iter::repeat_n(g, m)).collect();
    let mut block = Array2::<f64>::zeros((groups.len(), family.dim()));
    for (g, mut chunk) in block.axis_chunks_iter_mut(Axis(0), m).enumerate() {
        debug_assert!(g < family.len());
        chunk.assign(&probes.vectors());
    }
    let forms = chebyshev_forms(|x, y| family.apply_grouped(&groups, x, y), rescaling.scale, exp, block.view())
        .map_err(|e| e.context("family log-determinant estimate"))?;
    let correction = rescaling.log_det_correction(family.dim());
    Ok(forms
        .axis_chunks_iter(Axis(0), m)
        .map(|c| c.sum() / m as f64 + correction)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldas::chebyshev_coefficients;
    use crate::linalg::DenseOperator;
    use ndarray::array;

    fn fixed_rescaling(scale: f64, delta: f64) -> Rescaling {
        Rescaling { scale, delta }
    }

    #[test]
    fn half_identity_matches_node_value() {
        let d = 8;
        let a = Array2::<f64>::eye(d) * 0.5;
        let op = DenseOperator::new(a.view());
        let r = RescaledOperator::with_rescaling(&op, fixed_rescaling(1.0, 0.01));
        let exp = chebyshev_coefficients(15, 0.01).unwrap();
        let probes = ProbeSet::rademacher(d, 5, 1, 0).unwrap();
        let g = ldas_logdet(&r, &exp, &probes).unwrap();
        assert!((g - d as f64 * exp.evaluate(0.5)).abs() < 1e-12);
        assert!((g - d as f64 * 0.5f64.ln()).abs() < d as f64 * exp.sup_error(1000) + 1e-12);
    }

    #[test]
    fn identical_operators_give_zero_difference() {
        let a = array![[0.4, 0.1], [0.1, 0.6]];
        let op = DenseOperator::new(a.view());
        let r = RescaledOperator::with_rescaling(&op, fixed_rescaling(1.0, 0.05));
        let exp = chebyshev_coefficients(15, 0.05).unwrap();
        let probes = ProbeSet::rademacher(2, 20, 4, 0).unwrap();
        let (ga, gb, diff) = shared_probe_difference(&r, &r, &exp, &probes).unwrap();
        assert_eq!(ga, gb);
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn diagonal_correction_identity() {
        let a = array![[2.0, 0.0], [0.0, 10.0]];
        let op = DenseOperator::new(a.view());
        let bounds = crate::kernel::SpectralBounds::new(2.0, 10.0, crate::kernel::BoundMethod::Gershgorin).unwrap();
        let r = crate::ldas::rescale_spectrum(&op, &bounds, 0.01).unwrap();
        let exact_scaled: f64 = [2.0f64, 10.0].iter().map(|l| (r.scale() * l).ln()).sum();
        assert!((exact_scaled + r.log_det_correction() - 20f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_probe_length_rejected() {
        let a = Array2::<f64>::eye(3) * 0.5;
        let op = DenseOperator::new(a.view());
        let r = RescaledOperator::with_rescaling(&op, fixed_rescaling(1.0, 0.01));
        let exp = chebyshev_coefficients(5, 0.01).unwrap();
        let probes = ProbeSet::rademacher(4, 2, 0, 0).unwrap();
        assert!(matches!(ldas_logdet(&r, &exp, &probes), Err(Error::Dimension(_))));
    }

    #[test]
    fn expansion_wider_than_spectrum_margin_rejected() {
        let a = Array2::<f64>::eye(3) * 0.5;
        let op = DenseOperator::new(a.view());
        let r = RescaledOperator::with_rescaling(&op, fixed_rescaling(1.0, 0.01));
        let exp = chebyshev_coefficients(5, 0.1).unwrap();
        let probes = ProbeSet::rademacher(3, 2, 0, 0).unwrap();
        assert!(matches!(ldas_logdet(&r, &exp, &probes), Err(Error::Parameter(_))));
    }
}
