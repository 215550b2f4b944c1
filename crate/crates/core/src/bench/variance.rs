use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{spectral_bounds, BoundMethod, KernelMatrix, SpectralBounds};
use crate::ldas::{chebyshev_coefficients, quadratic_forms, variance_bound, ProbeSet, RescaledOperator, Rescaling};
use crate::linalg::{frobenius_norm, DenseOperator};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConfig {
    /// Matrix sizes, cycled over trials together with `scales`.
    pub dims: Vec<usize>,
    /// `‖B − A‖_F / ‖A‖_F` of the perturbation.
    pub scales: Vec<f64>,
    pub m: usize,
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    /// Independent probe sets per trial used to estimate each variance.
    pub draws: usize,
    pub seed: u64,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self {
            dims: vec![50],
            scales: vec![0.001, 0.01, 0.1],
            m: 20,
            n: 15,
            delta: 0.01,
            trials: 100,
            draws: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceTrial {
    pub trial: usize,
    pub dim: usize,
    pub scale: f64,
    /// `‖cA − cB‖_F` of the rescaled pair.
    pub frobenius_diff: f64,
    pub var_shared: f64,
    pub var_indep: f64,
    pub bound: f64,
    /// Interval margin of the rescaled pair.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VarianceReport {
    pub trials: Vec<VarianceTrial>,
}

#[derive(Serialize)]
struct CsvRow {
    trial: usize,
    frobenius_diff: f64,
    var_shared: f64,
    var_indep: f64,
    bound: f64,
}

impl VarianceReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for t in &self.trials {
            w.serialize(CsvRow {
                trial: t.trial,
                frobenius_diff: t.frobenius_diff,
                var_shared: t.var_shared,
                var_indep: t.var_indep,
                bound: t.bound,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<path>.csv` and `<path>.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path.with_extension("csv"))?))?;
        serde_json::to_writer_pretty(BufWriter::new(File::create(path.with_extension("json"))?), self)?;
        Ok(())
    }
}

/// `A = WWᵀ/d + I` with Gaussian `W`, and `B = A + E` for a symmetric
/// Gaussian `E` scaled to `‖E‖_F = scale·‖A‖_F`.
fn random_pair(dim: usize, scale: f64, seed: u64, trial: u64) -> Result<(KernelMatrix, KernelMatrix)> {
    let mut rng = stream(seed, Purpose::Matrices, trial);
    let w = Array2::from_shape_simple_fn((dim, dim), || rng.sample::<f64, _>(StandardNormal));
    let mut a = w.dot(&w.t()) / dim as f64;
    a.diag_mut().mapv_inplace(|v| v + 1.0);
    let a = (&a + &a.t()) * 0.5;

    let g = Array2::from_shape_simple_fn((dim, dim), || rng.sample::<f64, _>(StandardNormal));
    let e = (&g + &g.t()) * 0.5;
    let en = frobenius_norm(e.view());
    let e = if en > 0.0 { e * (scale * frobenius_norm(a.view()) / en) } else { e };
    let b = &a + &e;
    Ok((KernelMatrix::new(a)?, KernelMatrix::new(b).map_err(|err| err.context("perturbed matrix"))?))
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

fn draw_means(forms: &ndarray::Array1<f64>, m: usize) -> Vec<f64> {
    forms.axis_chunks_iter(Axis(0), m).map(|c| c.sum() / m as f64).collect()
}

/// Estimates `Var[Γ_A − Γ_B]` with shared and with independent probes for
/// random pairs `(A, B)`, next to the theoretical bound for shared probes.
///
/// Both matrices of a pair are scaled by a common factor so their spectra
/// lie in `[δ, 1−δ]`; the variances and the bound refer to the scaled pair.
pub fn variance_study(cfg: &VarianceConfig) -> Result<VarianceReport> {
    if cfg.trials < 30 {
        return Err(Error::Parameter(format!("variance study needs at least 30 trials, got {}", cfg.trials)));
    }
    if cfg.dims.is_empty() || cfg.scales.is_empty() || cfg.draws < 2 || cfg.m == 0 {
        return Err(Error::Parameter("variance study needs dims, scales, m ≥ 1 and at least 2 draws".into()));
    }
    let combos: Vec<(usize, f64)> = cfg.dims.iter().flat_map(|&d| cfg.scales.iter().map(move |&s| (d, s))).collect();
    let mut trials = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let (dim, scale) = combos[trial % combos.len()];
        let (a, b) = random_pair(dim, scale, cfg.seed, trial as u64)?;
        let ba = spectral_bounds(&a, 50)?;
        let bb = spectral_bounds(&b, 50)?;
        let bounds = SpectralBounds::new(ba.lower.min(bb.lower), ba.upper.max(bb.upper), BoundMethod::PowerIteration)?;
        let rescaling = Rescaling::from_bounds(&bounds, cfg.delta)?;
        let exp = chebyshev_coefficients(cfg.n, rescaling.delta)?;

        let (oa, ob) = (DenseOperator::new(a.view()), DenseOperator::new(b.view()));
        let ra = RescaledOperator::with_rescaling(&oa, rescaling);
        let rb = RescaledOperator::with_rescaling(&ob, rescaling);
        let count = cfg.draws * cfg.m;
        let shared = ProbeSet::rademacher(dim, count, cfg.seed, 2 * trial as u64)?;
        let other = ProbeSet::rademacher(dim, count, cfg.seed, 2 * trial as u64 + 1)?;

        let fa = draw_means(&quadratic_forms(&ra, &exp, &shared)?, cfg.m);
        let fb = draw_means(&quadratic_forms(&rb, &exp, &shared)?, cfg.m);
        let fb_other = draw_means(&quadratic_forms(&rb, &exp, &other)?, cfg.m);
        let d_shared: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x - y).collect();
        let d_indep: Vec<f64> = fa.iter().zip(&fb_other).map(|(x, y)| x - y).collect();

        let frobenius_diff = rescaling.scale * frobenius_norm((&a.view() - &b.view()).view());
        trials.push(VarianceTrial {
            trial,
            dim,
            scale,
            frobenius_diff,
            var_shared: sample_variance(&d_shared),
            var_indep: sample_variance(&d_indep),
            bound: variance_bound(rescaling.delta, cfg.m, frobenius_diff),
            delta: rescaling.delta,
        });
    }
    Ok(VarianceReport { trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pair_has_zero_shared_variance() {
        let cfg = VarianceConfig {
            dims: vec![12],
            scales: vec![0.0],
            trials: 30,
            draws: 10,
            ..Default::default()
        };
        let report = variance_study(&cfg).unwrap();
        for t in &report.trials {
            assert_eq!(t.var_shared, 0.0);
            assert_eq!(t.frobenius_diff, 0.0);
            assert!(t.var_indep > 0.0);
        }
    }

    #[test]
    fn too_few_trials_rejected() {
        let cfg = VarianceConfig { trials: 10, ..Default::default() };
        assert!(variance_study(&cfg).is_err());
    }
}
