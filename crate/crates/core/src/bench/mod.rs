//! Benchmark harness: head-to-head runs against lazy greedy, parameter
//! sweeps and the shared-probe variance study.
//!
//! Quality is reported as `log det L_X / log det L_{X_lazy}` and speed as
//! lazy wall-clock divided by the algorithm's. Wall-clock covers the solve
//! call only and is the median over repetitions.

mod variance;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{
    algorithm1, algorithm2, brute_force_map, exact_greedy, lazy_greedy, subset_log_det, Algorithm1Options, Algorithm2Options,
    GreedyOutcome, LazyBackend,
};
use crate::kernel::{generate_synthetic_kernel, load_kernel, KernelMatrix, SyntheticConfig};
use crate::linalg::CgOptions;

pub use variance::{variance_study, VarianceConfig, VarianceReport, VarianceTrial};

/// Where the kernel of each run comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum KernelSource {
    /// A synthetic kernel regenerated for every seed (the config's own seed
    /// is replaced by the run seed).
    Synthetic(SyntheticConfig),
    /// One kernel file shared by every seed.
    File { path: PathBuf },
}

impl KernelSource {
    pub fn load(&self, seed: u64) -> Result<KernelMatrix> {
        match self {
            KernelSource::Synthetic(cfg) => generate_synthetic_kernel(&SyntheticConfig { seed, ..*cfg }),
            KernelSource::File { path } => load_kernel(path),
        }
    }
}

/// One algorithm with its parameters. Seeds and budgets come from the
/// experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Exact,
    Lazy,
    LazyCg { cg: CgOptions },
    Alg1(Algorithm1Options),
    Alg2(Algorithm2Options),
    Brute,
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Exact => "exact",
            AlgorithmSpec::Lazy => "lazy",
            AlgorithmSpec::LazyCg { .. } => "lazy-cg",
            AlgorithmSpec::Alg1(_) => "alg1",
            AlgorithmSpec::Alg2(_) => "alg2",
            AlgorithmSpec::Brute => "brute",
        }
    }

    /// Compact parameter string for reports, e.g. `p=5;ell=20`.
    pub fn params(&self) -> String {
        match self {
            AlgorithmSpec::Exact | AlgorithmSpec::Lazy | AlgorithmSpec::Brute => String::new(),
            AlgorithmSpec::LazyCg { cg } => format!("tol={:e};max_iter={}", cg.tol, cg.max_iter),
            AlgorithmSpec::Alg1(o) => format!("p={};ell={}", o.p, o.ell),
            AlgorithmSpec::Alg2(o) => format!("p={};k={};s={};m={};n={};ell={}", o.p, o.k, o.s, o.m, o.n, o.ell),
        }
    }

    pub fn from_backend(backend: LazyBackend) -> Self {
        match backend {
            LazyBackend::Factor => AlgorithmSpec::Lazy,
            LazyBackend::Cg(cg) => AlgorithmSpec::LazyCg { cg },
        }
    }

    /// Runs the algorithm once.
    pub fn run(&self, kernel: &KernelMatrix, seed: u64, budget: Option<usize>) -> Result<GreedyOutcome> {
        match self {
            AlgorithmSpec::Exact => exact_greedy(kernel, budget),
            AlgorithmSpec::Lazy => lazy_greedy(kernel, budget, LazyBackend::Factor),
            AlgorithmSpec::LazyCg { cg } => lazy_greedy(kernel, budget, LazyBackend::Cg(*cg)),
            AlgorithmSpec::Alg1(o) => algorithm1(kernel, &Algorithm1Options { seed, budget, ..*o }),
            AlgorithmSpec::Alg2(o) => algorithm2(kernel, &Algorithm2Options { seed, budget, ..*o }),
            AlgorithmSpec::Brute => {
                let start = std::time::Instant::now();
                let cap = budget.unwrap_or(kernel.dim());
                let (set, log_det) = brute_force_map(kernel, cap)?;
                Ok(GreedyOutcome {
                    selected: set,
                    log_det,
                    gains: Vec::new(),
                    stats: Default::default(),
                    elapsed: start.elapsed(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: KernelSource,
    pub algorithms: Vec<AlgorithmSpec>,
    pub seeds: Vec<u64>,
    /// Timed runs per cell; the reported time is their median.
    pub repetitions: usize,
    /// Cardinality cap applied to every algorithm, the baseline included.
    pub budget: Option<usize>,
    /// The lazy greedy variant that ratios and speedups refer to.
    pub baseline: LazyBackend,
    /// Report path; `.csv` and `.json` files are written next to it.
    pub output: Option<PathBuf>,
    /// Seeds run concurrently on this many threads (1 keeps timings clean).
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(kernel: KernelSource, algorithms: Vec<AlgorithmSpec>, seeds: Vec<u64>) -> Self {
        Self {
            kernel,
            algorithms,
            seeds,
            repetitions: 1,
            budget: None,
            baseline: LazyBackend::Cg(CgOptions::default()),
            output: None,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("experiment needs at least one algorithm".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        if self.repetitions == 0 || self.threads == 0 {
            return Err(Error::Config("repetitions and threads must be positive".into()));
        }
        Ok(())
    }
}

/// One (algorithm, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub algo: String,
    pub seed: u64,
    pub d: usize,
    pub params: String,
    pub set_size: usize,
    pub logdet: f64,
    pub ratio: f64,
    pub ms: f64,
    pub speedup: f64,
    pub cg_iters: usize,
    pub exact_evals: usize,
    pub selected: Vec<usize>,
    /// Set when the cell failed; numeric fields are then NaN or zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<RunRow>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    algo: &'a str,
    seed: u64,
    d: usize,
    params: &'a str,
    set_size: usize,
    logdet: f64,
    ratio: f64,
    ms: f64,
    speedup: f64,
    cg_iters: usize,
    exact_evals: usize,
}

impl RunReport {
    pub fn rows_for<'a>(&'a self, algo: &'a str, params: Option<&'a str>) -> impl Iterator<Item = &'a RunRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.algo == algo && r.error.is_none() && params.is_none_or(|p| r.params == p))
    }

    pub fn median_ratio(&self, algo: &str, params: Option<&str>) -> Option<f64> {
        median(self.rows_for(algo, params).map(|r| r.ratio).collect())
    }

    pub fn median_speedup(&self, algo: &str, params: Option<&str>) -> Option<f64> {
        median(self.rows_for(algo, params).map(|r| r.speedup).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(CsvRow {
                algo: &r.algo,
                seed: r.seed,
                d: r.d,
                params: &r.params,
                set_size: r.set_size,
                logdet: r.logdet,
                ratio: r.ratio,
                ms: r.ms,
                speedup: r.speedup,
                cg_iters: r.cg_iters,
                exact_evals: r.exact_evals,
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

/// Median of finite values; `None` if there are none.
pub fn median(mut values: Vec<f64>) -> Option<f64> {
    values.retain(|v| v.is_finite());
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

struct Timed {
    outcome: GreedyOutcome,
    ms: f64,
}

fn timed_run(spec: &AlgorithmSpec, kernel: &KernelMatrix, seed: u64, cfg: &ExperimentConfig) -> Result<Timed> {
    let mut times = Vec::with_capacity(cfg.repetitions);
    let mut first = None;
    for _ in 0..cfg.repetitions {
        let out = spec.run(kernel, seed, cfg.budget)?;
        times.push(out.elapsed_ms());
        first.get_or_insert(out);
    }
    Ok(Timed {
        outcome: first.expect("at least one repetition"),
        ms: median(times).unwrap_or(f64::NAN),
    })
}

fn failed_row(spec: &AlgorithmSpec, seed: u64, d: usize, err: &Error) -> RunRow {
    RunRow {
        algo: spec.name().into(),
        seed,
        d,
        params: spec.params(),
        set_size: 0,
        logdet: f64::NAN,
        ratio: f64::NAN,
        ms: f64::NAN,
        speedup: f64::NAN,
        cg_iters: 0,
        exact_evals: 0,
        selected: Vec::new(),
        error: Some(err.to_string()),
    }
}

fn row_from(spec: &AlgorithmSpec, seed: u64, d: usize, run: &Timed, base: Option<&Timed>) -> RunRow {
    let (ratio, speedup) = match base {
        Some(b) => (run.outcome.log_det / b.outcome.log_det, b.ms / run.ms),
        None => (f64::NAN, f64::NAN),
    };
    RunRow {
        algo: spec.name().into(),
        seed,
        d,
        params: spec.params(),
        set_size: run.outcome.selected.len(),
        logdet: run.outcome.log_det,
        ratio,
        ms: run.ms,
        speedup,
        cg_iters: run.outcome.stats.cg_iters,
        exact_evals: run.outcome.stats.exact_evals,
        selected: run.outcome.selected.clone(),
        error: None,
    }
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Vec<RunRow> {
    let baseline = AlgorithmSpec::from_backend(cfg.baseline);
    let kernel = match cfg.kernel.load(seed) {
        Ok(k) => k,
        Err(e) => {
            let mut rows = vec![failed_row(&baseline, seed, 0, &e)];
            rows.extend(cfg.algorithms.iter().filter(|a| **a != baseline).map(|a| failed_row(a, seed, 0, &e)));
            return rows;
        }
    };
    let d = kernel.dim();
    let base = timed_run(&baseline, &kernel, seed, cfg);
    let mut rows = Vec::with_capacity(cfg.algorithms.len() + 1);
    match &base {
        Ok(b) => {
            let mut row = row_from(&baseline, seed, d, b, Some(b));
            row.ratio = 1.0;
            row.speedup = 1.0;
            rows.push(row);
        }
        Err(e) => rows.push(failed_row(&baseline, seed, d, e)),
    }
    for spec in cfg.algorithms.iter().filter(|a| **a != baseline) {
        match timed_run(spec, &kernel, seed, cfg) {
            Ok(run) => rows.push(row_from(spec, seed, d, &run, base.as_ref().ok())),
            Err(e) => rows.push(failed_row(spec, seed, d, &e)),
        }
    }
    rows
}

/// Runs the baseline and then every algorithm on every seed.
///
/// A failing cell is recorded with its error and the run continues. When
/// `cfg.output` is set the report is saved as CSV and JSON.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut per_seed: Vec<Vec<RunRow>> = vec![Vec::new(); cfg.seeds.len()];
    if cfg.threads <= 1 || cfg.seeds.len() == 1 {
        for (slot, &seed) in per_seed.iter_mut().zip(&cfg.seeds) {
            *slot = run_seed(cfg, seed);
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let results = std::sync::Mutex::new(&mut per_seed);
        std::thread::scope(|scope| {
            for _ in 0..cfg.threads.min(cfg.seeds.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(&seed) = cfg.seeds.get(i) else { break };
                    let rows = run_seed(cfg, seed);
                    results.lock().expect("no worker panics while holding the lock")[i] = rows;
                });
            }
        });
    }
    let report = RunReport { rows: per_seed.concat() };
    if let Some(path) = &cfg.output {
        report.save(path)?;
    }
    Ok(report)
}

/// Re-scores every stored set with a fresh factorization and returns the
/// largest deviation from the logged value.
pub fn verify_report(report: &RunReport, cfg: &ExperimentConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for seed in &cfg.seeds {
        let kernel = cfg.kernel.load(*seed)?;
        for row in report.rows.iter().filter(|r| r.seed == *seed && r.error.is_none()) {
            worst = worst.max((subset_log_det(&kernel, &row.selected)? - row.logdet).abs());
        }
    }
    Ok(worst)
}

/// The parameter varied by [`parameter_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    /// Number of partitions of the single-item estimator.
    P(Vec<usize>),
    /// Batch size of the batch estimator.
    K(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub values: Vec<usize>,
    pub report: RunReport,
}

impl SweepReport {
    fn params_for(&self, value: usize) -> Option<&str> {
        let key = format!("{}={value};", self.axis);
        self.report
            .rows
            .iter()
            .find(|r| r.algo != "lazy" && r.algo != "lazy-cg" && format!("{};", r.params).contains(&key))
            .map(|r| r.params.as_str())
    }

    /// Median ratio over seeds at one sweep value.
    pub fn median_ratio(&self, value: usize) -> Option<f64> {
        let params = self.params_for(value)?;
        let algo = if self.axis == "p" { "alg1" } else { "alg2" };
        self.report.median_ratio(algo, Some(params))
    }
}

/// Repeats a comparison with one parameter varied.
///
/// A `p` sweep varies the first single-item estimator in `cfg.algorithms`
/// (or the default one) and a `k` sweep varies the first batch estimator.
pub fn parameter_sweep(cfg: &ExperimentConfig, sweep: &Sweep) -> Result<SweepReport> {
    let (axis, values, algorithms): (&str, &[usize], Vec<AlgorithmSpec>) = match sweep {
        Sweep::P(values) => {
            let base = cfg
                .algorithms
                .iter()
                .find_map(|a| if let AlgorithmSpec::Alg1(o) = a { Some(*o) } else { None })
                .unwrap_or_default();
            ("p", values, values.iter().map(|&p| AlgorithmSpec::Alg1(Algorithm1Options { p, ..base })).collect())
        }
        Sweep::K(values) => {
            let base = cfg
                .algorithms
                .iter()
                .find_map(|a| if let AlgorithmSpec::Alg2(o) = a { Some(*o) } else { None })
                .unwrap_or_default();
            ("k", values, values.iter().map(|&k| AlgorithmSpec::Alg2(Algorithm2Options { k, ..base })).collect())
        }
    };
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let run_cfg = ExperimentConfig { algorithms, ..cfg.clone() };
    let report = run_comparison(&run_cfg)?;
    Ok(SweepReport {
        axis: axis.into(),
        values: values.to_vec(),
        report,
    })
}
