use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dppmap", version, about = "Greedy MAP inference for determinantal point processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic kernel and save it.
    GenKernel(GenKernelArgs),
    /// Run one maximizer on a kernel.
    Solve(SolveArgs),
    /// Compare algorithms against lazy greedy over several seeds.
    Bench(BenchArgs),
    /// Vary the partition count or the batch size.
    Sweep(SweepArgs),
    /// Shared versus independent probe variance study.
    Variance(VarianceArgs),
    /// Recompute the log-determinant of a given set.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SeedArg {
    /// Random seed.
    #[arg(long, env = "DPPMAP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct SyntheticArgs {
    /// Number of items.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Quality slope.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.01)]
    pub beta1: f64,
    /// Quality offset.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.2)]
    pub beta2: f64,
    /// Added to the diagonal of the kernel.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.01)]
    pub shift: f64,
    /// Feature vector length (defaults to the number of items).
    #[arg(long)]
    pub feature_dim: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct KernelArgs {
    /// Kernel file (binary `.dppk`, or `.csv`/`.txt`). Without it a synthetic
    /// kernel is generated from `--dim`.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Exact,
    Lazy,
    LazyCg,
    Alg1,
    Alg2,
    Brute,
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// Number of partitions.
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Batch size.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Sampled batches per iteration.
    #[arg(long, default_value_t = 50)]
    pub s: usize,
    /// Probe vectors per log-determinant estimate.
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    /// Chebyshev degree.
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    /// Candidates re-scored exactly per iteration.
    #[arg(long, default_value_t = 20)]
    pub ell: usize,
    /// Largest set size.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Relative CG tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// CG iteration cap.
    #[arg(long, default_value_t = 1000)]
    pub max_cg_iter: usize,
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    /// Print a machine-readable JSON result.
    #[arg(long)]
    pub json: bool,
    /// Worker threads (only seeds of a benchmark run concurrently).
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct GenKernelArgs {
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Output path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum, default_value_t = Algo::Alg1)]
    pub algo: Algo,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Timed repetitions; the median time is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Also write the result as JSON to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Algorithms to compare (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Alg1, Algo::Alg2])]
    pub algo: Vec<Algo>,
    /// Number of consecutive seeds, starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Baseline the ratios and speedups refer to.
    #[arg(long, value_enum, default_value_t = Algo::LazyCg)]
    pub baseline: Algo,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Report path; `.csv` and `.json` files are written.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    P,
    K,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Parameter values (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, value_enum, default_value_t = Algo::Lazy)]
    pub baseline: Algo,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub seed: SeedArg,
    /// Matrix sizes (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [50])]
    pub dim: Vec<usize>,
    /// Relative perturbation sizes (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.001, 0.01, 0.1])]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    /// Requested interval margin.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Probe sets per trial.
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Item indices (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub set: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}
