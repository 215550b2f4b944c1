use std::io::Write;
use std::path::Path;

use dppmap::bench::{
    median, parameter_sweep, run_comparison, variance_study, AlgorithmSpec, ExperimentConfig, KernelSource, RunReport, Sweep,
    VarianceConfig,
};
use dppmap::greedy::{subset_log_det, Algorithm1Options, Algorithm2Options, GreedyOutcome, LazyBackend};
use dppmap::kernel::{generate_synthetic_kernel, save_binary};
use dppmap::linalg::CgOptions;
use dppmap::{Error, KernelMatrix, Result, SyntheticConfig};
use serde_json::{json, Value};

use crate::args::{
    Algo, Axis, BenchArgs, Cli, Command, GenKernelArgs, KernelArgs, SolveArgs, SolverArgs, SweepArgs, SyntheticArgs, VarianceArgs,
    VerifyArgs,
};

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenKernel(a) => gen_kernel(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Sweep(a) => sweep(a),
        Command::Variance(a) => variance(a),
        Command::Verify(a) => verify(a),
    }
}

fn synthetic_config(args: &SyntheticArgs, seed: u64) -> Result<SyntheticConfig> {
    let dim = args.dim.ok_or_else(|| Error::Config("either --kernel or --dim is required".into()))?;
    let cfg = SyntheticConfig {
        dim,
        feature_dim: args.feature_dim.unwrap_or(dim),
        quality_slope: args.beta1,
        quality_offset: args.beta2,
        monotone_shift: args.shift,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn kernel_source(args: &KernelArgs, seed: u64) -> Result<KernelSource> {
    match &args.kernel {
        Some(path) => {
            if args.synthetic.dim.is_some() {
                return Err(Error::Config("--kernel and --dim are mutually exclusive".into()));
            }
            Ok(KernelSource::File { path: path.clone() })
        }
        None => Ok(KernelSource::Synthetic(synthetic_config(&args.synthetic, seed)?)),
    }
}

fn cg_options(solver: &SolverArgs) -> Result<CgOptions> {
    if solver.tol.is_nan() || solver.tol <= 0.0 || solver.max_cg_iter == 0 {
        return Err(Error::Config("--tol and --max-cg-iter must be positive".into()));
    }
    Ok(CgOptions {
        tol: solver.tol,
        max_iter: solver.max_cg_iter,
        ..CgOptions::default()
    })
}

fn algorithm(algo: Algo, solver: &SolverArgs, seed: u64) -> Result<AlgorithmSpec> {
    let cg = cg_options(solver)?;
    Ok(match algo {
        Algo::Exact => AlgorithmSpec::Exact,
        Algo::Lazy => AlgorithmSpec::Lazy,
        Algo::LazyCg => AlgorithmSpec::LazyCg { cg },
        Algo::Brute => AlgorithmSpec::Brute,
        Algo::Alg1 => AlgorithmSpec::Alg1(Algorithm1Options {
            p: solver.p,
            ell: solver.ell,
            budget: solver.budget,
            seed,
            cg,
            ..Algorithm1Options::default()
        }),
        Algo::Alg2 => AlgorithmSpec::Alg2(Algorithm2Options {
            p: solver.p,
            k: solver.k,
            s: solver.s,
            m: solver.m,
            n: solver.n,
            ell: solver.ell,
            budget: solver.budget,
            seed,
            cg,
            ..Algorithm2Options::default()
        }),
    })
}

fn baseline(algo: Algo, solver: &SolverArgs) -> Result<LazyBackend> {
    match algo {
        Algo::Lazy => Ok(LazyBackend::Factor),
        Algo::LazyCg => Ok(LazyBackend::Cg(cg_options(solver)?)),
        other => Err(Error::Config(format!("baseline must be lazy or lazy-cg, got {other:?}"))),
    }
}

fn emit(json_mode: bool, config: &Value, result: Value, human: impl FnOnce() -> String) -> Result<()> {
    let mut out = std::io::stdout().lock();
    if json_mode {
        let doc = json!({ "config": config, "result": result });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    } else {
        writeln!(out, "config: {}", serde_json::to_string(config)?)?;
        write!(out, "{}", human())?;
    }
    out.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn gen_kernel(a: GenKernelArgs) -> Result<()> {
    let cfg = synthetic_config(&a.synthetic, a.seed.seed)?;
    let kernel = generate_synthetic_kernel(&cfg)?;
    save_binary(&kernel, &a.out)?;
    let config = json!({ "command": "gen-kernel", "kernel": cfg, "out": a.out });
    let result = json!({ "dim": kernel.dim(), "path": a.out });
    emit(a.output.json, &config, result, || format!("wrote {}x{} kernel to {}\n", kernel.dim(), kernel.dim(), a.out.display()))
}

fn outcome_json(algo: &AlgorithmSpec, outcome: &GreedyOutcome, ms: f64) -> Value {
    json!({
        "algo": algo.name(),
        "selected": outcome.selected,
        "set_size": outcome.selected.len(),
        "logdet": outcome.log_det,
        "gains": outcome.gains,
        "stats": outcome.stats,
        "ms": ms,
    })
}

fn solve(a: SolveArgs) -> Result<()> {
    if a.repeats == 0 {
        return Err(Error::Config("--repeats must be positive".into()));
    }
    let seed = a.seed.seed;
    let source = kernel_source(&a.kernel, seed)?;
    let kernel = source.load(seed)?;
    let spec = algorithm(a.algo, &a.solver, seed)?;
    let mut times = Vec::with_capacity(a.repeats);
    let mut outcome = None;
    for _ in 0..a.repeats {
        let run = spec.run(&kernel, seed, a.solver.budget)?;
        times.push(run.elapsed_ms());
        outcome = Some(run);
    }
    let outcome = outcome.expect("at least one repetition");
    let ms = median(times).unwrap_or(0.0);
    let config = json!({
        "command": "solve",
        "kernel": source,
        "dim": kernel.dim(),
        "seed": seed,
        "budget": a.solver.budget,
        "repeats": a.repeats,
        "algorithm": spec,
    });
    let result = outcome_json(&spec, &outcome, ms);
    if let Some(path) = &a.out {
        write_json(path, &json!({ "config": config, "result": result }))?;
    }
    emit(a.output.json, &config, result, || {
        format!(
            "algo: {}\nset size: {}\nlogdet: {:.10}\nms: {:.3}\n",
            spec.name(),
            outcome.selected.len(),
            outcome.log_det,
            ms
        )
    })
}

fn experiment(
    kernel: &KernelArgs,
    seed: u64,
    seeds: u64,
    algorithms: Vec<AlgorithmSpec>,
    baseline_algo: Algo,
    solver: &SolverArgs,
    repeats: usize,
    threads: usize,
    out: Option<&Path>,
) -> Result<ExperimentConfig> {
    if seeds == 0 {
        return Err(Error::Config("--seeds must be positive".into()));
    }
    let mut cfg = ExperimentConfig::new(kernel_source(kernel, seed)?, algorithms, (seed..seed + seeds).collect());
    cfg.repetitions = repeats;
    cfg.budget = solver.budget;
    cfg.baseline = baseline(baseline_algo, solver)?;
    cfg.output = out.map(Path::to_path_buf);
    cfg.threads = threads;
    cfg.validate()?;
    Ok(cfg)
}

fn report_table(report: &RunReport) -> String {
    let mut s = String::from("algo\tseed\td\tparams\tset_size\tlogdet\tratio\tms\tspeedup\n");
    for r in &report.rows {
        match &r.error {
            Some(e) => s.push_str(&format!("{}\t{}\t{}\t{}\terror: {e}\n", r.algo, r.seed, r.d, r.params)),
            None => s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.2}\t{:.3}\n",
                r.algo, r.seed, r.d, r.params, r.set_size, r.logdet, r.ratio, r.ms, r.speedup
            )),
        }
    }
    s
}

fn bench(a: BenchArgs) -> Result<()> {
    let seed = a.seed.seed;
    let algorithms = a.algo.iter().map(|&x| algorithm(x, &a.solver, seed)).collect::<Result<Vec<_>>>()?;
    let cfg = experiment(&a.kernel, seed, a.seeds, algorithms, a.baseline, &a.solver, a.repeats, a.output.threads, a.out.as_deref())?;
    let report = run_comparison(&cfg)?;
    let mut medians = serde_json::Map::new();
    for spec in &cfg.algorithms {
        medians.insert(
            format!("{}[{}]", spec.name(), spec.params()),
            json!({
                "ratio": report.median_ratio(spec.name(), Some(&spec.params())),
                "speedup": report.median_speedup(spec.name(), Some(&spec.params())),
            }),
        );
    }
    let config = json!({ "command": "bench", "experiment": cfg });
    let result = json!({ "rows": report.rows, "medians": medians });
    emit(a.output.json, &config, result, || {
        let mut s = report_table(&report);
        for (name, m) in &medians {
            s.push_str(&format!("median {name}: ratio {} speedup {}\n", m["ratio"], m["speedup"]));
        }
        s
    })
}

fn sweep(a: SweepArgs) -> Result<()> {
    let seed = a.seed.seed;
    let (base, axis) = match a.axis {
        Axis::P => (algorithm(Algo::Alg1, &a.solver, seed)?, Sweep::P(a.values.clone())),
        Axis::K => (algorithm(Algo::Alg2, &a.solver, seed)?, Sweep::K(a.values.clone())),
    };
    let cfg = experiment(&a.kernel, seed, a.seeds, vec![base], a.baseline, &a.solver, a.repeats, a.output.threads, a.out.as_deref())?;
    let report = parameter_sweep(&cfg, &axis)?;
    let medians: Vec<Value> = report
        .values
        .iter()
        .map(|&v| json!({ "value": v, "median_ratio": report.median_ratio(v) }))
        .collect();
    let config = json!({ "command": "sweep", "experiment": cfg, "sweep": axis });
    let result = json!({ "axis": report.axis, "medians": medians, "rows": report.report.rows });
    emit(a.output.json, &config, result, || {
        let mut s = report_table(&report.report);
        for m in &medians {
            s.push_str(&format!("{}={}: median ratio {}\n", report.axis, m["value"], m["median_ratio"]));
        }
        s
    })
}

fn variance(a: VarianceArgs) -> Result<()> {
    let cfg = VarianceConfig {
        dims: a.dim.clone(),
        scales: a.scales.clone(),
        m: a.m,
        n: a.n,
        delta: a.delta,
        trials: a.trials,
        draws: a.draws,
        seed: a.seed.seed,
    };
    let report = variance_study(&cfg)?;
    if let Some(path) = &a.out {
        report.save(path)?;
    }
    let violations = report.trials.iter().filter(|t| t.var_shared > t.bound).count();
    let shared_wins = report.trials.iter().filter(|t| t.var_shared < t.var_indep).count();
    let config = json!({ "command": "variance", "study": cfg, "out": a.out });
    let result = json!({
        "trials": report.trials,
        "bound_violations": violations,
        "shared_below_independent": shared_wins,
    });
    emit(a.output.json, &config, result, || {
        let mut s = String::from("trial\tdim\tscale\tfrobenius_diff\tvar_shared\tvar_indep\tbound\n");
        for t in &report.trials {
            s.push_str(&format!(
                "{}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\n",
                t.trial, t.dim, t.scale, t.frobenius_diff, t.var_shared, t.var_indep, t.bound
            ));
        }
        s.push_str(&format!(
            "bound violations: {violations}/{}\nshared < independent: {shared_wins}/{}\n",
            report.trials.len(),
            report.trials.len()
        ));
        s
    })
}

fn verify(a: VerifyArgs) -> Result<()> {
    let seed = a.seed.seed;
    let source = kernel_source(&a.kernel, seed)?;
    let kernel: KernelMatrix = source.load(seed)?;
    if let Some(&bad) = a.set.iter().find(|&&i| i >= kernel.dim()) {
        return Err(Error::Config(format!("item {bad} is out of range for a kernel of size {}", kernel.dim())));
    }
    let mut sorted = a.set.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("--set contains duplicate items".into()));
    }
    let log_det = subset_log_det(&kernel, &a.set)?;
    let config = json!({ "command": "verify", "kernel": source, "seed": seed, "set": a.set });
    let result = json!({ "set": a.set, "set_size": a.set.len(), "logdet": log_det });
    emit(a.output.json, &config, result, || format!("set size: {}\nlogdet: {log_det:.12}\n", a.set.len()))
}
