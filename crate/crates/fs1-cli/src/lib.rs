//! Harness layer behind the `fs1-cli` binary: seeded benchmark sweeps
//! with complexity-exponent fitting, fast-vs-baseline comparisons, and
//! marginal-error/time traces, plus the CSV emitters for all of them.
//!
//! Everything here is callable as a library so the commands stay thin
//! and the harness logic itself is testable.

use std::fmt::Write as _;
use std::time::Instant;

use fs1::{
    plan_materialize, random_measure_1d, random_measure_2d, solve, naive_solve, DiscreteMeasure,
    KernelSpec, SolveReport, SolverConfig, TransportPlanView, NAIVE_CAP_1D, NAIVE_CAP_2D,
    PLAN_CAP, RNG_ALGORITHM,
};
use thiserror::Error;

/// Errors specific to the harness; solver errors pass through.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// The slope fitter needs at least two positive points with at
    /// least two distinct sizes.
    #[error("log-log fit needs at least two positive points with distinct sizes")]
    DegenerateInput,
    #[error("no sizes given")]
    EmptySweep,
    /// A command was invoked with an unusable flag combination.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] fs1::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Which kernel-product engine a run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Linear-time forward/backward sweeps.
    Fs1,
    /// Quadratic-time summation baseline.
    Naive,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::Fs1 => "fs1",
            Method::Naive => "naive",
        }
    }
}

/// Problem dimensionality for generated benchmark inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

/// One timed run: a single (method, size, trial) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: Method,
    /// Total grid points (N in 1D, N*M in 2D).
    pub size: usize,
    pub epsilon: f64,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub marginal_error: f64,
    /// Base seed of the trial's input pair.
    pub seed: u64,
}

/// Sweep description for [`run_bench`].
#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// 1D: point counts. 2D: per-axis counts of square grids.
    pub sizes: Vec<usize>,
    pub dim: Dim,
    pub methods: Vec<Method>,
    pub trials: usize,
    /// Fixed iteration budget; the termination check is disabled.
    pub iterations: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub check_interval: usize,
    pub stabilized: bool,
    pub tau: f64,
}

impl BenchConfig {
    pub fn new(sizes: Vec<usize>, iterations: usize) -> Self {
        BenchConfig {
            sizes,
            dim: Dim::One,
            methods: vec![Method::Fs1, Method::Naive],
            trials: 10,
            iterations,
            epsilon: 0.01,
            seed: 0,
            // One error evaluation at the very end keeps the timed loop
            // to pure half-steps while still reporting a final error.
            check_interval: 0, // 0 = same as `iterations`
            stabilized: false,
            tau: 1e10,
        }
    }
}

/// Sweep output: raw records plus one fitted exponent per method that
/// produced at least two sizes of data.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub exponents: Vec<(Method, f64)>,
}

fn measures_for(dim: Dim, size: usize, seed: u64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let (u, v) = match dim {
        Dim::One => (
            random_measure_1d(size, seed)?,
            random_measure_1d(size, seed + 1)?,
        ),
        Dim::Two => (
            random_measure_2d(size, size, seed)?,
            random_measure_2d(size, size, seed + 1)?,
        ),
    };
    Ok((u, v))
}

fn naive_cap(dim: Dim) -> usize {
    match dim {
        Dim::One => NAIVE_CAP_1D,
        Dim::Two => NAIVE_CAP_2D,
    }
}

/// The per-trial base seed: trials draw disjoint seed pairs per size
/// index so every (size, trial) cell is reproducible in isolation.
pub fn trial_seed(base: u64, size_index: usize, trial: usize, trials: usize) -> u64 {
    base + 2 * (size_index * trials + trial) as u64
}

/// Runs the timed sweep: for each size and trial, generates a seeded
/// input pair, runs each requested method for the fixed budget with the
/// convergence check disabled, and fits `ln time` against `ln size` per
/// method over the per-size mean times. One untimed warm-up run per
/// (method, size) precedes the trials. Baseline cells beyond the
/// quadratic engine's cap are omitted rather than failing the sweep.
pub fn run_bench(config: &BenchConfig) -> Result<BenchOutcome> {
    if config.sizes.is_empty() {
        return Err(HarnessError::EmptySweep);
    }
    let check = if config.check_interval == 0 {
        config.iterations
    } else {
        config.check_interval
    };
    let solver = SolverConfig::new(config.epsilon)
        .with_tol(0.0)
        .with_itr_max(config.iterations)
        .with_check_interval(check)
        .with_stabilized(config.stabilized)
        .with_tau(config.tau);

    let mut records = Vec::new();
    for (si, &axis) in config.sizes.iter().enumerate() {
        let total = match config.dim {
            Dim::One => axis,
            Dim::Two => axis * axis,
        };
        for &method in &config.methods {
            if method == Method::Naive && total > naive_cap(config.dim) {
                continue;
            }
            let runner = match method {
                Method::Fs1 => solve,
                Method::Naive => naive_solve,
            };
            // Untimed warm-up on the first trial's inputs.
            let warm_seed = trial_seed(config.seed, si, 0, config.trials);
            let (wu, wv) = measures_for(config.dim, axis, warm_seed)?;
            let _ = runner(&wu, &wv, &solver)?;

            for trial in 0..config.trials {
                let seed = trial_seed(config.seed, si, trial, config.trials);
                let (u, v) = measures_for(config.dim, axis, seed)?;
                let (report, _) = runner(&u, &v, &solver)?;
                records.push(BenchRecord {
                    method,
                    size: total,
                    epsilon: config.epsilon,
                    iterations: report.iterations,
                    // Guard the slope fit's logarithm against a clock
                    // reading of exactly zero on very small problems.
                    wall_time_seconds: report.wall_time_seconds.max(1e-9),
                    marginal_error: report
                        .marginal_error_trace
                        .last()
                        .map(|p| p.error)
                        .unwrap_or(f64::NAN),
                    seed,
                });
            }
        }
    }

    let mut exponents = Vec::new();
    for &method in &config.methods {
        let points = mean_time_per_size(&records, method);
        if points.len() >= 2 {
            exponents.push((method, fit_loglog_slope(&points)?));
        }
    }
    Ok(BenchOutcome { records, exponents })
}

/// Per-size mean wall time for one method, in sweep order.
pub fn mean_time_per_size(records: &[BenchRecord], method: Method) -> Vec<(f64, f64)> {
    let mut points: Vec<(usize, f64, usize)> = Vec::new();
    for r in records.iter().filter(|r| r.method == method) {
        match points.iter_mut().find(|(s, _, _)| *s == r.size) {
            Some((_, sum, count)) => {
                *sum += r.wall_time_seconds;
                *count += 1;
            }
            None => points.push((r.size, r.wall_time_seconds, 1)),
        }
    }
    points
        .into_iter()
        .map(|(s, sum, count)| (s as f64, sum / count as f64))
        .collect()
}

/// Ordinary least squares slope of `ln(time)` against `ln(size)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(s, t)| s <= 0.0 || t <= 0.0) {
        return Err(HarnessError::DegenerateInput);
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(s, t)| (s.ln(), t.ln())).collect();
    let n = logs.len() as f64;
    let mean_x: f64 = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y: f64 = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateInput);
    }
    Ok(sxy / sxx)
}

/// Comparison setup: both engines on one seeded random problem with an
/// identical fixed iteration budget.
#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub n: usize,
    /// Column count; `Some` switches to a 2D grid.
    pub m: Option<usize>,
    pub epsilon: f64,
    pub iterations: usize,
    pub check_interval: usize,
    pub stabilized: bool,
    pub tau: f64,
    pub seed: u64,
}

impl CompareConfig {
    pub fn new(n: usize, epsilon: f64, iterations: usize) -> Self {
        CompareConfig {
            n,
            m: None,
            epsilon,
            iterations,
            check_interval: 0,
            stabilized: false,
            tau: 1e10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub size: usize,
    pub fast: SolveReport,
    pub naive: SolveReport,
    /// naive wall time over fast wall time.
    pub speedup: f64,
    /// Frobenius norm of the difference of the two materialized plans.
    pub frobenius_diff: f64,
}

/// Runs both engines on the same inputs and materializes both plans.
pub fn run_compare(config: &CompareConfig) -> Result<CompareOutcome> {
    let (u, v) = match config.m {
        None => (
            random_measure_1d(config.n, config.seed)?,
            random_measure_1d(config.n, config.seed + 1)?,
        ),
        Some(m) => (
            random_measure_2d(config.n, m, config.seed)?,
            random_measure_2d(config.n, m, config.seed + 1)?,
        ),
    };
    let check = if config.check_interval == 0 {
        config.iterations
    } else {
        config.check_interval
    };
    let solver = SolverConfig::new(config.epsilon)
        .with_tol(0.0)
        .with_itr_max(config.iterations)
        .with_check_interval(check)
        .with_stabilized(config.stabilized)
        .with_tau(config.tau);

    let (fast_report, fast_state) = solve(&u, &v, &solver)?;
    let (naive_report, naive_state) = naive_solve(&u, &v, &solver)?;

    let kernel = KernelSpec::for_grid(u.grid(), config.epsilon)?;
    let fast_plan = plan_materialize(TransportPlanView::new(&fast_state, &kernel), PLAN_CAP)?;
    let naive_plan = plan_materialize(TransportPlanView::new(&naive_state, &kernel), PLAN_CAP)?;
    let frobenius_diff = fast_plan.frobenius_diff(&naive_plan)?;
    let speedup = naive_report.wall_time_seconds / fast_report.wall_time_seconds.max(1e-9);

    Ok(CompareOutcome {
        size: u.len(),
        fast: fast_report,
        naive: naive_report,
        speedup,
        frobenius_diff,
    })
}

/// One checkpoint of a traced run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub method: Method,
    pub epsilon: f64,
    pub iteration: usize,
    /// Cumulative wall time when the checkpoint was taken.
    pub wall_time_seconds: f64,
    pub marginal_error: f64,
    /// Marks the final checkpoint of a run that hit non-finite values.
    pub aborted: bool,
}

/// Flattens one report's checkpoints into trace rows; the final
/// checkpoint of an aborted run becomes the marker row.
pub fn trace_rows_from_report(
    method: Method,
    epsilon: f64,
    report: &SolveReport,
) -> Vec<TraceRow> {
    let last = report.marginal_error_trace.len();
    report
        .marginal_error_trace
        .iter()
        .enumerate()
        .map(|(k, point)| TraceRow {
            method,
            epsilon,
            iteration: point.iteration,
            wall_time_seconds: point.elapsed_seconds,
            marginal_error: point.error,
            aborted: report.aborted_nonfinite && k + 1 == last,
        })
        .collect()
}

/// Runs every (method, epsilon) combination on one problem and flattens
/// all checkpoints into rows. An aborted run contributes a terminal
/// marker row (infinite error, `aborted` set).
pub fn run_trace(
    u: &DiscreteMeasure,
    v: &DiscreteMeasure,
    methods: &[Method],
    eps_list: &[f64],
    base: &SolverConfig,
) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for &epsilon in eps_list {
        for &method in methods {
            let config = SolverConfig::new(epsilon)
                .with_tol(base.tol)
                .with_itr_max(base.itr_max)
                .with_check_interval(base.check_interval)
                .with_stabilized(base.stabilized)
                .with_tau(base.tau);
            let runner = match method {
                Method::Fs1 => solve,
                Method::Naive => naive_solve,
            };
            let (report, _) = runner(u, v, &config)?;
            rows.extend(trace_rows_from_report(method, epsilon, &report));
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV emission. All numeric formatting goes through Rust's `Display`,
// which is locale-independent and round-trips f64 exactly.
// ---------------------------------------------------------------------------

/// `key=value` comment lines followed by the record header and rows.
pub fn bench_csv(records: &[BenchRecord], metadata: &[(&str, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rng={RNG_ALGORITHM}");
    for (key, value) in metadata {
        let _ = writeln!(out, "# {key}={value}");
    }
    let _ = writeln!(
        out,
        "method,size,epsilon,iterations,wall_time_seconds,marginal_error,seed"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method.id(),
            r.size,
            r.epsilon,
            r.iterations,
            r.wall_time_seconds,
            r.marginal_error,
            r.seed
        );
    }
    out
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rng={RNG_ALGORITHM}");
    let _ = writeln!(
        out,
        "method,epsilon,iteration,wall_time_seconds,marginal_error,aborted"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method.id(),
            r.epsilon,
            r.iteration,
            r.wall_time_seconds,
            r.marginal_error,
            u8::from(r.aborted)
        );
    }
    out
}

/// Sparse triplet dump of a materialized plan (flat indices).
pub fn plan_csv(plan: &fs1::PlanMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "i,j,mass");
    let size = plan.size();
    for i in 0..size {
        for j in 0..size {
            let _ = writeln!(out, "{},{},{}", i, j, plan.get(i, j));
        }
    }
    out
}

/// Writes a string to a path, wrapping I/O failures with the path.
pub fn write_output(path: &std::path::Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Times a closure on the monotonic clock (used by the binary for
/// end-to-end summaries; solver-internal times come from the reports).
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_linear_points_is_one() {
        let slope = fit_loglog_slope(&[(1.0, 1.0), (10.0, 10.0)]).unwrap();
        assert!((slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_quadratic_points_is_two() {
        let slope = fit_loglog_slope(&[(1.0, 1.0), (10.0, 100.0)]).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_constant_time_is_zero() {
        let slope = fit_loglog_slope(&[(1.0, 2.0), (10.0, 2.0)]).unwrap();
        assert_eq!(slope, 0.0);
    }

    #[test]
    fn fit_rejects_degenerate_inputs() {
        assert!(matches!(
            fit_loglog_slope(&[(1.0, 1.0)]),
            Err(HarnessError::DegenerateInput)
        ));
        assert!(matches!(
            fit_loglog_slope(&[(1.0, 1.0), (2.0, -1.0)]),
            Err(HarnessError::DegenerateInput)
        ));
        assert!(matches!(
            fit_loglog_slope(&[(0.0, 1.0), (2.0, 1.0)]),
            Err(HarnessError::DegenerateInput)
        ));
        assert!(matches!(
            fit_loglog_slope(&[(3.0, 1.0), (3.0, 2.0)]),
            Err(HarnessError::DegenerateInput)
        ));
    }

    #[test]
    fn fit_handles_noisy_overdetermined_points() {
        // Exact cubic data plus one repeated size: slope stays 3.
        let points = [(2.0, 8.0), (4.0, 64.0), (8.0, 512.0), (4.0, 64.0)];
        let slope = fit_loglog_slope(&points).unwrap();
        assert!((slope - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bench_produces_one_record_per_cell_and_fits_exponents() {
        let mut config = BenchConfig::new(vec![32, 64, 128], 5);
        config.trials = 2;
        config.seed = 9;
        let outcome = run_bench(&config).unwrap();
        // 3 sizes x 2 trials x 2 methods.
        assert_eq!(outcome.records.len(), 12);
        assert_eq!(outcome.exponents.len(), 2);
        for r in &outcome.records {
            assert!(r.wall_time_seconds > 0.0);
            assert_eq!(r.iterations, 5);
            assert!(r.marginal_error.is_finite());
        }
        // Same flags and seeds reproduce every non-timing field.
        let again = run_bench(&config).unwrap();
        for (a, b) in outcome.records.iter().zip(&again.records) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.size, b.size);
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.marginal_error, b.marginal_error);
        }
    }

    #[test]
    fn bench_omits_naive_rows_beyond_cap() {
        let mut config = BenchConfig::new(vec![16, fs1::NAIVE_CAP_1D + 1], 1);
        config.trials = 1;
        let outcome = run_bench(&config).unwrap();
        let naive_rows: Vec<_> = outcome
            .records
            .iter()
            .filter(|r| r.method == Method::Naive)
            .collect();
        assert_eq!(naive_rows.len(), 1);
        assert_eq!(naive_rows[0].size, 16);
        // fs1 still covers both sizes.
        assert_eq!(
            outcome
                .records
                .iter()
                .filter(|r| r.method == Method::Fs1)
                .count(),
            2
        );
    }

    #[test]
    fn compare_reports_positive_speedup_and_tiny_plan_gap() {
        let config = CompareConfig::new(64, 0.1, 10);
        let outcome = run_compare(&config).unwrap();
        assert!(outcome.speedup > 0.0);
        assert!(outcome.frobenius_diff <= 1e-12);
        assert_eq!(outcome.size, 64);
    }

    #[test]
    fn trace_single_iteration_budget_yields_one_row_per_method() {
        let u = random_measure_1d(50, 1).unwrap();
        let v = random_measure_1d(50, 2).unwrap();
        let base = SolverConfig::new(0.5)
            .with_tol(0.0)
            .with_itr_max(1)
            .with_check_interval(1);
        let rows = run_trace(&u, &v, &[Method::Fs1, Method::Naive], &[0.5], &base).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.iteration == 1 && !r.aborted));
    }

    #[test]
    fn csv_schemas_are_stable() {
        let record = BenchRecord {
            method: Method::Fs1,
            size: 10,
            epsilon: 0.5,
            iterations: 3,
            wall_time_seconds: 0.25,
            marginal_error: 1e-9,
            seed: 7,
        };
        let text = bench_csv(&[record], &[("sizes", "10".to_string())]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# rng=chacha8"));
        assert_eq!(lines.next(), Some("# sizes=10"));
        assert_eq!(
            lines.next(),
            Some("method,size,epsilon,iterations,wall_time_seconds,marginal_error,seed")
        );
        assert_eq!(lines.next(), Some("fs1,10,0.5,3,0.25,0.000000001,7"));

        let row = TraceRow {
            method: Method::Naive,
            epsilon: 0.1,
            iteration: 4,
            wall_time_seconds: 0.5,
            marginal_error: f64::INFINITY,
            aborted: true,
        };
        let text = trace_csv(&[row]);
        assert!(text.ends_with("naive,0.1,4,0.5,inf,1\n"));
    }
}
