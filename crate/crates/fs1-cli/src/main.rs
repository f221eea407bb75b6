//! Command-line front end: solve commands, fast-vs-baseline
//! comparison, complexity benchmarks, and error/time traces.
//!
//! Exit codes: 0 for a normal finish (converged or iteration cap with
//! finite state), 1 for usage or input errors, 2 when a run terminated
//! abnormally on non-finite values.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fs1::{
    image_to_measure, load_matrix, normalize_signal, plan_materialize, random_measure_1d,
    random_measure_2d, ricker_pair, validate_measure, DiscreteMeasure, Grid1D, Grid2D, KernelSpec,
    MatrixFormat, SolveReport, SolverConfig, TransportPlanView, PLAN_CAP,
};
use fs1_cli::{
    bench_csv, plan_csv, run_compare, trace_csv, trace_rows_from_report, write_output,
    BenchConfig, BenchRecord, CompareConfig, Dim, HarnessError, Method, TraceRow,
};

#[derive(Parser, Debug)]
#[command(
    name = "fs1-cli",
    version,
    about = "Entropy-regularized 1-Wasserstein distances on uniform grids\n\
             with linear-time kernel products and a quadratic baseline"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve one 1D problem and print a run summary.
    Solve1d(Solve1dArgs),
    /// Solve one 2D problem and print a run summary.
    Solve2d(Solve2dArgs),
    /// Run both engines on one seeded problem; report times and the
    /// Frobenius gap between their transport plans.
    Compare(CompareArgs),
    /// Timed sweep over problem sizes with fitted complexity exponents.
    Bench(BenchArgs),
    /// Marginal-error/time checkpoints per method and regularization.
    Trace(TraceArgs),
}

/// Iteration controls shared by the tolerance-driven commands.
#[derive(Args, Debug)]
struct SolveFlags {
    /// Marginal-error tolerance; 0 disables the convergence check.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 10_000)]
    itr_max: usize,
    /// Evaluate the error every this many iterations (default 1).
    #[arg(long)]
    check_interval: Option<usize>,
    /// Absorb oversized scalings into log offsets (overflow protection).
    #[arg(long)]
    stabilize: bool,
    /// Force the plain iteration (the default; wins over --stabilize).
    #[arg(long)]
    no_stabilize: bool,
    /// Scaling magnitude that triggers an absorption when stabilized.
    #[arg(long, default_value_t = 1e10)]
    tau: f64,
}

impl SolveFlags {
    fn config(&self, epsilon: f64) -> SolverConfig {
        SolverConfig::new(epsilon)
            .with_tol(self.tol)
            .with_itr_max(self.itr_max)
            .with_check_interval(self.check_interval.unwrap_or(1))
            .with_stabilized(self.stabilize && !self.no_stabilize)
            .with_tau(self.tau)
    }
}

/// Iteration controls shared by the fixed-budget commands (compare,
/// bench), which always run with the convergence check disabled.
#[derive(Args, Debug)]
struct ProtocolFlags {
    /// Regularization strength.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Fixed iteration budget per run.
    #[arg(long, default_value_t = 1000)]
    itr_max: usize,
    /// Evaluate the error every this many iterations (default: only at
    /// the end, keeping the timed loop to pure half-steps).
    #[arg(long)]
    check_interval: Option<usize>,
    /// Absorb oversized scalings into log offsets.
    #[arg(long)]
    stabilize: bool,
    /// Force the plain iteration (wins over --stabilize).
    #[arg(long)]
    no_stabilize: bool,
    /// Scaling magnitude that triggers an absorption when stabilized.
    #[arg(long, default_value_t = 1e10)]
    tau: f64,
    /// Base seed for generated inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// 1D problem selection: exactly one of file input, --random, --ricker.
#[derive(Args, Debug)]
struct Problem1dArgs {
    /// First measure: CSV with a single row or column of weights.
    #[arg(long, value_name = "CSV")]
    u: Option<PathBuf>,
    /// Second measure, same shape as --u.
    #[arg(long, value_name = "CSV")]
    v: Option<PathBuf>,
    /// Seeded random pair on a [-3, 3] grid (needs --n).
    #[arg(long)]
    random: bool,
    /// Standard seismic wavelet and its translate (needs --n).
    #[arg(long)]
    ricker: bool,
    /// Grid size.
    #[arg(long)]
    n: Option<usize>,
    /// Translation of the second wavelet.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    shift: f64,
    /// Squared-signal normalization floor. For file input, presence
    /// switches ingestion from raw weights to signal normalization.
    #[arg(long)]
    delta: Option<f64>,
    /// Left end of the wavelet sampling interval.
    #[arg(long, allow_negative_numbers = true, default_value_t = -4.0)]
    tmin: f64,
    /// Right end of the wavelet sampling interval.
    #[arg(long, default_value_t = 4.0)]
    tmax: f64,
    /// Grid spacing (required for file input; overrides the generated
    /// grids' spacing otherwise).
    #[arg(long)]
    h: Option<f64>,
    /// Base seed for --random.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct Solve1dArgs {
    /// Regularization strength.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[command(flatten)]
    flags: SolveFlags,
    #[command(flatten)]
    problem: Problem1dArgs,
    /// Write the marginal-error trace as CSV.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// Write the materialized transport plan as CSV (small N only).
    #[arg(long, value_name = "CSV")]
    plan_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Solve2dArgs {
    /// Regularization strength.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[command(flatten)]
    flags: SolveFlags,
    /// First input image (PGM by extension, otherwise CSV matrix).
    #[arg(long, value_name = "PGM|CSV")]
    u: Option<PathBuf>,
    /// Second input image, same dimensions as --u.
    #[arg(long, value_name = "PGM|CSV")]
    v: Option<PathBuf>,
    /// Seeded random pair instead of files (needs --n and --m).
    #[arg(long)]
    random: bool,
    /// Grid rows.
    #[arg(long)]
    n: Option<usize>,
    /// Grid columns.
    #[arg(long)]
    m: Option<usize>,
    /// Row spacing.
    #[arg(long, default_value_t = 1.0)]
    h1: f64,
    /// Column spacing.
    #[arg(long, default_value_t = 1.0)]
    h2: f64,
    /// Squared-signal normalization floor for image ingestion.
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Base seed for --random.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the marginal-error trace as CSV.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// Write the materialized transport plan as CSV (small grids only).
    #[arg(long, value_name = "CSV")]
    plan_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    protocol: ProtocolFlags,
    /// Points (1D) or rows (2D with --m).
    #[arg(long)]
    n: usize,
    /// Columns; switches the problem to a 2D grid.
    #[arg(long)]
    m: Option<usize>,
    /// Write both runs in benchmark-record CSV.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Fs1,
    Naive,
    Both,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Fs1 => vec![Method::Fs1],
            MethodArg::Naive => vec![Method::Naive],
            MethodArg::Both => vec![Method::Fs1, Method::Naive],
        }
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    protocol: ProtocolFlags,
    /// Comma-separated sizes: points in 1D, per-axis counts in 2D.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Problem dimensionality (1 or 2).
    #[arg(long, default_value_t = 1)]
    dim: u8,
    /// Engine(s) to time.
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Timed runs per (method, size) after one untimed warm-up.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Write all records as CSV.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    /// Comma-separated regularization strengths, one trace per value.
    #[arg(long, value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    /// Engine(s) to trace.
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    #[command(flatten)]
    flags: SolveFlags,
    #[command(flatten)]
    problem: Problem1dArgs,
    /// Write all checkpoints as CSV.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if err.kind() == ErrorKind::DisplayHelp
                || err.kind() == ErrorKind::DisplayVersion =>
        {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Cmd::Solve1d(args) => cmd_solve_1d(args),
        Cmd::Solve2d(args) => cmd_solve_2d(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Trace(args) => cmd_trace(args),
    }
}

fn invalid(msg: &str) -> HarnessError {
    HarnessError::Invalid(msg.to_string())
}

// ---------------------------------------------------------------------------
// Problem construction.
// ---------------------------------------------------------------------------

fn measure_from_csv_1d(
    path: &Path,
    h: f64,
    delta: Option<f64>,
) -> Result<DiscreteMeasure, HarnessError> {
    let matrix = load_matrix(path, MatrixFormat::Csv)?;
    if matrix.rows() != 1 && matrix.cols() != 1 {
        return Err(invalid(
            "1D input must be a single row or a single column of values",
        ));
    }
    let raw = matrix.data().to_vec();
    let weights = match delta {
        Some(d) => normalize_signal(&raw, d)?,
        None => raw,
    };
    let grid = Grid1D::new(weights.len(), h)?;
    Ok(validate_measure(weights, grid)?)
}

fn build_problem_1d(
    p: &Problem1dArgs,
) -> Result<(DiscreteMeasure, DiscreteMeasure), HarnessError> {
    let file_mode = p.u.is_some() || p.v.is_some();
    let modes = u8::from(file_mode) + u8::from(p.random) + u8::from(p.ricker);
    if modes != 1 {
        return Err(invalid(
            "choose exactly one input mode: --u/--v files, --random, or --ricker",
        ));
    }
    if file_mode {
        let (Some(u_path), Some(v_path)) = (&p.u, &p.v) else {
            return Err(invalid("--u and --v must be given together"));
        };
        let h = p.h.ok_or_else(|| invalid("file input needs --h"))?;
        let u = measure_from_csv_1d(u_path, h, p.delta)?;
        let v = measure_from_csv_1d(v_path, h, p.delta)?;
        Ok((u, v))
    } else if p.random {
        let n = p.n.ok_or_else(|| invalid("--random needs --n"))?;
        let mut u = random_measure_1d(n, 2 * p.seed)?;
        let mut v = random_measure_1d(n, 2 * p.seed + 1)?;
        if let Some(h) = p.h {
            let grid = Grid1D::new(n, h)?;
            u = u.regrid(grid)?;
            v = v.regrid(grid)?;
        }
        Ok((u, v))
    } else {
        let n = p.n.ok_or_else(|| invalid("--ricker needs --n"))?;
        Ok(ricker_pair(
            n,
            p.tmin,
            p.tmax,
            p.shift,
            p.delta.unwrap_or(1e-3),
        )?)
    }
}

fn measure_from_image(
    path: &Path,
    delta: f64,
    h1: f64,
    h2: f64,
) -> Result<DiscreteMeasure, HarnessError> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => MatrixFormat::Pgm,
        _ => MatrixFormat::Csv,
    };
    let img = load_matrix(path, format)?;
    Ok(image_to_measure(&img, delta, h1, h2)?)
}

fn build_problem_2d(
    args: &Solve2dArgs,
) -> Result<(DiscreteMeasure, DiscreteMeasure), HarnessError> {
    let file_mode = args.u.is_some() || args.v.is_some();
    if file_mode == args.random {
        return Err(invalid(
            "choose exactly one input mode: --u/--v files or --random",
        ));
    }
    if file_mode {
        let (Some(u_path), Some(v_path)) = (&args.u, &args.v) else {
            return Err(invalid("--u and --v must be given together"));
        };
        let u = measure_from_image(u_path, args.delta, args.h1, args.h2)?;
        let v = measure_from_image(v_path, args.delta, args.h1, args.h2)?;
        Ok((u, v))
    } else {
        let n = args.n.ok_or_else(|| invalid("--random needs --n"))?;
        let m = args.m.ok_or_else(|| invalid("--random needs --m"))?;
        let grid = Grid2D::new(n, m, args.h1, args.h2)?;
        let u = random_measure_2d(n, m, 2 * args.seed)?.regrid(grid)?;
        let v = random_measure_2d(n, m, 2 * args.seed + 1)?.regrid(grid)?;
        Ok((u, v))
    }
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

fn exit_for(report: &SolveReport) -> ExitCode {
    if report.aborted_nonfinite {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn print_report(report: &SolveReport) {
    let last_error = report
        .marginal_error_trace
        .last()
        .map(|p| p.error)
        .unwrap_or(f64::NAN);
    println!("cost: {}", report.cost);
    println!("iterations: {}", report.iterations);
    println!("converged: {}", report.converged);
    println!("marginal_error: {last_error}");
    println!("wall_time_seconds: {}", report.wall_time_seconds);
    println!("absorptions: {}", report.stabilization_events.len());
    println!("aborted_nonfinite: {}", report.aborted_nonfinite);
}

fn write_solve_outputs(
    report: &SolveReport,
    state: &fs1::SinkhornState,
    epsilon: f64,
    out: Option<&PathBuf>,
    plan_out: Option<&PathBuf>,
) -> Result<(), HarnessError> {
    if let Some(path) = out {
        let rows = trace_rows_from_report(Method::Fs1, epsilon, report);
        write_output(path, &trace_csv(&rows))?;
    }
    if let Some(path) = plan_out {
        let kernel = KernelSpec::for_grid(*state.grid(), epsilon)?;
        let plan = plan_materialize(TransportPlanView::new(state, &kernel), PLAN_CAP)?;
        write_output(path, &plan_csv(&plan))?;
    }
    Ok(())
}

fn cmd_solve_1d(args: Solve1dArgs) -> Result<ExitCode, HarnessError> {
    let (u, v) = build_problem_1d(&args.problem)?;
    let config = args.flags.config(args.eps);
    let (report, state) = fs1::solve(&u, &v, &config)?;
    print_report(&report);
    write_solve_outputs(
        &report,
        &state,
        args.eps,
        args.out.as_ref(),
        args.plan_out.as_ref(),
    )?;
    Ok(exit_for(&report))
}

fn cmd_solve_2d(args: Solve2dArgs) -> Result<ExitCode, HarnessError> {
    let (u, v) = build_problem_2d(&args)?;
    let config = args.flags.config(args.eps);
    let (report, state) = fs1::solve(&u, &v, &config)?;
    print_report(&report);
    write_solve_outputs(
        &report,
        &state,
        args.eps,
        args.out.as_ref(),
        args.plan_out.as_ref(),
    )?;
    Ok(exit_for(&report))
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, HarnessError> {
    let config = CompareConfig {
        n: args.n,
        m: args.m,
        epsilon: args.protocol.eps,
        iterations: args.protocol.itr_max,
        check_interval: args.protocol.check_interval.unwrap_or(0),
        stabilized: args.protocol.stabilize && !args.protocol.no_stabilize,
        tau: args.protocol.tau,
        seed: args.protocol.seed,
    };
    let outcome = run_compare(&config)?;
    println!("size: {}", outcome.size);
    println!("fs1_seconds: {}", outcome.fast.wall_time_seconds);
    println!("naive_seconds: {}", outcome.naive.wall_time_seconds);
    println!("speedup: {}", outcome.speedup);
    println!("frobenius_diff: {}", outcome.frobenius_diff);
    println!("fs1_cost: {}", outcome.fast.cost);
    println!("naive_cost: {}", outcome.naive.cost);

    if let Some(path) = &args.out {
        let records = [
            record_from(Method::Fs1, &outcome.fast, outcome.size, &config),
            record_from(Method::Naive, &outcome.naive, outcome.size, &config),
        ];
        let metadata = [
            ("speedup", outcome.speedup.to_string()),
            ("frobenius_diff", outcome.frobenius_diff.to_string()),
        ];
        write_output(path, &bench_csv(&records, &metadata))?;
    }
    if outcome.fast.aborted_nonfinite || outcome.naive.aborted_nonfinite {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn record_from(
    method: Method,
    report: &SolveReport,
    size: usize,
    config: &CompareConfig,
) -> BenchRecord {
    BenchRecord {
        method,
        size,
        epsilon: config.epsilon,
        iterations: report.iterations,
        wall_time_seconds: report.wall_time_seconds.max(1e-9),
        marginal_error: report
            .marginal_error_trace
            .last()
            .map(|p| p.error)
            .unwrap_or(f64::NAN),
        seed: config.seed,
    }
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, HarnessError> {
    let dim = match args.dim {
        1 => Dim::One,
        2 => Dim::Two,
        other => return Err(invalid(&format!("--dim must be 1 or 2, got {other}"))),
    };
    let config = BenchConfig {
        sizes: args.sizes.clone(),
        dim,
        methods: args.method.methods(),
        trials: args.trials,
        iterations: args.protocol.itr_max,
        epsilon: args.protocol.eps,
        seed: args.protocol.seed,
        check_interval: args.protocol.check_interval.unwrap_or(0),
        stabilized: args.protocol.stabilize && !args.protocol.no_stabilize,
        tau: args.protocol.tau,
    };
    let outcome = fs1_cli::run_bench(&config)?;
    println!("records: {}", outcome.records.len());
    for (method, exponent) in &outcome.exponents {
        println!("exponent_{}: {}", method.id(), exponent);
    }
    if let Some(path) = &args.out {
        let sizes = args
            .sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let metadata = [
            ("sizes", sizes),
            ("dim", args.dim.to_string()),
            ("trials", args.trials.to_string()),
            ("iterations", config.iterations.to_string()),
            ("epsilon", config.epsilon.to_string()),
        ];
        write_output(path, &bench_csv(&outcome.records, &metadata))?;
    }
    let abnormal = outcome
        .records
        .iter()
        .any(|r| !r.marginal_error.is_finite());
    if abnormal {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_trace(args: TraceArgs) -> Result<ExitCode, HarnessError> {
    let (u, v) = build_problem_1d(&args.problem)?;
    let base = args.flags.config(1.0);
    let rows = fs1_cli::run_trace(&u, &v, &args.method.methods(), &args.eps_list, &base)?;
    summarize_trace(&rows);
    if let Some(path) = &args.out {
        write_output(path, &trace_csv(&rows))?;
    }
    if rows.iter().any(|r| r.aborted) {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn summarize_trace(rows: &[TraceRow]) {
    let mut seen: Vec<(Method, f64)> = Vec::new();
    for row in rows {
        if !seen.contains(&(row.method, row.epsilon)) {
            seen.push((row.method, row.epsilon));
        }
    }
    for (method, epsilon) in seen {
        let last = rows
            .iter()
            .rfind(|r| r.method == method && r.epsilon == epsilon)
            .expect("every listed combination has at least one row");
        println!(
            "{} eps={}: error {} after {} iterations in {} s{}",
            method.id(),
            epsilon,
            last.marginal_error,
            last.iteration,
            last.wall_time_seconds,
            if last.aborted { " (aborted)" } else { "" }
        );
    }
}
