use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use dihedral_core::dynamics::verify;
use dihedral_core::estimates::{exclusion_report, exclusion_report_eight, EstimateReport};
use dihedral_core::ode::OdeOptions;
use dihedral_core::solver::solve;
use dihedral_core::symmetry::{admissible_s_max, twist_bound};
use dihedral_core::SymmetryParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::formats::{
    manifest_path, read_json, usage, write_json, EstimateRecord, Manifest, OrbitFile, SolveConfigFile, UsageError,
    VerificationRecord,
};

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "DIHEDRAL_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Ok = 0,
    Negative = 1,
    Usage = 2,
    Io = 3,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn status(self) -> &'static str {
        match self {
            ExitKind::Ok => "ok",
            ExitKind::Negative => "negative",
            ExitKind::Usage => "usage_error",
            ExitKind::Io => "io_error",
        }
    }
}

fn classify(err: &anyhow::Error) -> ExitKind {
    if err.chain().any(|c| c.is::<UsageError>()) {
        ExitKind::Usage
    } else if err.chain().any(|c| c.is::<dihedral_core::Error>()) {
        ExitKind::Negative
    } else {
        ExitKind::Io
    }
}

#[derive(Parser, Debug)]
#[command(name = "dihedral", version, about = "Dihedral-symmetric periodic n-body orbits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compare the test-loop action with the total-collision level.
    Estimate(EstimateArgs),
    /// Minimize the action in the cone and write the orbit.
    Solve(SolveArgs),
    /// Integrate an orbit file over one period and check it.
    Verify(VerifyArgs),
    /// Tabulate admissible twists and estimates over a range of n.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub s: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub period: f64,
    #[arg(long = "N", default_value_t = 512)]
    #[serde(rename = "N")]
    pub grid: usize,
    /// Use the eight-body loop (n = 8, s = 2 only).
    #[arg(long)]
    pub remark8: bool,
    /// Accept any twist 1 <= s <= l.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SolveArgs {
    /// Solver configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub period: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `corrected` or `trapezoid`.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Gate on the eight-body estimate (n = 8, s = 2 only).
    #[arg(long)]
    pub remark8: bool,
    /// Skip the estimate gate and accept any twist.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// Orbit file to check.
    pub orbit: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub closure_tol: f64,
    /// Threshold on the relative Euler-Lagrange residual.
    #[arg(long, default_value_t = 1e-3)]
    pub el_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub n_min: usize,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub period: f64,
    #[arg(long = "N", default_value_t = 256)]
    #[serde(rename = "N")]
    pub grid: usize,
    /// Admit s = 2 for n = 8 through the eight-body loop.
    #[arg(long)]
    pub remark8: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a command produced before the manifest is written.
struct Run {
    kind: ExitKind,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    verdicts: Map<String, Value>,
    resolved: Option<Value>,
    error: Option<String>,
}

impl Run {
    fn new() -> Self {
        Run {
            kind: ExitKind::Ok,
            inputs: Vec::new(),
            outputs: Vec::new(),
            verdicts: Map::new(),
            resolved: None,
            error: None,
        }
    }

    fn verdict(&mut self, key: &str, value: impl Into<Value>) {
        self.verdicts.insert(key.to_string(), value.into());
    }

    fn negative(&mut self, reason: String) {
        self.kind = ExitKind::Negative;
        self.error = Some(reason);
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitKind::Usage.code() } else { ExitKind::Ok.code() };
        }
    };
    let start = Instant::now();
    let (name, mut config, out) = match &cli.command {
        Command::Estimate(a) => ("estimate", to_value(a), estimate_out(a)),
        Command::Solve(a) => ("solve", to_value(a), a.out.clone().unwrap_or_else(|| PathBuf::from("orbit.json"))),
        Command::Verify(a) => ("verify", to_value(a), verify_out(a)),
        Command::Sweep(a) => ("sweep", to_value(a), sweep_out(a)),
    };
    let mut run = Run::new();
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, &out, &mut run),
        Command::Solve(a) => cmd_solve(a, &out, &mut run),
        Command::Verify(a) => cmd_verify(a, &out, &mut run),
        Command::Sweep(a) => cmd_sweep(a, &out, &mut run),
    };
    if let Err(err) = result {
        run.kind = classify(&err);
        run.error = Some(format!("{err:#}"));
    }
    if let (Some(resolved), Value::Object(map)) = (run.resolved.take(), &mut config) {
        map.insert("resolved".to_string(), resolved);
    }
    if let Some(msg) = &run.error {
        eprintln!("dihedral {name}: {msg}");
    }
    let manifest = Manifest {
        command: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        inputs: run.inputs,
        outputs: run.outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
        status: run.kind.status().to_string(),
        exit_code: run.kind.code(),
        verdicts: run.verdicts,
        error: run.error,
    };
    let mpath = manifest_path(&out);
    if let Err(err) = write_json(&mpath, &manifest) {
        eprintln!("dihedral {name}: cannot write manifest {}: {err:#}", mpath.display());
        return ExitKind::Io.code();
    }
    run.kind.code()
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn estimate_out(a: &EstimateArgs) -> PathBuf {
    a.out.clone().unwrap_or_else(|| PathBuf::from(format!("estimate_n{}_s{}.json", a.n, a.s)))
}

fn verify_out(a: &VerifyArgs) -> PathBuf {
    a.out.clone().unwrap_or_else(|| {
        let stem = a.orbit.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "orbit".into());
        a.orbit.with_file_name(format!("{stem}.verify.json"))
    })
}

fn sweep_out(a: &SweepArgs) -> PathBuf {
    a.out.clone().unwrap_or_else(|| PathBuf::from(format!("sweep_n{}-{}.json", a.n_min, a.n_max)))
}

fn make_params(n: usize, s: usize, period: f64, force: bool) -> Result<SymmetryParams> {
    let p = if force { SymmetryParams::with_any_twist(n, s, period) } else { SymmetryParams::new(n, s, period) };
    p.map_err(|e| usage(format!("invalid parameters n={n} s={s} T={period}: {e}")))
}

fn report_for(params: &SymmetryParams, grid: usize, remark8: bool) -> Result<EstimateReport> {
    if remark8 {
        if params.n() != 8 || params.s() != 2 {
            return Err(usage("--remark8 applies only to n=8 s=2"));
        }
        Ok(exclusion_report_eight(params, grid)?)
    } else {
        Ok(exclusion_report(params, grid)?)
    }
}

fn print_estimate(r: &EstimateRecord) {
    let p = &r.params;
    println!("n={} l={} s={} h={} T={} N={}  test loop: {}", p.n, p.l, p.s, p.h, p.period, r.n_intervals, r.test_loop);
    println!("  {:<12} {:>20}", "B", format!("{:.10}", r.b));
    println!("  {:<12} {:>20}", "A_bound", format!("{:.10}", r.a_bound));
    println!("  {:<12} {:>20}", "A_numeric", format!("{:.10}", r.a_numeric));
    println!("  {:<12} {:>20}", "A/B", format!("{:.6}", r.ratio));
    println!("  {:<12} {:>20}", "verdict", if r.verdict { "A < B" } else { "A >= B" });
}

fn cmd_estimate(a: &EstimateArgs, out: &Path, run: &mut Run) -> Result<()> {
    let params = make_params(a.n, a.s, a.period, a.force)?;
    let report = report_for(&params, a.grid, a.remark8)?;
    let record = EstimateRecord::from(&report);
    write_json(out, &record)?;
    run.outputs.push(out.to_path_buf());
    print_estimate(&record);
    run.verdict("verdict", record.verdict);
    run.verdict("ratio", record.ratio);
    if !record.verdict {
        run.negative(format!("test-loop action {:.10} is not below B = {:.10}", record.a_numeric, record.b));
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, out: &Path, run: &mut Run) -> Result<()> {
    let (mut file, base) = match &a.config {
        Some(path) => {
            run.inputs.push(path.clone());
            let file: SolveConfigFile = read_json(path)?;
            (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => {
            let (Some(n), Some(s)) = (a.n, a.s) else {
                return Err(usage("solve needs --config or both --n and --s"));
            };
            (SolveConfigFile::defaults(n, s), PathBuf::from("."))
        }
    };
    if let Some(n) = a.n {
        file.n = n;
    }
    if let Some(s) = a.s {
        file.s = s;
    }
    if let Some(t) = a.period {
        file.period = t;
    }
    if let Some(grid) = a.grid {
        file.n_intervals = grid;
    }
    if a.seed.is_some() {
        file.seed = a.seed;
    }
    if a.scheme.is_some() {
        file.scheme = a.scheme.clone();
    }
    if a.max_iters.is_some() {
        file.max_iters = a.max_iters;
    }
    run.resolved = Some(to_value(&file));
    make_params(file.n, file.s, file.period, a.force)?;
    let cfg = file.resolve(&base, a.force).map_err(|e| match e.downcast::<dihedral_core::Error>() {
        Ok(core) => usage(format!("invalid solver configuration: {core}")),
        Err(other) => other,
    })?;

    if !a.force {
        let report = report_for(&cfg.params, cfg.n_intervals, a.remark8)?;
        run.verdict("estimate_verdict", report.verdict);
        if !report.verdict {
            run.negative(format!(
                "estimate verdict is false (A = {:.10} >= B = {:.10}); pass --force to solve anyway",
                report.a_numeric, report.b
            ));
            return Ok(());
        }
    }

    let result = solve(&cfg)?;
    let orbit = OrbitFile::from_solve(&result);
    write_json(out, &orbit)?;
    run.outputs.push(out.to_path_buf());

    let converged = result.converged();
    run.verdict("converged", converged);
    run.verdict("below_b", result.below_b);
    run.verdict("termination", result.termination.name());
    run.verdict("action", result.action.total);
    run.verdict("B", result.b);
    run.verdict("grad_norm", result.grad_norm);
    run.verdict("iterations", result.iterations);
    run.verdict("min_pair_distance", result.min_pair_distance);
    println!(
        "n={} s={} N={}  {}: action {:.12} (B = {:.10}), |grad| {:.2e}, {} iterations, min pair distance {:.4e}",
        cfg.params.n(),
        cfg.params.s(),
        cfg.n_intervals,
        result.termination.name(),
        result.action.total,
        result.b,
        result.grad_norm,
        result.iterations,
        result.min_pair_distance
    );
    if !(converged && result.below_b) {
        run.negative(format!(
            "solver finished with {} (converged: {converged}, below B: {})",
            result.termination.name(),
            result.below_b
        ));
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &Path, run: &mut Run) -> Result<()> {
    run.inputs.push(a.orbit.clone());
    let file: OrbitFile = read_json(&a.orbit)?;
    let lp = file.to_loop().with_context(|| format!("malformed orbit in {}", a.orbit.display()))?;
    let opts = OdeOptions { rtol: a.rtol, atol: a.atol, ..OdeOptions::default() };
    let report = verify(&lp, &opts)?;
    let record = VerificationRecord::new(&lp, &report, a.closure_tol, a.el_tol);
    write_json(out, &record)?;
    run.outputs.push(out.to_path_buf());
    println!(
        "closure {:.3e} (tol {:.1e})  EL residual {:.3e} (tol {:.1e})  energy drift {:.2e}  integration {}",
        report.closure_error,
        a.closure_tol,
        report.el_residual_relative,
        a.el_tol,
        report.energy_drift,
        record.integration
    );
    run.verdict("closure_error", record.closure_error);
    run.verdict("el_residual_relative", record.el_residual_relative);
    run.verdict("passed", record.passed);
    if !record.passed {
        run.negative("closure or Euler-Lagrange residual above threshold".to_string());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub f_n: f64,
    pub s_max: usize,
    pub s: usize,
    pub l: usize,
    pub h: usize,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "A_bound")]
    pub a_bound: f64,
    #[serde(rename = "A_numeric")]
    pub a_numeric: f64,
    pub ratio: f64,
    pub test_loop: String,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "N")]
    pub n_intervals: usize,
    pub rows: Vec<SweepRow>,
}

fn sweep_row(n: usize, s: usize, s_max: usize, a: &SweepArgs) -> Result<SweepRow> {
    let params = make_params(n, s, a.period, false)?;
    let report = report_for(&params, a.grid, a.remark8 && n == 8 && s == 2)?;
    Ok(SweepRow {
        n,
        f_n: twist_bound(n),
        s_max,
        s,
        l: params.l(),
        h: params.h(),
        b: report.b,
        a_bound: report.a_bound,
        a_numeric: report.a_numeric,
        ratio: report.ratio,
        test_loop: report.kind.name().to_string(),
        verdict: report.verdict,
    })
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let k: usize = v.trim().parse().map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer")))?;
            if k == 0 {
                return Err(usage(format!("{THREADS_ENV} must be a positive integer")));
            }
            Ok(Some(k))
        }
        Err(_) => Ok(None),
    }
}

pub fn sweep_table(a: &SweepArgs) -> Result<SweepTable> {
    if !a.n_min.is_multiple_of(2) || !a.n_max.is_multiple_of(2) || a.n_min < 4 || a.n_min > a.n_max {
        return Err(usage("sweep needs even 4 <= n-min <= n-max"));
    }
    let mut jobs = Vec::new();
    for n in (a.n_min..=a.n_max).step_by(2) {
        let s_max = admissible_s_max(n, a.remark8)?;
        jobs.extend((1..=s_max).map(|s| (n, s, s_max)));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = thread_cap()? {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| anyhow!("cannot start worker threads: {e}"))?;
    let rows =
        pool.install(|| jobs.par_iter().map(|&(n, s, s_max)| sweep_row(n, s, s_max, a)).collect::<Result<Vec<_>>>())?;
    Ok(SweepTable { period: a.period, n_intervals: a.grid, rows })
}

fn print_sweep(t: &SweepTable) {
    println!(
        "{:>4} {:>9} {:>5} {:>3} {:>3} {:>14} {:>14} {:>14} {:>8} {:>7}",
        "n", "f(n)", "s_max", "s", "h", "B", "A_bound", "A_numeric", "A/B", "verdict"
    );
    for r in &t.rows {
        println!(
            "{:>4} {:>9.4} {:>5} {:>3} {:>3} {:>14.6} {:>14.6} {:>14.6} {:>8.5} {:>7}",
            r.n, r.f_n, r.s_max, r.s, r.h, r.b, r.a_bound, r.a_numeric, r.ratio, r.verdict
        );
    }
}

fn cmd_sweep(a: &SweepArgs, out: &Path, run: &mut Run) -> Result<()> {
    let table = sweep_table(a)?;
    write_json(out, &table)?;
    run.outputs.push(out.to_path_buf());
    print_sweep(&table);
    let failures: Vec<String> =
        table.rows.iter().filter(|r| !r.verdict).map(|r| format!("n={} s={}", r.n, r.s)).collect();
    run.verdict("rows", table.rows.len());
    run.verdict("all_verdicts", failures.is_empty());
    if !failures.is_empty() {
        run.negative(format!("estimate fails for {}", failures.join(", ")));
    }
    Ok(())
}
