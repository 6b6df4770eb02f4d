//! `spinj`: local and global precision bounds for SU(2)-orbit spin-j probes.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 computation error.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod input;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spinj_core::global::{global_report, GlobalReport};
use spinj_core::linalg::RMatrix;
use spinj_core::local::{unitary_model_derivs, BoundsReport};
use spinj_core::sim::{average_fidelity, fibonacci_grid, worst_case_scan, SimConfig, SimResult};
use spinj_core::states::diagonal_state;
use spinj_core::sweep::{run_sweep, FamilySweep, SweepOutput, SweepSpec};
use spinj_core::verify::{run_verify, VerifyConfig, VerifyReport};
use spinj_core::{Error, ParamPoint};

use input::FamilyParams;
use output::{CommandEcho, OutputRecord, Provenance, SCHEMA_VERSION};

const EXIT_USAGE: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

#[derive(Parser)]
#[command(name = "spinj", version, about = "Local and global precision bounds for spin-j SU(2) estimation")]
struct Cli {
    /// Worker threads (default: SPINJ_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Local bounds and the global optimum at one (family, n) point.
    Bounds(BoundsArgs),
    /// Bounds over a grid of n and family parameters.
    Scan(ScanArgs),
    /// Monte Carlo run of the optimal covariant measurement.
    Simulate(SimulateArgs),
    /// Invariant and oracle suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Binomial,
    Geometric,
    Delta,
    #[value(alias = "custom-file")]
    Custom,
}

impl FamilyArg {
    pub fn name(self) -> &'static str {
        match self {
            FamilyArg::Binomial => "binomial",
            FamilyArg::Geometric => "geometric",
            FamilyArg::Delta => "delta",
            FamilyArg::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Spin size n = 2j.
    #[arg(long)]
    n: Option<usize>,
    /// Binomial parameter, 0 < p < 1.
    #[arg(long)]
    p: Option<f64>,
    /// Geometric ratio, r > 0 and r ≠ 1.
    #[arg(long)]
    r: Option<f64>,
    /// Delta level m = a, −j ≤ a ≤ j.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// One weight per line (custom family).
    #[arg(long)]
    weights: Option<PathBuf>,
}

impl PointArgs {
    fn params(&self) -> FamilyParams {
        FamilyParams {
            p: self.p,
            r: self.r,
            a: self.a,
            weights: self.weights.clone(),
        }
    }
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    point: PointArgs,
    /// 2×2 weight matrix G (default: identity).
    #[arg(long)]
    weight_matrix: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Comma-separated binomial parameters.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Comma-separated geometric ratios.
    #[arg(long, value_delimiter = ',')]
    r: Vec<f64>,
    /// Comma-separated delta levels.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Vec<f64>,
    /// One weight per line (custom family); n is taken from the file.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, default_value_t = 1)]
    n_step: usize,
    /// Explicit comma-separated n values (instead of --n-min/--n-max).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["n_min", "n_max"])]
    n_list: Vec<usize>,
    /// Subset of sld,rld,hn_upper,global_eta,asymptotics (default: all).
    #[arg(long, value_delimiter = ',', value_enum)]
    outputs: Vec<OutputArg>,
    #[arg(long)]
    weight_matrix: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum OutputArg {
    Sld,
    Rld,
    #[value(alias = "hn-upper")]
    HnUpper,
    #[value(alias = "global-eta")]
    GlobalEta,
    Asymptotics,
}

impl From<OutputArg> for SweepOutput {
    fn from(o: OutputArg) -> Self {
        match o {
            OutputArg::Sld => SweepOutput::Sld,
            OutputArg::Rld => SweepOutput::Rld,
            OutputArg::HnUpper => SweepOutput::HnUpper,
            OutputArg::GlobalEta => SweepOutput::GlobalEta,
            OutputArg::Asymptotics => SweepOutput::Asymptotics,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// True parameter "t1,t2" (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Worst-case scan over fibonacci:K sphere points (overrides --theta).
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 30)]
    max_n: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

struct Failure {
    code: u8,
    tag: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_validation() { EXIT_USAGE } else { EXIT_COMPUTE },
            tag: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_COMPUTE,
            tag: "IO",
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        tag: "USAGE",
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(f) = configure_threads(cli.threads) {
        eprintln!("error [{}]: {}", f.tag, f.message);
        return ExitCode::from(f.code);
    }
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Bounds(a) => cmd_bounds(a, &argv),
        Command::Scan(a) => cmd_scan(a, &argv),
        Command::Simulate(a) => cmd_simulate(a, &argv),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error [{}]: {}", f.tag, f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("SPINJ_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| usage(format!("SPINJ_THREADS={v:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(format!("cannot configure threads: {e}")))?;
    }
    Ok(())
}

fn record<P: Serialize>(name: &str, argv: &[String], payload: P, seed: Option<u64>, warnings: Vec<String>) -> OutputRecord<P> {
    OutputRecord {
        schema_version: SCHEMA_VERSION,
        command: CommandEcho {
            name: name.to_string(),
            argv: argv.to_vec(),
        },
        payload,
        provenance: Provenance {
            library_version: spinj_core::VERSION,
            seed,
            tolerances: output::tolerances(),
            warnings,
        },
    }
}

fn sink(out: &OutArgs) -> Result<Box<dyn Write>, Failure> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| usage(format!("cannot create {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<P: Serialize, R: Serialize>(out: &OutArgs, rec: &OutputRecord<P>, rows: &[R]) -> Result<(), Failure> {
    let mut w = sink(out)?;
    match out.format {
        Format::Json => output::write_json(&mut w, rec)?,
        Format::Csv => output::write_csv(&mut w, rec, rows)?,
    }
    w.flush()?;
    Ok(())
}

fn weight_matrix(path: &Option<PathBuf>) -> Result<RMatrix, Failure> {
    match path {
        Some(p) => Ok(input::read_weight_matrix(p)?),
        None => Ok(RMatrix::identity(2, 2)),
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

#[derive(Serialize)]
struct BoundsPayload {
    family: &'static str,
    n: usize,
    param: Option<f64>,
    bounds: BoundsReport,
    global: GlobalReport,
}

#[derive(Serialize)]
struct BoundsCsvRow {
    n: usize,
    family: &'static str,
    param: Option<f64>,
    sld_bound: f64,
    sld_upper: f64,
    rld_bound: Option<f64>,
    rld_reason: Option<String>,
    hn_d_invariant: Option<f64>,
    hn_upper_from_x_star: f64,
    d_invariant: bool,
    d_invariance_residual: f64,
    f11: f64,
    f12: f64,
    f22: f64,
    bfy_lhs: f64,
    bfy_rhs: f64,
    bfy_holds: bool,
    r_max: Option<f64>,
    eta: Option<f64>,
    closed_form_r: Option<f64>,
    asymptotic_eta: Option<f64>,
}

fn cmd_bounds(args: &BoundsArgs, argv: &[String]) -> Result<u8, Failure> {
    let (w, warning) = input::build_weights(args.point.family, args.point.n, &args.point.params())?;
    let warnings: Vec<String> = warning.into_iter().collect();
    warn_all(&warnings);
    let g = weight_matrix(&args.weight_matrix)?;
    let n = w.sys().n();
    if n == 0 {
        return Err(usage("n must be at least 1"));
    }
    let model = unitary_model_derivs(&diagonal_state(&w));
    let bounds = BoundsReport::compute(&model, &g)?;
    let global = global_report(&w)?;
    let f = &bounds.fisher.sld_f;
    let row = BoundsCsvRow {
        n,
        family: w.family().name(),
        param: w.family().parameter(),
        sld_bound: bounds.sld_bound,
        sld_upper: bounds.sld_upper,
        rld_bound: bounds.rld_bound,
        rld_reason: bounds.rld_reason.clone(),
        hn_d_invariant: bounds.hn_d_invariant,
        hn_upper_from_x_star: bounds.hn_upper_from_x_star,
        d_invariant: bounds.d_invariant,
        d_invariance_residual: bounds.d_invariance_residual,
        f11: f[0][0],
        f12: f[0][1],
        f22: f[1][1],
        bfy_lhs: global.bfy_lhs,
        bfy_rhs: global.bfy_rhs,
        bfy_holds: global.bfy_holds,
        r_max: global.r_max,
        eta: global.eta,
        closed_form_r: global.closed_form_r,
        asymptotic_eta: global.asymptotic_eta,
    };
    let payload = BoundsPayload {
        family: w.family().name(),
        n,
        param: w.family().parameter(),
        bounds,
        global,
    };
    emit(&args.out, &record("bounds", argv, payload, None, warnings), &[row])?;
    Ok(0)
}

fn scan_n_values(args: &ScanArgs) -> Result<Vec<usize>, Failure> {
    if !args.n_list.is_empty() {
        return Ok(args.n_list.clone());
    }
    let (Some(lo), Some(hi)) = (args.n_min, args.n_max) else {
        return Err(usage("scan needs --n-min and --n-max, or --n-list"));
    };
    if args.n_step == 0 {
        return Err(usage("--n-step must be at least 1"));
    }
    if lo > hi {
        return Err(usage(format!("empty n range {lo}..={hi}")));
    }
    Ok((lo..=hi).step_by(args.n_step).collect())
}

fn cmd_scan(args: &ScanArgs, argv: &[String]) -> Result<u8, Failure> {
    let mut warnings = Vec::new();
    let family = match args.family {
        FamilyArg::Binomial => FamilySweep::Binomial { p: args.p.clone() },
        FamilyArg::Geometric => FamilySweep::Geometric { r: args.r.clone() },
        FamilyArg::Delta => FamilySweep::Delta { a: args.a.clone() },
        FamilyArg::Custom => {
            let path = args
                .weights
                .as_ref()
                .ok_or_else(|| usage("--family custom needs --weights PATH"))?;
            let (w, warning) = input::read_weights(path)?;
            warnings.extend(warning);
            FamilySweep::Custom { weights: w }
        }
    };
    warn_all(&warnings);
    let n_values = match (&family, args.n_list.is_empty() && args.n_min.is_none()) {
        (FamilySweep::Custom { weights }, true) => vec![weights.len() - 1],
        _ => scan_n_values(args)?,
    };
    let mut spec = SweepSpec::new(family, n_values);
    let g = weight_matrix(&args.weight_matrix)?;
    spec.weight_matrix = [[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]];
    if !args.outputs.is_empty() {
        spec.outputs = args.outputs.iter().map(|&o| o.into()).collect();
    }
    let rows = run_sweep(&spec)?;
    for r in rows.iter().filter(|r| !r.violations.is_empty()) {
        eprintln!("warning: n={} param={:?}: invariant violations {}", r.n, r.param, r.violations);
    }
    #[derive(Serialize)]
    struct ScanPayload<'a> {
        spec: &'a SweepSpec,
        rows: &'a [spinj_core::sweep::SweepRow],
    }
    let payload = ScanPayload { spec: &spec, rows: &rows };
    emit(&args.out, &record("scan", argv, payload, None, warnings), &rows)?;
    Ok(0)
}

#[derive(Serialize)]
struct SimCsvRow {
    theta1: f64,
    theta2: f64,
    mean_fidelity: f64,
    std_error: f64,
    acceptance_rate: f64,
    samples_used: usize,
    proposals: u64,
    analytic_r: Option<f64>,
}

fn sim_row(theta: &ParamPoint, r: &SimResult, analytic: Option<f64>) -> SimCsvRow {
    SimCsvRow {
        theta1: theta.theta1,
        theta2: theta.theta2,
        mean_fidelity: r.mean_fidelity,
        std_error: r.std_error,
        acceptance_rate: r.acceptance_rate,
        samples_used: r.samples_used,
        proposals: r.proposals,
        analytic_r: analytic,
    }
}

fn cmd_simulate(args: &SimulateArgs, argv: &[String]) -> Result<u8, Failure> {
    let (w, warning) = input::build_weights(args.point.family, args.point.n, &args.point.params())?;
    let warnings: Vec<String> = warning.into_iter().collect();
    warn_all(&warnings);
    if w.sys().n() == 0 {
        return Err(usage("n must be at least 1"));
    }
    let theta = match &args.theta {
        Some(s) => input::parse_theta(s)?,
        None => ParamPoint::origin(),
    };
    let cfg = SimConfig::new(w.clone(), theta, args.samples, args.seed)?;
    let analytic = global_report(&w)?.r_max;

    #[derive(Serialize)]
    struct SimPayload<T: Serialize> {
        family: &'static str,
        n: usize,
        param: Option<f64>,
        samples: usize,
        analytic_r: Option<f64>,
        result: T,
    }
    fn head<T: Serialize>(w: &spinj_core::WeightDistribution, samples: usize, analytic_r: Option<f64>, result: T) -> SimPayload<T> {
        SimPayload {
            family: w.family().name(),
            n: w.sys().n(),
            param: w.family().parameter(),
            samples,
            analytic_r,
            result,
        }
    }

    match &args.grid {
        None => {
            let res = average_fidelity(&cfg)?;
            let row = sim_row(&theta, &res, analytic);
            emit(&args.out, &record("simulate", argv, head(&w, args.samples, analytic, res), Some(args.seed), warnings), &[row])?;
        }
        Some(spec) => {
            let grid = fibonacci_grid(input::parse_grid(spec)?);
            let scan = worst_case_scan(&cfg, &grid)?;
            let rows: Vec<SimCsvRow> = scan.points.iter().map(|p| sim_row(&p.theta, &p.result, analytic)).collect();
            emit(&args.out, &record("simulate", argv, head(&w, args.samples, analytic, scan), Some(args.seed), warnings), &rows)?;
        }
    }
    Ok(0)
}

fn print_table(report: &VerifyReport) {
    let width = report.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
    println!("spinj verify (max_n = {})", report.max_n);
    for c in &report.checks {
        let metric = c.metric.map_or_else(|| "-".to_string(), |m| format!("{m:.3e}"));
        let pad = width - c.name.chars().count();
        println!(
            "{}  {:<20} {}{}  {:>10} <= {:.0e} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.area,
            c.name,
            " ".repeat(pad),
            metric,
            c.tolerance,
            c.detail
        );
    }
    println!("{}/{} checks passed", report.passed_count(), report.checks.len());
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let report = run_verify(&VerifyConfig {
        max_n: args.max_n,
        inject_fault: args.inject_fault,
    });
    match args.format {
        Some(Format::Json) => {
            serde_json::to_writer_pretty(io::stdout().lock(), &report).map_err(io::Error::other)?;
            println!();
        }
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            for c in &report.checks {
                w.serialize(c).map_err(io::Error::other)?;
            }
            w.flush()?;
        }
        None => print_table(&report),
    }
    Ok(if report.all_passed() { 0 } else { EXIT_COMPUTE })
}
