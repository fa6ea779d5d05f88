//! `tdp`: quantify temporal privacy leakage and allocate per-step
//! budgets from the command line.
//!
//! Thin argument and file plumbing over `tdp-core`. Every command is
//! deterministic given its flags (bench wall-times excepted): results
//! go to stdout or `--out`, diagnostics to stderr only. Exit codes
//! separate failure classes: 2 usage, 3 file, 4 parse, 5 domain.

use std::fmt;
use std::fs;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tdp_core::accounting::AccountingError;
use tdp_core::allocation::AllocationError;
use tdp_core::loss::LossError;
use tdp_core::matrix as matrix_io;
use tdp_core::{
    allocate_exact, allocate_upper_bound, compose, compute_bpl, compute_fpl, gen_identity,
    gen_random_stochastic, gen_uniform, generate_loss_function, precompute_params, supremum_loss,
    BudgetSchedule, Evaluator, LeakageTimeline, LfpValue, MatrixError, MatrixKind,
    TransitionMatrix,
};

// ============================================================================
// Error classes and exit codes
// ============================================================================

enum CliError {
    Usage(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse(String),
    Domain(tdp_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse(_) => 4,
            CliError::Domain(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Io { path, source } => write!(f, "file: {}: {source}", path.display()),
            CliError::Parse(msg) => write!(f, "parse: {msg}"),
            CliError::Domain(err) => write!(f, "domain: {err}"),
        }
    }
}

// Malformed text is a parse failure; every other library error means
// the numbers were read fine but violate a mathematical contract.
impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::MalformedInput(msg) => CliError::Parse(msg),
            other => CliError::Domain(other.into()),
        }
    }
}

impl From<tdp_core::Error> for CliError {
    fn from(e: tdp_core::Error) -> Self {
        match e {
            tdp_core::Error::Matrix(m) => m.into(),
            other => CliError::Domain(other),
        }
    }
}

impl From<LossError> for CliError {
    fn from(e: LossError) -> Self {
        CliError::Domain(e.into())
    }
}

impl From<AccountingError> for CliError {
    fn from(e: AccountingError) -> Self {
        CliError::Domain(e.into())
    }
}

impl From<AllocationError> for CliError {
    fn from(e: AllocationError) -> Self {
        CliError::Domain(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

// ============================================================================
// Command line surface
// ============================================================================

#[derive(Parser)]
#[command(
    name = "tdp",
    version,
    about = "Temporal privacy leakage under Markov correlations: quantify timelines, \
             bound suprema, and allocate per-step budgets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check matrix files: square shape, entry range, stochastic rows
    Validate(ValidateArgs),
    /// Emit the strongest-correlation matrix, optionally smoothed
    GenMatrix(GenMatrixArgs),
    /// Compute the leakage timeline (bpl, fpl, tpl) for a budget sequence
    Quantify(QuantifyArgs),
    /// Build a matrix's piecewise loss function and serialize it
    LossFn(LossFnArgs),
    /// Supremum of leakage under a constant per-step budget
    Supremum(SupremumArgs),
    /// Allocate per-step budgets meeting a target total leakage level
    Allocate(AllocateArgs),
    /// Compose a quantified timeline over a release window
    Compose(ComposeArgs),
    /// Timing sweeps and the smoothing experiment, as plot-ready CSV
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Direct,
    Precomp,
    Piecewise,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Backward,
    Forward,
}

impl From<Kind> for MatrixKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Backward => MatrixKind::Backward,
            Kind::Forward => MatrixKind::Forward,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    UpperBound,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    Runtime,
    Smoothing,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ValidateArgs {
    /// Backward transition matrix (CSV, or JSON by extension)
    #[arg(long)]
    backward: Option<PathBuf>,
    /// Forward transition matrix (CSV, or JSON by extension)
    #[arg(long)]
    forward: Option<PathBuf>,
}

#[derive(Args)]
struct GenMatrixArgs {
    /// State-space size
    #[arg(long)]
    n: usize,
    /// Laplacian smoothing strength; omit for the raw identity
    #[arg(long)]
    s: Option<f64>,
    /// Role tag recorded in JSON output
    #[arg(long, value_enum, default_value_t = Kind::Backward)]
    kind: Kind,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct QuantifyArgs {
    /// Backward matrix; omit for no backward correlation
    #[arg(long)]
    backward: Option<PathBuf>,
    /// Forward matrix; omit for no forward correlation
    #[arg(long)]
    forward: Option<PathBuf>,
    /// Constant per-step budget (with --T)
    #[arg(long, requires = "t_len", conflicts_with = "eps_file")]
    eps: Option<f64>,
    /// Horizon for a constant budget
    #[arg(long = "T", value_name = "T", requires = "eps")]
    t_len: Option<usize>,
    /// Per-step budgets: one value per line, or t,epsilon rows
    #[arg(long)]
    eps_file: Option<PathBuf>,
    /// Loss-function evaluation path
    #[arg(long, value_enum, default_value_t = Algo::Direct)]
    algo: Algo,
    /// Domain cap for the piecewise path
    #[arg(long = "a-max", default_value_t = 50.0)]
    a_max: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LossFnArgs {
    /// Matrix to build the function for, tagged backward
    #[arg(long)]
    backward: Option<PathBuf>,
    /// Matrix to build the function for, tagged forward
    #[arg(long)]
    forward: Option<PathBuf>,
    /// Domain cap
    #[arg(long = "a-max", default_value_t = 50.0)]
    a_max: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SupremumArgs {
    /// Matrix to bound, tagged backward
    #[arg(long)]
    backward: Option<PathBuf>,
    /// Matrix to bound, tagged forward
    #[arg(long)]
    forward: Option<PathBuf>,
    /// Constant per-step budget
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AllocateArgs {
    /// Backward matrix; omit for no backward correlation
    #[arg(long)]
    backward: Option<PathBuf>,
    /// Forward matrix; omit for no forward correlation
    #[arg(long)]
    forward: Option<PathBuf>,
    /// Target total leakage level
    #[arg(long)]
    alpha: f64,
    /// Allocation strategy
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Horizon: required for exact, materializes an upper-bound schedule
    #[arg(long = "T", value_name = "T")]
    t_len: Option<usize>,
    /// Loss-function evaluation path (exact strategy)
    #[arg(long, value_enum, default_value_t = Algo::Direct)]
    algo: Algo,
    /// Domain cap for the piecewise path
    #[arg(long = "a-max", default_value_t = 50.0)]
    a_max: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ComposeArgs {
    /// Timeline file produced by quantify (CSV or JSON)
    #[arg(long)]
    timeline: PathBuf,
    /// Window start, 1-based
    #[arg(long)]
    t: usize,
    /// Number of releases following the start in the window
    #[arg(long)]
    j: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep mode
    #[arg(long, value_enum, default_value_t = BenchMode::Runtime)]
    mode: BenchMode,
    /// State-space sizes (runtime default 20,100; smoothing default 50,200)
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Horizons (runtime default 1,10,100,1000; smoothing default 100)
    #[arg(long = "T", value_name = "T", value_delimiter = ',')]
    t_grid: Vec<usize>,
    /// Per-step budgets, smoothing mode (default 0.1,1)
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Smoothing strengths (default 0.005,0.01,0.05,0.1,0.5,1)
    #[arg(long, value_delimiter = ',')]
    s: Vec<f64>,
    /// Timing repetitions per configuration
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Matrix generation seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Domain cap for the piecewise path
    #[arg(long = "a-max", default_value_t = 50.0)]
    a_max: f64,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

// ============================================================================
// Entry point
// ============================================================================

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Validate(a) => cmd_validate(a),
        Command::GenMatrix(a) => cmd_gen_matrix(a),
        Command::Quantify(a) => cmd_quantify(a),
        Command::LossFn(a) => cmd_loss_fn(a),
        Command::Supremum(a) => cmd_supremum(a),
        Command::Allocate(a) => cmd_allocate(a),
        Command::Compose(a) => cmd_compose(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

// ============================================================================
// File plumbing
// ============================================================================

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn read_matrix(path: &Path, kind: MatrixKind) -> CliResult<TransitionMatrix> {
    let text = read_file(path)?;
    let m = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        matrix_io::parse_json(&text)?
    } else {
        matrix_io::parse_csv(&text, kind)?
    };
    // The flag a file arrived under decides its role, not its tag.
    Ok(m.with_kind(kind))
}

/// Exactly one matrix, from whichever role flag was given.
fn single_matrix(
    backward: &Option<PathBuf>,
    forward: &Option<PathBuf>,
) -> CliResult<TransitionMatrix> {
    match (backward, forward) {
        (Some(p), None) => read_matrix(p, MatrixKind::Backward),
        (None, Some(p)) => read_matrix(p, MatrixKind::Forward),
        _ => Err(CliError::Usage(
            "provide exactly one of --backward or --forward".into(),
        )),
    }
}

fn make_evaluator(m: &TransitionMatrix, algo: Algo, a_max: f64) -> CliResult<Evaluator<'_>> {
    Ok(match algo {
        Algo::Direct => Evaluator::Direct(m),
        Algo::Precomp => Evaluator::Precomputed(precompute_params(m)),
        Algo::Piecewise => Evaluator::Piecewise(generate_loss_function(m, a_max)?),
    })
}

fn emit_to(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    let mut content = content.to_owned();
    if !content.ends_with('\n') {
        content.push('\n');
    }
    match out {
        Some(path) => fs::write(path, content).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn emit(output: &OutputArgs, csv: String, json: String) -> CliResult<()> {
    let content = match output.format {
        Format::Csv => csv,
        Format::Json => json,
    };
    emit_to(&output.out, &content)
}

// ============================================================================
// Commands
// ============================================================================

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    if a.backward.is_none() && a.forward.is_none() {
        return Err(CliError::Usage(
            "provide --backward and/or --forward".into(),
        ));
    }
    let sides = [
        ("backward", &a.backward, MatrixKind::Backward),
        ("forward", &a.forward, MatrixKind::Forward),
    ];
    for (role, path, kind) in sides {
        if let Some(path) = path {
            let m = read_matrix(path, kind)?;
            println!(
                "{role} {}: ok, {n} x {n} row-stochastic",
                path.display(),
                n = m.n()
            );
        }
    }
    Ok(())
}

fn cmd_gen_matrix(a: GenMatrixArgs) -> CliResult<()> {
    let mut m = gen_identity(a.n, a.kind.into())?;
    if let Some(s) = a.s {
        m = m.smooth(s)?;
    }
    emit(&a.output, matrix_io::to_csv(&m), matrix_io::to_json(&m))
}

fn cmd_quantify(a: QuantifyArgs) -> CliResult<()> {
    if a.backward.is_none() && a.forward.is_none() {
        return Err(CliError::Usage(
            "provide at least one of --backward or --forward".into(),
        ));
    }
    let epsilons = load_epsilons(&a)?;
    let back = match &a.backward {
        Some(p) => Some(read_matrix(p, MatrixKind::Backward)?),
        None => None,
    };
    let fwd = match &a.forward {
        Some(p) => Some(read_matrix(p, MatrixKind::Forward)?),
        None => None,
    };
    // A missing matrix means no correlation on that side: the leakage
    // column collapses to the budgets themselves.
    let bpl = match &back {
        Some(m) => compute_bpl(&make_evaluator(m, a.algo, a.a_max)?, &epsilons)?,
        None => epsilons.clone(),
    };
    let fpl = match &fwd {
        Some(m) => compute_fpl(&make_evaluator(m, a.algo, a.a_max)?, &epsilons)?,
        None => epsilons.clone(),
    };
    let tpl: Vec<f64> = (0..epsilons.len())
        .map(|t| bpl[t] + fpl[t] - epsilons[t])
        .collect();
    let tl = LeakageTimeline::from_columns(epsilons, bpl, fpl, tpl)?;
    emit(&a.output, tl.to_csv(), tl.to_json())
}

fn load_epsilons(a: &QuantifyArgs) -> CliResult<Vec<f64>> {
    if let Some(path) = &a.eps_file {
        let text = read_file(path)?;
        parse_eps_file(&text).map_err(CliError::Parse)
    } else if let (Some(eps), Some(t_len)) = (a.eps, a.t_len) {
        Ok(vec![eps; t_len])
    } else {
        Err(CliError::Usage(
            "provide --eps with --T, or --eps-file".into(),
        ))
    }
}

/// One budget per line; `t,epsilon` rows (an allocate schedule) also
/// work, taking the last field of each line.
fn parse_eps_file(text: &str) -> Result<Vec<f64>, String> {
    let mut epsilons = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        let value = field.parse::<f64>().map_err(|_| {
            format!(
                "budget file line {}: expected a number, got {field:?}",
                i + 1
            )
        })?;
        epsilons.push(value);
    }
    if epsilons.is_empty() {
        return Err("budget file has no values".into());
    }
    Ok(epsilons)
}

fn cmd_loss_fn(a: LossFnArgs) -> CliResult<()> {
    let m = single_matrix(&a.backward, &a.forward)?;
    let pl = generate_loss_function(&m, a.a_max)?;
    let mut csv = String::from("hi,q,d\n");
    for (hi, (q, d)) in pl.breakpoints.iter().zip(&pl.coeffs) {
        csv.push_str(&format!("{hi:.11e},{q:.11e},{d:.11e}\n"));
    }
    let json = pl.to_json();
    emit(&a.output, csv, json)
}

fn cmd_supremum(a: SupremumArgs) -> CliResult<()> {
    let m = single_matrix(&a.backward, &a.forward)?;
    let sup = supremum_loss(&m, a.eps)?;
    let value = match sup.value {
        LfpValue::Finite(v) => Some(v),
        LfpValue::Infinite => None,
    };
    let csv = format!(
        "supremum,witness_q,witness_d\n{:.11e},{:.11e},{:.11e}\n",
        value.unwrap_or(f64::INFINITY),
        sup.witness_q,
        sup.witness_d
    );
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "unbounded": value.is_none(),
        "supremum": value,
        "witness_q": sup.witness_q,
        "witness_d": sup.witness_d,
    }))
    .expect("supremum serialization cannot fail");
    emit(&a.output, csv, json)
}

fn cmd_allocate(a: AllocateArgs) -> CliResult<()> {
    // A missing matrix means no correlation on that side; uniform rows
    // carry exactly that.
    let back = match &a.backward {
        Some(p) => read_matrix(p, MatrixKind::Backward)?,
        None => gen_uniform(2, MatrixKind::Backward)?,
    };
    let fwd = match &a.forward {
        Some(p) => read_matrix(p, MatrixKind::Forward)?,
        None => gen_uniform(2, MatrixKind::Forward)?,
    };
    let sched: BudgetSchedule = match a.strategy {
        Strategy::UpperBound => {
            let mut sched = allocate_upper_bound(&back, &fwd, a.alpha)?;
            if let Some(t_len) = a.t_len {
                let epsilons = sched.epsilons_for(t_len)?;
                sched.epsilons = epsilons;
                sched.horizon = Some(t_len);
            }
            sched
        }
        Strategy::Exact => {
            let t_len = a
                .t_len
                .ok_or_else(|| CliError::Usage("--strategy exact requires --T".into()))?;
            let be = make_evaluator(&back, a.algo, a.a_max)?;
            let fe = make_evaluator(&fwd, a.algo, a.a_max)?;
            allocate_exact(&be, &fe, a.alpha, t_len)?
        }
    };
    emit(&a.output, sched.to_csv(), sched.to_json())
}

fn cmd_compose(a: ComposeArgs) -> CliResult<()> {
    let text = read_file(&a.timeline)?;
    let tl = parse_timeline(&text)?;
    let alpha = compose(&tl, a.t, a.j)?;
    let csv = format!("alpha\n{alpha:.11e}\n");
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "t": a.t,
        "j": a.j,
        "alpha": alpha,
    }))
    .expect("composition serialization cannot fail");
    emit(&a.output, csv, json)
}

fn parse_timeline(text: &str) -> CliResult<LeakageTimeline> {
    if text.trim_start().starts_with('{') {
        let tl: LeakageTimeline = serde_json::from_str(text)
            .map_err(|e| CliError::Parse(format!("timeline json: {e}")))?;
        tl.validate()?;
        return Ok(tl);
    }
    let (mut eps, mut bpl, mut fpl, mut tpl) = (vec![], vec![], vec![], vec![]);
    let mut first = true;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed: Option<Vec<f64>> = if fields.len() == 5 {
            fields[1..].iter().map(|f| f.trim().parse().ok()).collect()
        } else {
            None
        };
        match parsed {
            Some(v) => {
                eps.push(v[0]);
                bpl.push(v[1]);
                fpl.push(v[2]);
                tpl.push(v[3]);
            }
            // The header row is the only non-numeric line allowed.
            None if first => {}
            None => {
                return Err(CliError::Parse(format!(
                    "timeline row {line:?}: expected t,epsilon,bpl,fpl,tpl"
                )))
            }
        }
        first = false;
    }
    if eps.is_empty() {
        return Err(CliError::Parse("timeline file has no rows".into()));
    }
    Ok(LeakageTimeline::from_columns(eps, bpl, fpl, tpl)?)
}

// ============================================================================
// Bench harness
// ============================================================================

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let csv = match a.mode {
        BenchMode::Runtime => bench_runtime(&a)?,
        BenchMode::Smoothing => bench_smoothing(&a)?,
    };
    emit_to(&a.out, &csv)
}

fn mean_secs<R>(reps: usize, mut f: impl FnMut() -> R) -> f64 {
    let start = Instant::now();
    for _ in 0..reps {
        black_box(f());
    }
    start.elapsed().as_secs_f64() / reps as f64
}

/// Wall-times for the three per-step evaluation paths and the two
/// precomputation phases, long format: `n,T,algo,metric,seconds` with
/// T = 0 on build rows. Library calls only are timed.
fn bench_runtime(a: &BenchArgs) -> CliResult<String> {
    let sizes = if a.n.is_empty() {
        vec![20, 100]
    } else {
        a.n.clone()
    };
    let horizons = if a.t_grid.is_empty() {
        vec![1, 10, 100, 1000]
    } else {
        a.t_grid.clone()
    };
    let mut out = String::from("n,T,algo,metric,seconds\n");
    for &n in &sizes {
        let m = gen_random_stochastic(n, a.seed.wrapping_add(n as u64), MatrixKind::Backward)?;
        // Materialize once so errors surface before any timing runs.
        let table = precompute_params(&m);
        let envelope = generate_loss_function(&m, a.a_max)?;
        let build_table = mean_secs(a.reps, || precompute_params(&m));
        let build_env = mean_secs(a.reps, || generate_loss_function(&m, a.a_max));
        out.push_str(&format!("{n},0,precomp,build,{build_table:.11e}\n"));
        out.push_str(&format!("{n},0,piecewise,build,{build_env:.11e}\n"));
        let evaluators = [
            ("direct", Evaluator::Direct(&m)),
            ("precomp", Evaluator::Precomputed(table)),
            ("piecewise", Evaluator::Piecewise(envelope)),
        ];
        for &t_len in &horizons {
            let epsilons = vec![0.1; t_len];
            for (name, ev) in &evaluators {
                compute_bpl(ev, &epsilons)?;
                let total = mean_secs(a.reps, || compute_bpl(ev, &epsilons));
                out.push_str(&format!("{n},{t_len},{name},total,{total:.11e}\n"));
                out.push_str(&format!(
                    "{n},{t_len},{name},per_step,{:.11e}\n",
                    total / t_len as f64
                ));
            }
        }
    }
    Ok(out)
}

/// Backward leakage of the strongest correlation under Laplacian
/// smoothing, long format: `n,eps,s,t,bpl`.
fn bench_smoothing(a: &BenchArgs) -> CliResult<String> {
    let sizes = if a.n.is_empty() {
        vec![50, 200]
    } else {
        a.n.clone()
    };
    let budgets = if a.eps.is_empty() {
        vec![0.1, 1.0]
    } else {
        a.eps.clone()
    };
    let strengths = if a.s.is_empty() {
        vec![0.005, 0.01, 0.05, 0.1, 0.5, 1.0]
    } else {
        a.s.clone()
    };
    let t_len = match a.t_grid.as_slice() {
        [] => 100,
        [t] => *t,
        _ => return Err(CliError::Usage("smoothing mode takes a single --T".into())),
    };
    let mut out = String::from("n,eps,s,t,bpl\n");
    for &n in &sizes {
        for &eps in &budgets {
            let epsilons = vec![eps; t_len];
            for &s in &strengths {
                let m = gen_identity(n, MatrixKind::Backward)?.smooth(s)?;
                let bpl = compute_bpl(&Evaluator::Direct(&m), &epsilons)?;
                for (t, v) in bpl.iter().enumerate() {
                    out.push_str(&format!("{n},{eps:?},{s:?},{},{v:.11e}\n", t + 1));
                }
            }
        }
    }
    Ok(out)
}
