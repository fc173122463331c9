//! Command-line front end: argument parsing, validation, dispatch and
//! report formatting. `main.rs` only wires this to the process.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use valmax_core::corpus::corpus;
use valmax_core::{
    bisect_root, convergence_diagnostic, initial_bracket, iterations_needed, maximize, minimize,
    parse, ExtremumReport, Interval, OracleConfig, OracleError, OracleKind, RootError, RootResult,
    SolveError, SolverConfig, UnknownPolicy, ValueBracket,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_ORACLE_INDETERMINATE: i32 = 3;
pub const EXIT_EVAL_ERROR: i32 = 4;

pub const MAX_ITER_MESSAGE: &str =
    "Maximum iterations reached without the desired tolerance. Input a bigger N_MAX";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Max,
    Min,
    Root,
    Predict,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Grid,
    Certified,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnUnknown {
    TreatUnreachable,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

/// A fully parsed, not yet validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub command: Command,
    pub expression: String,
    pub domain: (f64, f64),
    pub bracket: Option<(f64, f64)>,
    /// `predict`: initial bracket width. `bench`: minimum starting width.
    pub width: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub oracle_kind: OracleArg,
    pub grid_points: usize,
    pub max_depth: u32,
    pub unknown_policy: OnUnknown,
    pub tangency: bool,
    pub deriv_tol: f64,
    pub output_format: OutputFormat,
    pub trace: bool,
}

impl Default for RunRequest {
    fn default() -> Self {
        let oracle = OracleConfig::default();
        let solver = SolverConfig::default();
        Self {
            command: Command::Max,
            expression: String::new(),
            domain: (0.0, 1.0),
            bracket: None,
            width: None,
            tol: solver.tol,
            max_iter: solver.max_iter,
            oracle_kind: OracleArg::Hybrid,
            grid_points: oracle.grid_points,
            max_depth: oracle.max_depth,
            unknown_policy: OnUnknown::TreatUnreachable,
            tangency: false,
            deriv_tol: solver.deriv_tol,
            output_format: OutputFormat::Text,
            trace: false,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "valmax",
    version,
    about = "Global maximum/minimum of f(x) on [a, b] by bisection on the value axis"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Approximate the maximum value of f on [a, b]
    Max(ExtremumArgs),
    /// Approximate the minimum value of f on [a, b]
    Min(ExtremumArgs),
    /// Find a zero of f on [a, b] by classical bisection
    Root(RootArgs),
    /// Number of iterations needed for a tolerance
    Predict(PredictArgs),
    /// Run the solver over the built-in function corpus
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct FunctionArgs {
    /// Function of x, e.g. "exp(x)-4*x" or "piecewise(x<0: -x; else: x^2)"
    #[arg(short = 'f', long = "fn", value_name = "EXPR")]
    function: String,
    /// Lower end of the domain
    #[arg(short = 'a', long = "a", allow_negative_numbers = true)]
    a: f64,
    /// Upper end of the domain
    #[arg(short = 'b', long = "b", allow_negative_numbers = true)]
    b: f64,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Stop when the bracket half-width is at most this
    #[arg(long, default_value_t = 1e-7, allow_negative_numbers = true)]
    tol: f64,
    /// Maximum number of oracle queries
    #[arg(
        long = "max-iter",
        default_value_t = 200,
        allow_negative_numbers = true
    )]
    max_iter: i64,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Emit a JSON report
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, value_enum, default_value_t = OracleArg::Hybrid)]
    oracle: OracleArg,
    #[arg(
        long = "grid-points",
        default_value_t = 1025,
        allow_negative_numbers = true
    )]
    grid_points: i64,
    #[arg(
        long = "max-depth",
        default_value_t = 40,
        allow_negative_numbers = true
    )]
    max_depth: i64,
    #[arg(long = "on-unknown", value_enum, default_value_t = OnUnknown::TreatUnreachable)]
    on_unknown: OnUnknown,
}

#[derive(Debug, Args)]
struct ExtremumArgs {
    #[command(flatten)]
    function: FunctionArgs,
    /// Attained value of f (for min: a lower bound on the minimum)
    #[arg(long, allow_negative_numbers = true)]
    m0: Option<f64>,
    /// Upper bound on the maximum, trusted as given (for min: an attained value)
    #[arg(long, allow_negative_numbers = true)]
    u0: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Stop early when the level is tangent to f at an interior witness
    #[arg(long)]
    tangency: bool,
    #[arg(long = "deriv-tol", default_value_t = 1e-6)]
    deriv_tol: f64,
    /// Print the per-iteration table
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
struct RootArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long, default_value_t = 1e-7, allow_negative_numbers = true)]
    tol: f64,
    #[arg(
        long = "max-iter",
        default_value_t = 200,
        allow_negative_numbers = true
    )]
    max_iter: i64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Initial bracket width u0 - m0
    #[arg(long, allow_negative_numbers = true)]
    width: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    m0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    u0: Option<f64>,
    #[arg(long, default_value_t = 1e-7, allow_negative_numbers = true)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Widen each starting bracket so that u0 - m0 is at least this
    #[arg(long)]
    span: Option<f64>,
}

/// Out-of-range integers are mapped to 0 so that validation rejects them.
fn count(v: i64) -> usize {
    usize::try_from(v).unwrap_or(0)
}

fn format_of(json: bool) -> OutputFormat {
    if json {
        OutputFormat::Json
    } else {
        OutputFormat::Text
    }
}

impl RunRequest {
    fn with_solver(mut self, s: &SolverArgs) -> Self {
        self.tol = s.tol;
        self.max_iter = count(s.max_iter);
        self.oracle_kind = s.oracle.oracle;
        self.grid_points = count(s.oracle.grid_points);
        self.max_depth = u32::try_from(s.oracle.max_depth).unwrap_or(0);
        self.unknown_policy = s.oracle.on_unknown;
        self.output_format = format_of(s.json);
        self
    }

    fn with_function(mut self, f: &FunctionArgs) -> Self {
        self.expression = f.function.clone();
        self.domain = (f.a, f.b);
        self
    }
}

fn request_from(cli: Cli) -> RunRequest {
    let base = RunRequest::default();
    match cli.command {
        CliCommand::Max(args) => extremum_request(Command::Max, &args),
        CliCommand::Min(args) => extremum_request(Command::Min, &args),
        CliCommand::Root(args) => RunRequest {
            command: Command::Root,
            tol: args.tol,
            max_iter: count(args.max_iter),
            output_format: format_of(args.json),
            ..base
        }
        .with_function(&args.function),
        CliCommand::Predict(args) => RunRequest {
            command: Command::Predict,
            width: args.width,
            bracket: args.m0.zip(args.u0),
            tol: args.tol,
            output_format: format_of(args.json),
            ..base
        },
        CliCommand::Bench(args) => RunRequest {
            command: Command::Bench,
            width: args.span,
            ..base
        }
        .with_solver(&args.solver),
    }
}

fn extremum_request(command: Command, args: &ExtremumArgs) -> RunRequest {
    RunRequest {
        command,
        bracket: match (args.m0, args.u0) {
            (Some(m), Some(u)) => Some((m, u)),
            (None, None) => None,
            // one-sided bracket: flagged by validation
            (m, u) => Some((m.unwrap_or(f64::NAN), u.unwrap_or(f64::NAN))),
        },
        tangency: args.tangency,
        deriv_tol: args.deriv_tol,
        trace: args.trace,
        ..RunRequest::default()
    }
    .with_function(&args.function)
    .with_solver(&args.solver)
}

/// Parses `args` (program name first) and runs the request.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&request_from(cli), out, err),
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID_INPUT,
            };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{rendered}");
            code
        }
    }
}

/// Validation failure message, one line, naming the parameter.
fn validate(req: &RunRequest) -> Result<(), String> {
    let needs_domain = matches!(req.command, Command::Max | Command::Min | Command::Root);
    if needs_domain {
        let (a, b) = req.domain;
        if !a.is_finite() || !b.is_finite() {
            return Err("Error: a and b must be finite numbers".into());
        }
        if b <= a {
            return Err("Error: b must be bigger than a".into());
        }
    }
    if !(req.tol > 0.0) || !req.tol.is_finite() {
        return Err("Error: Enter a positive number for the tolerance (--tol)".into());
    }
    if req.command != Command::Predict && req.max_iter == 0 {
        return Err(
            "Error: Enter a positive number for the number of iterations (--max-iter)".into(),
        );
    }
    if matches!(req.command, Command::Max | Command::Min | Command::Bench) {
        if req.grid_points < 2 {
            return Err("Error: --grid-points must be at least 2".into());
        }
        if req.max_depth == 0 {
            return Err("Error: --max-depth must be at least 1".into());
        }
    }
    if let Some((m0, u0)) = req.bracket {
        if m0.is_nan() || u0.is_nan() {
            return Err("Error: --m0 and --u0 must be given together".into());
        }
        if !(m0.is_finite() && u0.is_finite()) {
            return Err("Error: --m0 and --u0 must be finite".into());
        }
        if u0 <= m0 {
            return Err("Error: Enter a number u0 bigger than m0".into());
        }
    }
    if let (Command::Bench, Some(w)) = (req.command, req.width) {
        if !(w > 0.0) || !w.is_finite() {
            return Err("Error: --span must be a positive number".into());
        }
    }
    if req.command == Command::Predict {
        match (req.width, req.bracket) {
            (Some(w), _) if !(w >= 0.0) || !w.is_finite() => {
                return Err("Error: --width must be a non-negative number".into());
            }
            (None, None) => return Err("Error: predict needs --width or --m0 and --u0".into()),
            _ => {}
        }
    }
    Ok(())
}

fn solver_config(req: &RunRequest) -> SolverConfig {
    SolverConfig {
        tol: req.tol,
        max_iter: req.max_iter,
        oracle: OracleConfig {
            kind: match req.oracle_kind {
                OracleArg::Grid => OracleKind::Grid,
                OracleArg::Certified => OracleKind::Certified,
                OracleArg::Hybrid => OracleKind::Hybrid,
            },
            grid_points: req.grid_points,
            max_depth: req.max_depth,
            unknown_policy: match req.unknown_policy {
                OnUnknown::TreatUnreachable => UnknownPolicy::TreatAsUnreachable,
                OnUnknown::Abort => UnknownPolicy::Abort,
            },
            ..OracleConfig::default()
        },
        tangency_check: req.tangency,
        deriv_tol: req.deriv_tol,
    }
}

fn solve_exit_code(e: &SolveError) -> i32 {
    match e {
        SolveError::OracleIndeterminate { .. } => EXIT_ORACLE_INDETERMINATE,
        SolveError::Oracle(OracleError::NothingEvaluable)
        | SolveError::Oracle(OracleError::UnboundedEnclosure(_)) => EXIT_EVAL_ERROR,
        _ => EXIT_INVALID_INPUT,
    }
}

/// Validates and executes `req`, writing the report to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run(req: &RunRequest, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Err(msg) = validate(req) {
        let _ = writeln!(err, "{msg}");
        return EXIT_INVALID_INPUT;
    }
    let result = match req.command {
        Command::Max | Command::Min => run_extremum(req, out, err),
        Command::Root => run_root(req, out, err),
        Command::Predict => run_predict(req, out),
        Command::Bench => run_bench(req, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "Error: {}", e.message);
            e.code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::new(EXIT_INVALID_INPUT, format!("cannot write output: {e}"))
}

fn run_extremum(
    req: &RunRequest,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let f = parse(&req.expression).map_err(|e| Failure::new(EXIT_INVALID_INPUT, e))?;
    let domain = Interval::new(req.domain.0, req.domain.1);
    let bracket = req.bracket.map(|(m, u)| ValueBracket::new(m, u));
    let cfg = solver_config(req);
    let solve = if req.command == Command::Max {
        maximize
    } else {
        minimize
    };
    let report =
        solve(&f, &domain, bracket, &cfg).map_err(|e| Failure::new(solve_exit_code(&e), e))?;
    match req.output_format {
        OutputFormat::Json => {
            let json = JsonReport::new(req, &report);
            serde_json::to_writer_pretty(&mut *out, &json).map_err(|e| io(e.into()))?;
            writeln!(out).map_err(io)?;
        }
        OutputFormat::Text => write_text_report(req, &report, out).map_err(io)?,
    }
    if report.converged || report.exact_max_detected {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "{MAX_ITER_MESSAGE}");
        Ok(EXIT_MAX_ITER)
    }
}

fn run_root(req: &RunRequest, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let f = parse(&req.expression).map_err(|e| Failure::new(EXIT_INVALID_INPUT, e))?;
    let (a, b) = req.domain;
    let r = bisect_root(&f, a, b, req.tol, req.max_iter).map_err(|e| {
        let code = match e {
            RootError::Eval(_) => EXIT_EVAL_ERROR,
            _ => EXIT_INVALID_INPUT,
        };
        Failure::new(code, e)
    })?;
    match req.output_format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &JsonRoot::from(&r))
                .map_err(|e| io(e.into()))?;
            writeln!(out).map_err(io)?;
        }
        OutputFormat::Text => {
            writeln!(out, "root:       {}", sig(r.root)).map_err(io)?;
            writeln!(out, "residual:   {}", sig(r.residual)).map_err(io)?;
            writeln!(out, "error bound:{}", pad(sig(r.bound))).map_err(io)?;
            writeln!(out, "iterations: {}", r.iterations).map_err(io)?;
        }
    }
    // an exact zero ends the run early and counts as converged
    if (r.residual == 0.0) || r.bound <= req.tol {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "{MAX_ITER_MESSAGE}");
        Ok(EXIT_MAX_ITER)
    }
}

fn pad(s: String) -> String {
    format!(" {s}")
}

fn run_predict(req: &RunRequest, out: &mut dyn Write) -> Result<i32, Failure> {
    let bracket = match (req.width, req.bracket) {
        (Some(w), _) => ValueBracket::new(0.0, w),
        (None, Some((m, u))) => ValueBracket::new(m, u),
        (None, None) => unreachable!("validated"),
    };
    let n = iterations_needed(&bracket, req.tol);
    match req.output_format {
        OutputFormat::Json => writeln!(out, "{}", serde_json::json!({ "iterations": n })),
        OutputFormat::Text => writeln!(out, "{n}"),
    }
    .map_err(io)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct BenchRow {
    name: &'static str,
    expression: &'static str,
    domain: [f64; 2],
    known_max: f64,
    estimate: f64,
    iterations: usize,
    final_width: f64,
    ratio_estimate: Option<f64>,
    order_estimate: Option<f64>,
    converged: bool,
}

fn run_bench(req: &RunRequest, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = solver_config(req);
    let mut rows = Vec::new();
    for entry in corpus() {
        let f = entry.expr();
        let fail =
            |e: SolveError| Failure::new(solve_exit_code(&e), format!("{}: {e}", entry.name));
        let bracket = match req.width {
            // raising u0 keeps it an upper bound
            Some(span) => {
                let b =
                    initial_bracket(&f, &entry.domain, &cfg.oracle).map_err(|e| fail(e.into()))?;
                Some(ValueBracket::new(b.m, b.u.max(b.m + span)))
            }
            None => None,
        };
        let r = maximize(&f, &entry.domain, bracket, &cfg).map_err(fail)?;
        let diag = convergence_diagnostic(&r.history).ok();
        rows.push(BenchRow {
            name: entry.name,
            expression: entry.source,
            domain: [entry.domain.lo(), entry.domain.hi()],
            known_max: entry.max,
            estimate: r.estimate,
            iterations: r.iterations,
            final_width: r.bracket.width(),
            ratio_estimate: diag.map(|d| d.ratio),
            order_estimate: diag.map(|d| d.order),
            converged: r.converged || r.exact_max_detected,
        });
    }
    match req.output_format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &rows).map_err(|e| io(e.into()))?;
            writeln!(out).map_err(io)?;
        }
        OutputFormat::Text => {
            let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_owned(), sig);
            writeln!(
                out,
                "{:<12} {:>18} {:>6} {:>18} {:>18} {:>18}",
                "function", "estimate", "iters", "final width", "ratio", "order"
            )
            .map_err(io)?;
            for r in &rows {
                writeln!(
                    out,
                    "{:<12} {:>18} {:>6} {:>18} {:>18} {:>18}",
                    r.name,
                    sig(r.estimate),
                    r.iterations,
                    sig(r.final_width),
                    opt(r.ratio_estimate),
                    opt(r.order_estimate)
                )
                .map_err(io)?;
            }
        }
    }
    Ok(if rows.iter().all(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_MAX_ITER
    })
}

/// Formats with 10 significant digits, trimming trailing zeros.
pub fn sig(v: f64) -> String {
    const DIGITS: i32 = 10;
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..DIGITS).contains(&exp) {
        let decimals = usize::try_from(DIGITS - 1 - exp).unwrap_or(0);
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        }
    } else {
        format!("{v:.9e}")
    }
}

fn write_text_report(
    req: &RunRequest,
    r: &ExtremumReport,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let what = if req.command == Command::Max {
        "maximum"
    } else {
        "minimum"
    };
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    writeln!(out, "{what} estimate: {}", sig(r.estimate))?;
    writeln!(out, "error bound:      {}", sig(r.error_bound))?;
    writeln!(out, "iterations:       {}", r.iterations)?;
    writeln!(out, "converged:        {}", yes_no(r.converged))?;
    writeln!(out, "exact max found:  {}", yes_no(r.exact_max_detected))?;
    match r.witness {
        Some(w) => writeln!(out, "witness:          x = {}", sig(w))?,
        None => writeln!(out, "witness:          none")?,
    }
    writeln!(
        out,
        "bracket:          [{}, {}]",
        sig(r.bracket.m),
        sig(r.bracket.u)
    )?;
    if req.trace {
        writeln!(out)?;
        writeln!(
            out,
            "{:>5} {:>18} {:>12} {:>18} {:>18}",
            "n", "c", "verdict", "m", "u"
        )?;
        for h in &r.history {
            let verdict = format!(
                "{}{}",
                h.verdict.kind.as_str(),
                if h.verdict.certified { "" } else { "?" }
            );
            writeln!(
                out,
                "{:>5} {:>18} {:>12} {:>18} {:>18}",
                h.n,
                sig(h.c),
                verdict,
                sig(h.bracket_after.m),
                sig(h.bracket_after.u)
            )?;
        }
    }
    Ok(())
}

/// Machine-readable max/min report.
#[derive(Debug, Serialize)]
pub struct JsonReport {
    pub command: &'static str,
    pub expression: String,
    pub domain: [f64; 2],
    pub bracket0: [f64; 2],
    /// Final bracket.
    pub bracket: [f64; 2],
    pub estimate: f64,
    pub error_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub exact_max_detected: bool,
    pub witness: Option<f64>,
    pub history: Vec<JsonStep>,
}

#[derive(Debug, Serialize)]
pub struct JsonStep {
    pub n: usize,
    pub c: f64,
    pub verdict: &'static str,
    pub certified: bool,
    pub m: f64,
    pub u: f64,
}

impl JsonReport {
    pub fn new(req: &RunRequest, r: &ExtremumReport) -> Self {
        Self {
            command: if req.command == Command::Max {
                "max"
            } else {
                "min"
            },
            expression: req.expression.clone(),
            domain: [req.domain.0, req.domain.1],
            bracket0: [r.bracket0.m, r.bracket0.u],
            bracket: [r.bracket.m, r.bracket.u],
            estimate: r.estimate,
            error_bound: r.error_bound,
            iterations: r.iterations,
            converged: r.converged,
            exact_max_detected: r.exact_max_detected,
            witness: r.witness,
            history: r
                .history
                .iter()
                .map(|h| JsonStep {
                    n: h.n,
                    c: h.c,
                    verdict: h.verdict.kind.as_str(),
                    certified: h.verdict.certified,
                    m: h.bracket_after.m,
                    u: h.bracket_after.u,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct JsonRoot {
    pub root: f64,
    pub iterations: usize,
    pub residual: f64,
    pub bound: f64,
}

impl From<&RootResult> for JsonRoot {
    fn from(r: &RootResult) -> Self {
        Self {
            root: r.root,
            iterations: r.iterations,
            residual: r.residual,
            bound: r.bound,
        }
    }
}
