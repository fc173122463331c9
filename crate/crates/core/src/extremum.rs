//! Value-axis bisection for the global maximum (and, by negation, minimum)
//! of a function on a closed interval.
//!
//! The solver keeps a bracket `m <= M <= u` around the maximum value `M`,
//! where `m` is attained and `u` is an upper bound. Each step asks an oracle
//! whether the midpoint level `c` is reached anywhere on the domain and
//! replaces `m` (yes) or `u` (no) with `c`, so the bracket width halves
//! every iteration and `|M - c_n| <= 2^-(n+1) (u_0 - m_0)`.

use thiserror::Error;

use crate::expr::Expr;
use crate::interval::Interval;
use crate::oracle::{self, OracleConfig, OracleError, OracleVerdict, UnknownPolicy, VerdictKind};

/// Pair `(m, u)` bracketing the maximum value: `m` attained, `u` an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueBracket {
    pub m: f64,
    pub u: f64,
}

impl ValueBracket {
    pub fn new(m: f64, u: f64) -> Self {
        Self { m, u }
    }

    pub fn width(&self) -> f64 {
        self.u - self.m
    }

    pub fn half_width(&self) -> f64 {
        self.width() / 2.0
    }

    pub fn midpoint(&self) -> f64 {
        let sum = self.m + self.u;
        if sum.is_finite() {
            sum / 2.0
        } else {
            self.m + (self.u - self.m) / 2.0
        }
    }

    /// The bracket of `-f` corresponding to this bracket of `f`, or back.
    pub fn negated(&self) -> Self {
        Self {
            m: -self.u,
            u: -self.m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub n: usize,
    /// Probed level, the midpoint of the bracket before the update.
    pub c: f64,
    pub verdict: OracleVerdict,
    pub bracket_after: ValueBracket,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub oracle: OracleConfig,
    /// Stop early when a reachable level is tangent to `f` at its witness.
    pub tangency_check: bool,
    pub deriv_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200,
            oracle: OracleConfig::default(),
            tangency_check: false,
            deriv_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremumReport {
    /// Midpoint of the final bracket.
    pub estimate: f64,
    pub bracket0: ValueBracket,
    pub bracket: ValueBracket,
    pub iterations: usize,
    /// Half-width of the final bracket.
    pub error_bound: f64,
    pub converged: bool,
    pub exact_max_detected: bool,
    /// A domain point attaining the lower end of the bracket, when known.
    pub witness: Option<f64>,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("maximum number of iterations must be at least 1")]
    InvalidMaxIter,
    #[error("invalid bracket: need finite m <= u, got m = {m}, u = {u}")]
    InvalidBracket { m: f64, u: f64 },
    #[error("lower bracket value {m} is not attained by f on the domain")]
    BracketNotReachable { m: f64 },
    #[error("oracle could not decide whether level {level} is reached")]
    OracleIndeterminate { level: f64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn validate(cfg: &SolverConfig) -> Result<(), SolveError> {
    if !(cfg.tol > 0.0) || !cfg.tol.is_finite() {
        return Err(SolveError::InvalidTolerance(cfg.tol));
    }
    if cfg.max_iter == 0 {
        return Err(SolveError::InvalidMaxIter);
    }
    Ok(())
}

/// Bracket plus a point attaining its lower end.
fn starting_bracket(
    f: &Expr,
    domain: &Interval,
    bracket: Option<ValueBracket>,
    cfg: &SolverConfig,
) -> Result<(ValueBracket, Option<f64>), SolveError> {
    let Some(b) = bracket else {
        let b = oracle::initial_bracket(f, domain, &cfg.oracle)?;
        let argmax = oracle::grid(domain, cfg.oracle.grid_points)
            .find(|&x| f.eval(x).is_ok_and(|v| v >= b.m));
        return Ok((b, argmax));
    };
    if !(b.m.is_finite() && b.u.is_finite() && b.m <= b.u) {
        return Err(SolveError::InvalidBracket { m: b.m, u: b.u });
    }
    let verdict = oracle::decide_reachable(f, domain, b.m, &cfg.oracle)?;
    match verdict.kind {
        VerdictKind::Reachable => Ok((b, verdict.witness)),
        VerdictKind::Unknown if cfg.oracle.unknown_policy == UnknownPolicy::Abort => {
            Err(SolveError::OracleIndeterminate { level: b.m })
        }
        _ => Err(SolveError::BracketNotReachable { m: b.m }),
    }
}

/// Approximates the maximum value of `f` on `domain`.
///
/// Without an explicit bracket, one is built from grid sampling and the
/// interval enclosure of `f`. The run stops when the bracket half-width
/// drops to `cfg.tol`, when the tangency test fires, or after
/// `cfg.max_iter` oracle queries; in the last case the report comes back
/// with `converged == false`.
pub fn maximize(
    f: &Expr,
    domain: &Interval,
    bracket: Option<ValueBracket>,
    cfg: &SolverConfig,
) -> Result<ExtremumReport, SolveError> {
    validate(cfg)?;
    let (bracket0, mut witness) = starting_bracket(f, domain, bracket, cfg)?;
    let mut current = bracket0;
    let mut history = Vec::new();
    let mut exact_max_detected = false;

    while current.half_width() > cfg.tol && history.len() < cfg.max_iter {
        let c = current.midpoint();
        if !(current.m < c && c < current.u) {
            // no representable level left between m and u
            break;
        }
        let verdict = oracle::decide_reachable(f, domain, c, &cfg.oracle)?;
        match verdict.kind {
            VerdictKind::Reachable => {
                current.m = c;
                witness = verdict.witness;
            }
            VerdictKind::Unreachable => current.u = c,
            VerdictKind::Unknown => match cfg.oracle.unknown_policy {
                UnknownPolicy::TreatAsUnreachable => current.u = c,
                UnknownPolicy::Abort => return Err(SolveError::OracleIndeterminate { level: c }),
            },
        }
        history.push(IterationRecord {
            n: history.len() + 1,
            c,
            verdict,
            bracket_after: current,
        });
        if cfg.tangency_check {
            if let (VerdictKind::Reachable, Some(w)) = (verdict.kind, verdict.witness) {
                if tangency_stop(f, c, w, domain, cfg.deriv_tol) {
                    exact_max_detected = true;
                    break;
                }
            }
        }
    }

    Ok(ExtremumReport {
        estimate: current.midpoint(),
        bracket0,
        bracket: current,
        iterations: history.len(),
        error_bound: current.half_width(),
        converged: current.half_width() <= cfg.tol,
        exact_max_detected,
        witness,
        history,
    })
}

/// Approximates the minimum value of `f` as `-max(-f)`.
///
/// Here `bracket.m` is a lower bound on the minimum and `bracket.u` a value
/// attained by `f`. The report is expressed in `f`'s values: levels and
/// brackets are sign-flipped back, `bracket.u` being the attained end.
pub fn minimize(
    f: &Expr,
    domain: &Interval,
    bracket: Option<ValueBracket>,
    cfg: &SolverConfig,
) -> Result<ExtremumReport, SolveError> {
    let neg = f.negate();
    let report =
        maximize(&neg, domain, bracket.map(|b| b.negated()), cfg).map_err(|e| match e {
            SolveError::InvalidBracket { m, u } => SolveError::InvalidBracket { m: -u, u: -m },
            SolveError::BracketNotReachable { m } => SolveError::BracketNotReachable { m: -m },
            SolveError::OracleIndeterminate { level } => {
                SolveError::OracleIndeterminate { level: -level }
            }
            other => other,
        })?;
    Ok(ExtremumReport {
        estimate: -report.estimate,
        bracket0: report.bracket0.negated(),
        bracket: report.bracket.negated(),
        history: report
            .history
            .into_iter()
            .map(|r| IterationRecord {
                c: -r.c,
                bracket_after: r.bracket_after.negated(),
                ..r
            })
            .collect(),
        ..report
    })
}

/// Upper bound `2^-(n+1) (u0 - m0)` on `|M - c_n|` after `n` iterations.
pub fn error_bound(bracket0: &ValueBracket, n: usize) -> f64 {
    let exponent = i32::try_from(n).unwrap_or(i32::MAX - 1).min(2000) + 1;
    bracket0.width() * 0.5f64.powi(exponent)
}

/// Smallest `n >= 0` with `error_bound(bracket0, n) <= eps`.
///
/// # Panics
///
/// If `eps` is not positive.
pub fn iterations_needed(bracket0: &ValueBracket, eps: f64) -> usize {
    assert!(eps > 0.0, "eps must be positive");
    let width = bracket0.width();
    if !(width > 0.0) {
        return 0;
    }
    let guess = ((width / eps).log2() - 1.0).ceil();
    let mut n = if guess.is_finite() && guess > 0.0 {
        guess as usize
    } else {
        0
    };
    // the closed form can be off by one when log2 rounds
    while error_bound(bracket0, n) > eps {
        n += 1;
    }
    while n > 0 && error_bound(bracket0, n - 1) <= eps {
        n -= 1;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceDiagnostic {
    /// Least-squares slope of `log w_{n+1}` against `log w_n`.
    pub order: f64,
    /// Mean of `w_{n+1} / w_n`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticError {
    #[error("need at least 3 iterations, got {0}")]
    TooShort(usize),
    #[error("bracket widths are degenerate (zero or constant)")]
    Degenerate,
}

/// Estimates the convergence order and rate from the bracket half-widths
/// `w_n = (u_n - m_n) / 2` recorded in `history`.
pub fn convergence_diagnostic(
    history: &[IterationRecord],
) -> Result<ConvergenceDiagnostic, DiagnosticError> {
    let widths: Vec<f64> = history
        .iter()
        .map(|r| r.bracket_after.half_width())
        .collect();
    half_width_diagnostic(&widths)
}

/// [`convergence_diagnostic`] on a raw sequence of half-widths.
pub fn half_width_diagnostic(widths: &[f64]) -> Result<ConvergenceDiagnostic, DiagnosticError> {
    if widths.len() < 3 {
        return Err(DiagnosticError::TooShort(widths.len()));
    }
    if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(DiagnosticError::Degenerate);
    }
    let pairs: Vec<(f64, f64)> = widths.windows(2).map(|w| (w[0], w[1])).collect();
    let count = pairs.len() as f64;
    let ratio = pairs.iter().map(|(a, b)| b / a).sum::<f64>() / count;

    let logs: Vec<(f64, f64)> = pairs.iter().map(|(a, b)| (a.ln(), b.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(DiagnosticError::Degenerate);
    }
    Ok(ConvergenceDiagnostic {
        order: sxy / sxx,
        ratio,
    })
}

/// Whether the level `c`, reached at `witness`, touches `f` from above at an
/// interior point with vanishing derivative, in which case `c` is taken as
/// the exact maximum.
///
/// Uses the central difference with `h = sqrt(eps) * max(1, |w|)`. Boundary
/// witnesses never qualify, since a maximum there needs no zero derivative.
pub fn tangency_stop(f: &Expr, c: f64, witness: f64, domain: &Interval, deriv_tol: f64) -> bool {
    if !domain.contains_strictly(witness) {
        return false;
    }
    let h = f64::EPSILON.sqrt() * witness.abs().max(1.0);
    let (Ok(right), Ok(left)) = (f.eval(witness + h), f.eval(witness - h)) else {
        return false;
    };
    let slope = (right - left) / (2.0 * h);
    slope.abs() <= deriv_tol && right <= c + deriv_tol && left <= c + deriv_tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;
    use std::f64::consts::{E, PI};

    fn cfg(tol: f64) -> SolverConfig {
        SolverConfig {
            tol,
            ..SolverConfig::default()
        }
    }

    fn dom(a: f64, b: f64) -> Interval {
        Interval::new(a, b)
    }

    fn dense_max(f: &Expr, d: &Interval, n: usize) -> f64 {
        oracle::grid(d, n)
            .filter_map(|x| f.eval(x).ok())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn parabola_with_bracket() {
        let f = parse("-(x-0.5)^2+1").unwrap();
        let b0 = ValueBracket::new(0.75, 2.0);
        let r = maximize(&f, &dom(0.0, 1.0), Some(b0), &cfg(1e-6)).unwrap();
        assert!(r.converged);
        assert!((r.estimate - 1.0).abs() <= 1e-6);
        assert_eq!(r.iterations, iterations_needed(&b0, 1e-6));
        for rec in &r.history {
            let before = rec.c; // c_n is the probe of step n
            assert!((1.0 - before).abs() <= error_bound(&b0, rec.n - 1));
        }
    }

    #[test]
    fn section4_auto_bracket() {
        let f = parse("piecewise(x<=-1: x+5; x<0: 4; else: 3)").unwrap();
        let d = dom(-4.0, 1.0);
        let brute = dense_max(&f, &d, 1_000_001);
        assert_eq!(brute, 4.0);
        let r = maximize(&f, &d, None, &cfg(1e-4)).unwrap();
        assert!(r.converged);
        assert!((r.estimate - 4.0).abs() <= 1e-4);
        assert_eq!(f.eval(r.witness.unwrap()), Ok(4.0));
    }

    #[test]
    fn sine_with_bracket() {
        let f = parse("sin(x)").unwrap();
        let r = maximize(
            &f,
            &dom(0.0, PI),
            Some(ValueBracket::new(0.0, 2.0)),
            &cfg(1e-8),
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.estimate - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn minimum_of_square() {
        let f = parse("(x-0.5)^2").unwrap();
        let r = minimize(&f, &dom(0.0, 1.0), None, &cfg(1e-6)).unwrap();
        assert!(r.estimate.abs() <= 1e-6);
        assert!(r.bracket.m <= r.bracket.u);
    }

    #[test]
    fn minimum_of_bisection_example_is_at_boundary() {
        // f' = e^x - 4 < 0 on [0, 1], so the minimum is f(1) = e - 4
        let f = parse("exp(x)-4*x").unwrap();
        let d = dom(0.0, 1.0);
        let brute = -dense_max(&f.negate(), &d, 1_000_001);
        assert!((brute - (E - 4.0)).abs() < 1e-12);
        let r = minimize(&f, &d, Some(ValueBracket::new(-2.0, 1.0)), &cfg(1e-6)).unwrap();
        assert!((r.estimate - (E - 4.0)).abs() <= 1e-6, "{}", r.estimate);
    }

    #[test]
    fn minimize_flips_bracket_and_history() {
        let f = parse("x^3-x").unwrap();
        let d = dom(-2.0, 2.0);
        let c = cfg(1e-5);
        let lo = minimize(&f, &d, None, &c).unwrap();
        let hi = maximize(&f.negate(), &d, None, &c).unwrap();
        assert_eq!(lo.estimate.to_bits(), (-hi.estimate).to_bits());
        assert_eq!(lo.bracket, hi.bracket.negated());
        for (a, b) in lo.history.iter().zip(&hi.history) {
            assert_eq!(a.c, -b.c);
            assert!(a.bracket_after.m <= a.bracket_after.u);
        }
        assert!((lo.estimate + 6.0).abs() <= 1e-5);
    }

    #[test]
    fn error_bound_formula() {
        assert_eq!(error_bound(&ValueBracket::new(0.75, 2.0), 0), 0.625);
        assert_eq!(error_bound(&ValueBracket::new(0.0, 2.0), 3), 0.125);
    }

    #[test]
    fn iteration_counts() {
        let unit = ValueBracket::new(0.0, 1.0);
        // log2(1e7) - 1 = 22.25...
        assert_eq!(iterations_needed(&unit, 1e-7), 23);
        assert_eq!(iterations_needed(&unit, 0.25), 1);
        assert_eq!(iterations_needed(&ValueBracket::new(0.75, 2.0), 2.0), 0);
        assert_eq!(iterations_needed(&ValueBracket::new(1.0, 1.0), 1e-9), 0);
    }

    #[test]
    fn diagnostics() {
        let d = half_width_diagnostic(&[1.0, 0.5, 0.25, 0.125]).unwrap();
        assert_eq!((d.order, d.ratio), (1.0, 0.5));
        let d = half_width_diagnostic(&[1.0, 0.1, 0.01]).unwrap();
        assert!((d.ratio - 0.1).abs() < 1e-15);
        assert!((d.order - 1.0).abs() < 1e-12);
        assert_eq!(
            half_width_diagnostic(&[1.0, 0.5]),
            Err(DiagnosticError::TooShort(2))
        );
        assert_eq!(
            half_width_diagnostic(&[1.0, 0.0, 0.0]),
            Err(DiagnosticError::Degenerate)
        );
        assert_eq!(
            half_width_diagnostic(&[1.0, 1.0, 1.0]),
            Err(DiagnosticError::Degenerate)
        );
    }

    #[test]
    fn tangency() {
        let f = parse("-(x-0.5)^2+1").unwrap();
        assert!(tangency_stop(&f, 1.0, 0.5, &dom(0.0, 1.0), 1e-6));
        // crossing level with slope 1 at an interior point
        assert!(!tangency_stop(&f, 0.75, 0.0, &dom(-1.0, 2.0), 1e-6));
        assert!(!tangency_stop(&f, 0.75, 0.0, &dom(0.0, 1.0), 1e-6));
        // zero slope but the level sits below the peak
        assert!(!tangency_stop(&f, 0.9, 0.5, &dom(0.0, 1.0), 1e-6));
        let g = parse("x").unwrap();
        assert!(!tangency_stop(&g, 1.0, 1.0, &dom(0.0, 1.0), 1e-6));
    }

    #[test]
    fn tangency_ends_run() {
        let f = parse("-(x-0.5)^2+1").unwrap();
        let c = SolverConfig {
            tangency_check: true,
            ..cfg(1e-12)
        };
        let r = maximize(&f, &dom(0.0, 1.0), Some(ValueBracket::new(0.75, 2.0)), &c).unwrap();
        assert!(r.exact_max_detected);
        assert!(!r.converged);
        let last = r.history.last().unwrap();
        assert!(last.verdict.is_reachable());
        assert!((last.c - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn max_iter_exhaustion() {
        let f = parse("sin(x)").unwrap();
        let c = SolverConfig {
            max_iter: 3,
            ..cfg(1e-12)
        };
        let r = maximize(&f, &dom(0.0, PI), Some(ValueBracket::new(0.0, 2.0)), &c).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert_eq!(r.error_bound, 0.125);
    }

    #[test]
    fn zero_width_bracket_needs_no_queries() {
        let f = parse("x").unwrap();
        let r = maximize(
            &f,
            &dom(0.0, 1.0),
            Some(ValueBracket::new(1.0, 1.0)),
            &cfg(1e-9),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn input_errors() {
        let f = parse("sin(x)").unwrap();
        let d = dom(0.0, PI);
        assert_eq!(
            maximize(&f, &d, Some(ValueBracket::new(2.0, 1.0)), &cfg(1e-6)),
            Err(SolveError::InvalidBracket { m: 2.0, u: 1.0 })
        );
        assert_eq!(
            maximize(&f, &d, Some(ValueBracket::new(1.5, 3.0)), &cfg(1e-6)),
            Err(SolveError::BracketNotReachable { m: 1.5 })
        );
        assert_eq!(
            maximize(&f, &d, None, &cfg(0.0)),
            Err(SolveError::InvalidTolerance(0.0))
        );
        let zero_iter = SolverConfig {
            max_iter: 0,
            ..cfg(1e-6)
        };
        assert_eq!(
            maximize(&f, &d, None, &zero_iter),
            Err(SolveError::InvalidMaxIter)
        );
    }

    #[test]
    fn abort_policy_surfaces_level() {
        let f = parse("x+0").unwrap();
        let mut c = cfg(1e-300);
        c.max_iter = 100;
        c.oracle.unknown_policy = UnknownPolicy::Abort;
        c.oracle.kind = oracle::OracleKind::Certified;
        let err = maximize(&f, &dom(0.0, 1.0), Some(ValueBracket::new(0.5, 2.0)), &c).unwrap_err();
        assert!(
            matches!(err, SolveError::OracleIndeterminate { level } if level > 0.5 && level < 2.0)
        );
    }
}
