//! Global maximum and minimum of univariate functions by bisection on the
//! value axis.
//!
//! ```
//! use valmax_core::{maximize, parse, Interval, SolverConfig};
//!
//! let f = parse("-(x-0.5)^2+1").unwrap();
//! let report = maximize(&f, &Interval::new(0.0, 1.0), None, &SolverConfig::default()).unwrap();
//! assert!((report.estimate - 1.0).abs() <= report.error_bound);
//! ```

pub mod corpus;
pub mod expr;
pub mod extremum;
pub mod interval;
pub mod oracle;
pub mod parser;
pub mod rootfind;

pub use expr::{
    BinaryOp, Bound, Branch, Comparator, Condition, DomainErrorKind, EvalError, Expr, UnaryOp,
};
pub use extremum::{
    convergence_diagnostic, error_bound, half_width_diagnostic, iterations_needed, maximize,
    minimize, tangency_stop, ConvergenceDiagnostic, DiagnosticError, ExtremumReport,
    IterationRecord, SolveError, SolverConfig, ValueBracket,
};
pub use interval::{eval_interval, midpoint, Enclosure, Interval};
pub use oracle::{
    decide_reachable, decide_reachable_certified, decide_reachable_grid, initial_bracket,
    witness_slack, OracleConfig, OracleError, OracleKind, OracleVerdict, UnknownPolicy,
    VerdictKind,
};
pub use parser::{parse, ParseError, ParseErrorKind};
pub use rootfind::{bisect_root, solve_level, RootError, RootResult, RootStep};
