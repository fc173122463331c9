//! Univariate expression trees and their pointwise evaluation.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    /// Name used for function-call syntax. `Neg` has no call form.
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    /// Tests `x <cmp> bound`.
    pub fn holds(self, x: f64, bound: f64) -> bool {
        match self {
            Comparator::Lt => x < bound,
            Comparator::Le => x <= bound,
            Comparator::Gt => x > bound,
            Comparator::Ge => x >= bound,
        }
    }
}

/// One bound `x <cmp> value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub cmp: Comparator,
    pub value: f64,
}

/// Conjunction of bounds on `x`. An empty condition always holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Condition {
    pub bounds: Vec<Bound>,
}

impl Condition {
    pub fn always() -> Self {
        Self::default()
    }

    pub fn new(bounds: Vec<Bound>) -> Self {
        Self { bounds }
    }

    pub fn holds(&self, x: f64) -> bool {
        self.bounds.iter().all(|b| b.cmp.holds(x, b.value))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub when: Condition,
    pub then: Expr,
}

/// Abstract syntax tree of a function of the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Variable,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// Branches are tried in order; `default` applies when none matches.
    Piecewise {
        branches: Vec<Branch>,
        default: Box<Expr>,
    },
}

/// Why a pointwise evaluation has no real value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    /// Negative base raised to a non-integer power.
    ComplexPower,
    /// Overflow or an indeterminate form such as `inf - inf`.
    NonFinite,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::LogNonPositive => "log of a non-positive number",
            DomainErrorKind::SqrtNegative => "square root of a negative number",
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::ComplexPower => "negative base with non-integer exponent",
            DomainErrorKind::NonFinite => "non-finite intermediate value",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{kind} when evaluating at x = {x}")]
pub struct EvalError {
    pub kind: DomainErrorKind,
    pub x: f64,
}

pub type EvalResult = Result<f64, EvalError>;

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Constant(value)
    }

    pub fn x() -> Self {
        Expr::Variable
    }

    pub fn unary(op: UnaryOp, child: Expr) -> Self {
        Expr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn piecewise(branches: Vec<Branch>, default: Expr) -> Self {
        Expr::Piecewise {
            branches,
            default: Box::new(default),
        }
    }

    /// Returns `-f`, built structurally so that `g(x) == -f(x)` bit for bit.
    pub fn negate(&self) -> Expr {
        Expr::unary(UnaryOp::Neg, self.clone())
    }

    /// Evaluates the expression at `x`. Any non-finite intermediate value is
    /// reported as an [`EvalError`] instead of being propagated.
    pub fn eval(&self, x: f64) -> EvalResult {
        let err = |kind| EvalError { kind, x };
        let value = match self {
            Expr::Constant(c) => *c,
            Expr::Variable => x,
            Expr::Unary(op, child) => {
                let v = child.eval(x)?;
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Tan => v.tan(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Log if v <= 0.0 => return Err(err(DomainErrorKind::LogNonPositive)),
                    UnaryOp::Log => v.ln(),
                    UnaryOp::Sqrt if v < 0.0 => return Err(err(DomainErrorKind::SqrtNegative)),
                    UnaryOp::Sqrt => v.sqrt(),
                    UnaryOp::Abs => v.abs(),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(x)?;
                let b = rhs.eval(x)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div if b == 0.0 => return Err(err(DomainErrorKind::DivisionByZero)),
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(err(DomainErrorKind::ComplexPower));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(err(DomainErrorKind::DivisionByZero));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Piecewise { branches, default } => {
                let chosen = branches
                    .iter()
                    .find(|b| b.when.holds(x))
                    .map_or(default.as_ref(), |b| &b.then);
                chosen.eval(x)?
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(err(DomainErrorKind::NonFinite))
        }
    }

    /// Index of the branch selected at `x`, or `None` for the default branch.
    /// Returns `None` as well for non-piecewise expressions.
    pub fn selected_branch(&self, x: f64) -> Option<usize> {
        match self {
            Expr::Piecewise { branches, .. } => branches.iter().position(|b| b.when.holds(x)),
            _ => None,
        }
    }
}

/// Prints in a fully parenthesized form accepted by [`crate::parse`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Constant(c) if c.is_sign_negative() => write!(f, "(-{})", -c),
            Expr::Constant(c) => write!(f, "{c}"),
            Expr::Variable => f.write_str("x"),
            Expr::Unary(UnaryOp::Neg, child) => write!(f, "(-{child})"),
            Expr::Unary(op, child) => write!(f, "{}({child})", op.name()),
            Expr::Binary(op, lhs, rhs) => write!(f, "({lhs}{}{rhs})", op.symbol()),
            Expr::Piecewise { branches, default } => {
                f.write_str("piecewise(")?;
                for branch in branches {
                    write!(f, "{}: {}; ", branch.when, branch.then)?;
                }
                write!(f, "else: {default})")
            }
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.bounds.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "x{}{}", b.cmp.symbol(), b.value)?;
        }
        Ok(())
    }
}
