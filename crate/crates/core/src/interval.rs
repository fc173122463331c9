//! Closed intervals and guaranteed range enclosures of expressions.
//!
//! Every primitive result is widened by one ulp in each direction, which
//! keeps enclosures sound without switching the FPU rounding mode. Points
//! where the expression is undefined are simply excluded from the range:
//! an enclosure bounds `{ f(x) : x ∈ X, f defined at x }`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use crate::expr::{BinaryOp, Bound, Comparator, Condition, Expr, UnaryOp};

/// Closed interval `[lo, hi]`. Endpoints may be infinite only for enclosures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// # Panics
    ///
    /// If either endpoint is NaN or `lo > hi`.
    pub fn new(lo: f64, hi: f64) -> Self {
        Self::checked(lo, hi).unwrap_or_else(|| panic!("invalid interval [{lo}, {hi}]"))
    }

    /// Like [`Interval::new`] but returns `None` for invalid endpoints.
    pub fn checked(lo: f64, hi: f64) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    pub fn whole() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_whole(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Interior test, endpoints excluded.
    pub fn contains_strictly(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::checked(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Midpoint, falling back to `lo + (hi - lo) / 2` when `lo + hi`
    /// overflows.
    pub fn midpoint(&self) -> f64 {
        let sum = self.lo + self.hi;
        if sum.is_finite() {
            sum / 2.0
        } else {
            self.lo + (self.hi - self.lo) / 2.0
        }
    }

    /// Splits at the midpoint into `(left, right)`.
    pub fn bisect(&self) -> (Interval, Interval) {
        let mid = self.midpoint();
        (
            Interval {
                lo: self.lo,
                hi: mid,
            },
            Interval {
                lo: mid,
                hi: self.hi,
            },
        )
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Free-function form of [`Interval::midpoint`].
pub fn midpoint(x: &Interval) -> f64 {
    x.midpoint()
}

/// Range enclosure produced by [`eval_interval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    /// `None` when the expression is defined nowhere on the input box.
    pub range: Option<Interval>,
    /// Set when part of the box lies outside the expression's domain, or when
    /// a singularity forced the whole-line enclosure.
    pub partial: bool,
}

impl Enclosure {
    fn exact(range: Interval) -> Self {
        Self {
            range: Some(range),
            partial: false,
        }
    }

    fn empty() -> Self {
        Self {
            range: None,
            partial: true,
        }
    }

    fn whole() -> Self {
        Self {
            range: Some(Interval::whole()),
            partial: true,
        }
    }

    /// Upper end of the range; `-inf` for an empty enclosure.
    pub fn upper(&self) -> f64 {
        self.range.map_or(f64::NEG_INFINITY, |r| r.hi)
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_none()
    }

    /// Set inclusion, with the empty enclosure contained in everything.
    pub fn is_subset_of(&self, other: &Enclosure) -> bool {
        match (self.range, other.range) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b.contains_interval(&a),
        }
    }

    fn join(self, other: Enclosure) -> Enclosure {
        let range = match (self.range, other.range) {
            (Some(a), Some(b)) => Some(a.hull(&b)),
            (a, b) => a.or(b),
        };
        Enclosure {
            range,
            partial: self.partial || other.partial,
        }
    }

    fn with_partial(mut self, partial: bool) -> Self {
        self.partial |= partial;
        self
    }
}

fn down(v: f64) -> f64 {
    v.next_down()
}

fn up(v: f64) -> f64 {
    v.next_up()
}

/// Outward-widened interval from raw endpoints. NaN endpoints become
/// infinite, which keeps the result sound.
fn widened(lo: f64, hi: f64) -> Interval {
    let lo = if lo.is_nan() {
        f64::NEG_INFINITY
    } else {
        down(lo)
    };
    let hi = if hi.is_nan() { f64::INFINITY } else { up(hi) };
    Interval { lo, hi }
}

fn span(candidates: [f64; 4]) -> Interval {
    if candidates.iter().any(|v| v.is_nan()) {
        return Interval::whole();
    }
    let lo = candidates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    widened(lo, hi)
}

/// Product with `0 * inf = 0`; an infinite endpoint stands for an unbounded
/// set of finite values, never for infinity itself.
fn mul_endpoint(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

fn add(a: Interval, b: Interval) -> Interval {
    widened(a.lo + b.lo, a.hi + b.hi)
}

fn sub(a: Interval, b: Interval) -> Interval {
    widened(a.lo - b.hi, a.hi - b.lo)
}

fn mul(a: Interval, b: Interval) -> Interval {
    span([
        mul_endpoint(a.lo, b.lo),
        mul_endpoint(a.lo, b.hi),
        mul_endpoint(a.hi, b.lo),
        mul_endpoint(a.hi, b.hi),
    ])
}

fn div(a: Interval, b: Interval) -> Enclosure {
    if b.contains(0.0) {
        if b.lo == 0.0 && b.hi == 0.0 {
            return Enclosure::empty();
        }
        return Enclosure::whole();
    }
    Enclosure::exact(span([a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi]))
}

fn clamp_unit(r: Interval) -> Interval {
    Interval {
        lo: r.lo.max(-1.0),
        hi: r.hi.min(1.0),
    }
}

/// Whether `phase + k * period` lies in `[lo, hi]` for some integer `k`,
/// with a small relative slack so that rounding never hides a critical point.
fn hits_lattice(lo: f64, hi: f64, phase: f64, period: f64) -> bool {
    let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    let k = ((lo - slack - phase) / period).ceil();
    phase + k * period <= hi + slack
}

fn sin_interval(x: Interval) -> Interval {
    if !x.is_finite() || x.width() >= TAU {
        return Interval::new(-1.0, 1.0);
    }
    let (a, b) = (x.lo.sin(), x.hi.sin());
    let mut r = widened(a.min(b), a.max(b));
    if hits_lattice(x.lo, x.hi, FRAC_PI_2, TAU) {
        r.hi = 1.0;
    }
    if hits_lattice(x.lo, x.hi, -FRAC_PI_2, TAU) {
        r.lo = -1.0;
    }
    clamp_unit(r)
}

fn cos_interval(x: Interval) -> Interval {
    if !x.is_finite() || x.width() >= TAU {
        return Interval::new(-1.0, 1.0);
    }
    let (a, b) = (x.lo.cos(), x.hi.cos());
    let mut r = widened(a.min(b), a.max(b));
    if hits_lattice(x.lo, x.hi, 0.0, TAU) {
        r.hi = 1.0;
    }
    if hits_lattice(x.lo, x.hi, PI, TAU) {
        r.lo = -1.0;
    }
    clamp_unit(r)
}

fn tan_interval(x: Interval) -> Enclosure {
    if !x.is_finite() || x.width() >= PI || hits_lattice(x.lo, x.hi, FRAC_PI_2, PI) {
        return Enclosure::whole();
    }
    Enclosure::exact(widened(x.lo.tan(), x.hi.tan()))
}

fn exp_interval(x: Interval) -> Interval {
    let r = widened(x.lo.exp(), x.hi.exp());
    Interval {
        lo: r.lo.max(0.0),
        hi: r.hi,
    }
}

fn log_interval(x: Interval) -> Enclosure {
    if x.hi <= 0.0 {
        return Enclosure::empty();
    }
    if x.lo <= 0.0 {
        return Enclosure {
            range: Some(Interval {
                lo: f64::NEG_INFINITY,
                hi: up(x.hi.ln()),
            }),
            partial: true,
        };
    }
    Enclosure::exact(widened(x.lo.ln(), x.hi.ln()))
}

fn sqrt_interval(x: Interval) -> Enclosure {
    if x.hi < 0.0 {
        return Enclosure::empty();
    }
    let partial = x.lo < 0.0;
    let lo = if partial {
        0.0
    } else {
        down(x.lo.sqrt()).max(0.0)
    };
    Enclosure {
        range: Some(Interval {
            lo,
            hi: up(x.hi.sqrt()),
        }),
        partial,
    }
}

fn abs_interval(x: Interval) -> Interval {
    if x.lo >= 0.0 {
        x
    } else if x.hi <= 0.0 {
        Interval {
            lo: -x.hi,
            hi: -x.lo,
        }
    } else {
        Interval {
            lo: 0.0,
            hi: (-x.lo).max(x.hi),
        }
    }
}

fn is_even_integer(p: f64) -> bool {
    (p / 2.0).fract() == 0.0
}

fn pow_interval(base: Interval, exponent: Interval) -> Enclosure {
    if exponent.lo != exponent.hi {
        if base.lo > 0.0 {
            // x^y = exp(y ln x) on a strictly positive base
            let ln = log_interval(base)
                .range
                .expect("positive base has a logarithm");
            return Enclosure::exact(exp_interval(mul(exponent, ln)));
        }
        return Enclosure::whole();
    }
    let p = exponent.lo;
    if p == 0.0 {
        return Enclosure::exact(Interval::point(1.0));
    }
    if p.fract() == 0.0 {
        if p < 0.0 && base.contains(0.0) {
            if base.lo == 0.0 && base.hi == 0.0 {
                return Enclosure::empty();
            }
            return Enclosure::whole();
        }
        let (a, b) = (base.lo.powf(p), base.hi.powf(p));
        let mut r = widened(a.min(b), a.max(b));
        if is_even_integer(p) {
            r.lo = if base.contains(0.0) {
                0.0
            } else {
                r.lo.max(0.0)
            };
        }
        return Enclosure::exact(r);
    }
    // non-integer exponent: only the non-negative part of the base counts
    if base.hi < 0.0 || (p < 0.0 && base.hi <= 0.0) {
        return Enclosure::empty();
    }
    let partial = base.lo < 0.0;
    let lo = base.lo.max(0.0);
    if p > 0.0 {
        let r = widened(lo.powf(p), base.hi.powf(p));
        Enclosure {
            range: Some(Interval {
                lo: r.lo.max(0.0),
                hi: r.hi,
            }),
            partial,
        }
    } else if lo == 0.0 {
        Enclosure {
            range: Some(Interval {
                lo: down(base.hi.powf(p)).max(0.0),
                hi: f64::INFINITY,
            }),
            partial: true,
        }
    } else {
        Enclosure {
            range: Some(widened(base.hi.powf(p), lo.powf(p))),
            partial,
        }
    }
}

/// Set of reals `x` selected by a bound conjunction, with explicit open or
/// closed ends. Used to split a box exactly along piecewise boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl Segment {
    fn closed(x: Interval) -> Self {
        Self {
            lo: x.lo,
            lo_closed: true,
            hi: x.hi,
            hi_closed: true,
        }
    }

    fn everything() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            lo_closed: false,
            hi: f64::INFINITY,
            hi_closed: false,
        }
    }

    fn of_condition(cond: &Condition) -> Self {
        cond.bounds
            .iter()
            .fold(Self::everything(), |s, b| s.intersect(&Self::of_bound(b)))
    }

    fn of_bound(b: &Bound) -> Self {
        let mut s = Self::everything();
        match b.cmp {
            Comparator::Lt | Comparator::Le => {
                s.hi = b.value;
                s.hi_closed = b.cmp == Comparator::Le;
            }
            Comparator::Gt | Comparator::Ge => {
                s.lo = b.value;
                s.lo_closed = b.cmp == Comparator::Ge;
            }
        }
        s
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    fn intersect(&self, other: &Segment) -> Segment {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Segment {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }

    /// `self \ cut`, as at most two pieces.
    fn subtract(&self, cut: &Segment) -> Vec<Segment> {
        if cut.is_empty() || self.intersect(cut).is_empty() {
            return vec![*self];
        }
        let left = Segment {
            hi: cut.lo,
            hi_closed: !cut.lo_closed,
            ..Self::everything()
        };
        let right = Segment {
            lo: cut.hi,
            lo_closed: !cut.hi_closed,
            ..Self::everything()
        };
        [self.intersect(&left), self.intersect(&right)]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect()
    }

    fn closure(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }
}

fn piecewise_interval(branches: &[crate::expr::Branch], default: &Expr, x: Interval) -> Enclosure {
    let mut acc = Enclosure {
        range: None,
        partial: false,
    };
    let mut remaining = vec![Segment::closed(x)];
    for branch in branches {
        let cond = Segment::of_condition(&branch.when);
        for piece in &remaining {
            let selected = piece.intersect(&cond);
            if !selected.is_empty() {
                acc = acc.join(eval_interval(&branch.then, selected.closure()));
            }
        }
        remaining = remaining.iter().flat_map(|s| s.subtract(&cond)).collect();
    }
    for piece in &remaining {
        acc = acc.join(eval_interval(default, piece.closure()));
    }
    acc
}

/// Encloses the range of `f` over `x`.
pub fn eval_interval(f: &Expr, x: Interval) -> Enclosure {
    match f {
        Expr::Constant(c) => Enclosure::exact(Interval::point(*c)),
        Expr::Variable => Enclosure::exact(x),
        Expr::Unary(op, child) => {
            let inner = eval_interval(child, x);
            let Some(r) = inner.range else {
                return inner;
            };
            let out = match op {
                UnaryOp::Neg => Enclosure::exact(Interval {
                    lo: -r.hi,
                    hi: -r.lo,
                }),
                UnaryOp::Abs => Enclosure::exact(abs_interval(r)),
                UnaryOp::Sin => Enclosure::exact(sin_interval(r)),
                UnaryOp::Cos => Enclosure::exact(cos_interval(r)),
                UnaryOp::Tan => tan_interval(r),
                UnaryOp::Exp => Enclosure::exact(exp_interval(r)),
                UnaryOp::Log => log_interval(r),
                UnaryOp::Sqrt => sqrt_interval(r),
            };
            out.with_partial(inner.partial)
        }
        Expr::Binary(op, lhs, rhs) => {
            let left = eval_interval(lhs, x);
            let right = eval_interval(rhs, x);
            let partial = left.partial || right.partial;
            let (Some(a), Some(b)) = (left.range, right.range) else {
                return Enclosure::empty();
            };
            let out = match op {
                BinaryOp::Add => Enclosure::exact(add(a, b)),
                BinaryOp::Sub => Enclosure::exact(sub(a, b)),
                BinaryOp::Mul => Enclosure::exact(mul(a, b)),
                BinaryOp::Div => div(a, b),
                BinaryOp::Pow => pow_interval(a, b),
            };
            out.with_partial(partial)
        }
        Expr::Piecewise { branches, default } => piecewise_interval(branches, default, x),
    }
}
