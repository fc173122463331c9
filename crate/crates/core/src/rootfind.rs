//! Classical bisection on the x-axis.

use thiserror::Error;

use crate::expr::{EvalError, Expr};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootStep {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootResult {
    /// Midpoint of the final bracket, or an exact zero if one was hit.
    pub root: f64,
    pub iterations: usize,
    /// Value of the target function at `root`.
    pub residual: f64,
    /// `2^-(n+1) (b0 - a0)`.
    pub bound: f64,
    /// Bracket after each halving, starting with the initial one.
    pub steps: Vec<RootStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("need a < b, got a = {a}, b = {b}")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no sign change: f({a}) = {fa}, f({b}) = {fb}")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("level {level} is not straddled: f({p}) = {fp}, f({q}) = {fq}")]
    NoStraddle {
        level: f64,
        p: f64,
        q: f64,
        fp: f64,
        fq: f64,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub const DEFAULT_MAX_ITER: usize = 200;

/// Finds a zero of `f` in `[a, b]` given `f(a)` and `f(b)` of opposite sign.
///
/// Halves the bracket until its half-width is at most `tol` or `max_iter`
/// halvings were made. An exact zero at an endpoint or midpoint is returned
/// at once.
pub fn bisect_root(
    f: &Expr,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RootResult, RootError> {
    bisect_with(|x| f.eval(x), a, b, tol, max_iter)
}

/// Finds `x` with `f(x) = c` between two points whose values straddle `c`.
/// The points may be given in either order.
pub fn solve_level(
    f: &Expr,
    c: f64,
    lo_point: f64,
    hi_point: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RootResult, RootError> {
    let g = |x: f64| f.eval(x).map(|v| v - c);
    let (gp, gq) = (g(lo_point)?, g(hi_point)?);
    if !((gp <= 0.0 && gq >= 0.0) || (gq <= 0.0 && gp >= 0.0)) {
        return Err(RootError::NoStraddle {
            level: c,
            p: lo_point,
            q: hi_point,
            fp: gp + c,
            fq: gq + c,
        });
    }
    let (a, b) = if lo_point <= hi_point {
        (lo_point, hi_point)
    } else {
        (hi_point, lo_point)
    };
    bisect_with(g, a, b, tol, max_iter)
}

fn bisect_with<G>(
    g: G,
    a0: f64,
    b0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RootResult, RootError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    if !(a0 < b0) || !a0.is_finite() || !b0.is_finite() {
        return Err(RootError::InvalidInterval { a: a0, b: b0 });
    }
    if !(tol > 0.0) {
        return Err(RootError::InvalidTolerance(tol));
    }
    let (fa0, fb0) = (g(a0)?, g(b0)?);
    let width0 = b0 - a0;
    let done = |root: f64, residual: f64, iterations: usize, steps: Vec<RootStep>| RootResult {
        root,
        iterations,
        residual,
        bound: width0 * 0.5f64.powi(iterations as i32 + 1),
        steps,
    };
    let mut steps = vec![RootStep { a: a0, b: b0 }];
    if fa0 == 0.0 {
        return Ok(done(a0, fa0, 0, steps));
    }
    if fb0 == 0.0 {
        return Ok(done(b0, fb0, 0, steps));
    }
    if fa0.is_sign_negative() == fb0.is_sign_negative() {
        return Err(RootError::NoSignChange {
            a: a0,
            b: b0,
            fa: fa0,
            fb: fb0,
        });
    }

    let (mut a, mut b, mut fa) = (a0, b0, fa0);
    let mut n = 0;
    while (b - a) / 2.0 > tol && n < max_iter {
        let c = a + (b - a) / 2.0;
        if c <= a || c >= b {
            break;
        }
        let fc = g(c)?;
        n += 1;
        if fc == 0.0 {
            steps.push(RootStep { a: c, b: c });
            return Ok(done(c, fc, n, steps));
        }
        // compare signs rather than multiplying, which can underflow
        if fc.is_sign_negative() == fa.is_sign_negative() {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
        steps.push(RootStep { a, b });
    }
    let root = a + (b - a) / 2.0;
    Ok(done(root, g(root)?, n, steps))
}
