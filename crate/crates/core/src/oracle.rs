//! Reachability oracles: does `f(x) >= c` hold somewhere on the domain?
//!
//! For any level between an attained value and the maximum this is the same
//! question as "does `f(x) = c` have a solution", and a single point
//! evaluation at or above `c` settles it. A "no" answer can be sampled
//! (heuristic) or proven by interval branch and bound (certified).

use thiserror::Error;

use crate::expr::Expr;
use crate::extremum::ValueBracket;
use crate::interval::{eval_interval, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Reachable,
    Unreachable,
    Unknown,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Reachable => "reachable",
            VerdictKind::Unreachable => "unreachable",
            VerdictKind::Unknown => "unknown",
        }
    }
}

/// Answer to "is level `c` reached on the domain?".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleVerdict {
    pub kind: VerdictKind,
    /// A point with `f(witness) >= c`; present iff `kind` is `Reachable`.
    pub witness: Option<f64>,
    pub certified: bool,
}

impl OracleVerdict {
    pub fn reachable(witness: f64) -> Self {
        Self {
            kind: VerdictKind::Reachable,
            witness: Some(witness),
            certified: true,
        }
    }

    pub fn unreachable(certified: bool) -> Self {
        Self {
            kind: VerdictKind::Unreachable,
            witness: None,
            certified,
        }
    }

    pub fn unknown() -> Self {
        Self {
            kind: VerdictKind::Unknown,
            witness: None,
            certified: false,
        }
    }

    pub fn is_reachable(&self) -> bool {
        self.kind == VerdictKind::Reachable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum UnknownPolicy {
    /// Shrink the upper bound, as if the level had no solution.
    #[default]
    TreatAsUnreachable,
    /// Stop the solver with an error.
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OracleKind {
    /// Sampling only.
    Grid,
    /// Interval branch and bound only.
    Certified,
    /// Branch and bound, consulting the grid when it cannot decide.
    #[default]
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub kind: OracleKind,
    /// Sample count of the grid, endpoints included. At least 2.
    pub grid_points: usize,
    pub max_depth: u32,
    /// Smallest box width, relative to the domain width.
    pub min_box_rel_width: f64,
    pub unknown_policy: UnknownPolicy,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            kind: OracleKind::Hybrid,
            grid_points: 1025,
            max_depth: 40,
            min_box_rel_width: 1e-12,
            unknown_policy: UnknownPolicy::TreatAsUnreachable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("domain must satisfy a < b, got [{lo}, {hi}]")]
    EmptyDomain { lo: f64, hi: f64 },
    #[error("grid_points must be at least 2, got {0}")]
    TooFewGridPoints(usize),
    #[error("f is undefined at every sample point of the domain")]
    NothingEvaluable,
    #[error(
        "no finite upper bound for f on the domain (enclosure is {0}); pass an explicit bracket"
    )]
    UnboundedEnclosure(String),
}

/// Tolerance on re-evaluating a witness: four ulps of the level.
pub fn witness_slack(c: f64) -> f64 {
    let a = c.abs();
    4.0 * (a.next_up() - a)
}

fn check_inputs(domain: &Interval, cfg: &OracleConfig) -> Result<(), OracleError> {
    if !(domain.lo() < domain.hi()) || !domain.is_finite() {
        return Err(OracleError::EmptyDomain {
            lo: domain.lo(),
            hi: domain.hi(),
        });
    }
    if cfg.grid_points < 2 {
        return Err(OracleError::TooFewGridPoints(cfg.grid_points));
    }
    Ok(())
}

/// `n` equally spaced points from `lo` to `hi`, both endpoints exact.
pub fn grid(domain: &Interval, n: usize) -> impl Iterator<Item = f64> + '_ {
    let last = n.saturating_sub(1).max(1);
    let step = domain.width() / last as f64;
    (0..n).map(move |i| {
        if i == last {
            domain.hi()
        } else {
            domain.lo() + step * i as f64
        }
    })
}

/// Samples the grid and returns the leftmost sample with `f >= c`.
///
/// A hit is certified; a miss is only a heuristic `Unreachable`. If no
/// sample evaluates, the verdict is `Unknown`.
pub fn decide_reachable_grid(
    f: &Expr,
    domain: &Interval,
    c: f64,
    cfg: &OracleConfig,
) -> Result<OracleVerdict, OracleError> {
    check_inputs(domain, cfg)?;
    let mut any_finite = false;
    for x in grid(domain, cfg.grid_points) {
        if let Ok(v) = f.eval(x) {
            any_finite = true;
            if v >= c {
                return Ok(OracleVerdict::reachable(x));
            }
        }
    }
    Ok(if any_finite {
        OracleVerdict::unreachable(false)
    } else {
        OracleVerdict::unknown()
    })
}

/// Interval branch and bound over the domain, left box first.
///
/// Boxes whose enclosure lies below `c` are discarded. The first box (in
/// left-first depth-first order) whose midpoint reaches `c` supplies the
/// witness. If every box is discarded the level is certified unreachable;
/// if some box hit the depth or width limit, the verdict is `Unknown`.
pub fn decide_reachable_certified(
    f: &Expr,
    domain: &Interval,
    c: f64,
    cfg: &OracleConfig,
) -> Result<OracleVerdict, OracleError> {
    check_inputs(domain, cfg)?;
    let min_width = cfg.min_box_rel_width * domain.width();
    let mut stack = vec![(*domain, 0u32)];
    let mut exhausted = false;
    while let Some((bx, depth)) = stack.pop() {
        // an enclosure bounds every defined value, so undefined points
        // cannot hide a witness
        if eval_interval(f, bx).upper() < c {
            continue;
        }
        let mid = bx.midpoint();
        if matches!(f.eval(mid), Ok(v) if v >= c) {
            return Ok(OracleVerdict::reachable(mid));
        }
        if depth >= cfg.max_depth || bx.width() <= min_width || mid <= bx.lo() || mid >= bx.hi() {
            exhausted = true;
            continue;
        }
        let (left, right) = bx.bisect();
        stack.push((right, depth + 1));
        stack.push((left, depth + 1));
    }
    Ok(if exhausted {
        OracleVerdict::unknown()
    } else {
        OracleVerdict::unreachable(true)
    })
}

/// Dispatches on `cfg.kind`. The hybrid oracle asks the grid only when
/// branch and bound returns `Unknown`: a grid hit is still a certified
/// `Reachable`, and a grid miss counts as `Unreachable` (uncertified) only
/// under [`UnknownPolicy::TreatAsUnreachable`].
pub fn decide_reachable(
    f: &Expr,
    domain: &Interval,
    c: f64,
    cfg: &OracleConfig,
) -> Result<OracleVerdict, OracleError> {
    match cfg.kind {
        OracleKind::Grid => decide_reachable_grid(f, domain, c, cfg),
        OracleKind::Certified => decide_reachable_certified(f, domain, c, cfg),
        OracleKind::Hybrid => {
            let verdict = decide_reachable_certified(f, domain, c, cfg)?;
            if verdict.kind != VerdictKind::Unknown {
                return Ok(verdict);
            }
            let sampled = decide_reachable_grid(f, domain, c, cfg)?;
            Ok(match (sampled.kind, cfg.unknown_policy) {
                (VerdictKind::Reachable, _) => sampled,
                (VerdictKind::Unreachable, UnknownPolicy::TreatAsUnreachable) => sampled,
                _ => OracleVerdict::unknown(),
            })
        }
    }
}

/// Starting value bracket: the best grid sample below, the interval
/// enclosure's upper end above.
pub fn initial_bracket(
    f: &Expr,
    domain: &Interval,
    cfg: &OracleConfig,
) -> Result<ValueBracket, OracleError> {
    check_inputs(domain, cfg)?;
    let m0 = grid(domain, cfg.grid_points)
        .filter_map(|x| f.eval(x).ok())
        .fold(None, |best: Option<f64>, v| {
            Some(best.map_or(v, |b| b.max(v)))
        })
        .ok_or(OracleError::NothingEvaluable)?;
    let enclosure = eval_interval(f, *domain);
    let u0 = enclosure.upper();
    if !u0.is_finite() {
        let shown = enclosure
            .range
            .map_or_else(|| "empty".to_owned(), |r| r.to_string());
        return Err(OracleError::UnboundedEnclosure(shown));
    }
    // soundness gives m0 <= u0; max() only guards against libm noise
    Ok(ValueBracket::new(m0, u0.max(m0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;
    use std::f64::consts::PI;

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    fn dom(a: f64, b: f64) -> Interval {
        Interval::new(a, b)
    }

    const SECTION4: &str = "piecewise(x<=-1: x+5; x<0: 4; else: 3)";

    #[test]
    fn grid_hits_leftmost() {
        let f = parse("sin(x)").unwrap();
        let v = decide_reachable_grid(&f, &dom(0.0, PI), 0.5, &cfg()).unwrap();
        assert_eq!(v.kind, VerdictKind::Reachable);
        assert!(v.certified);
        let w = v.witness.unwrap();
        let step = PI / 1024.0;
        assert!(w.sin() >= 0.5);
        assert!((w - step).sin() < 0.5, "not leftmost: {w}");

        let g = parse(SECTION4).unwrap();
        let v = decide_reachable_grid(&g, &dom(-4.0, 1.0), 3.5, &cfg()).unwrap();
        assert!(v.is_reachable());
        assert!(v.witness.unwrap() <= -1.5 + 5.0 / 1024.0);
        assert!(g.eval(v.witness.unwrap()).unwrap() >= 3.5);
    }

    #[test]
    fn grid_miss_is_heuristic() {
        let f = parse("sin(x)").unwrap();
        let v = decide_reachable_grid(&f, &dom(0.0, PI), 1.5, &cfg()).unwrap();
        assert_eq!(v, OracleVerdict::unreachable(false));
    }

    #[test]
    fn grid_all_undefined_is_unknown() {
        let f = parse("log(x)").unwrap();
        let v = decide_reachable_grid(&f, &dom(-2.0, -1.0), 0.0, &cfg()).unwrap();
        assert_eq!(v, OracleVerdict::unknown());
    }

    #[test]
    fn certified_unreachable_above_sine() {
        let f = parse("sin(x)").unwrap();
        let v = decide_reachable_certified(&f, &dom(0.0, PI), 1.5, &cfg()).unwrap();
        assert_eq!(v, OracleVerdict::unreachable(true));
    }

    #[test]
    fn certified_reachable_on_parabola() {
        let f = parse("-(x-0.5)^2+1").unwrap();
        let v = decide_reachable_certified(&f, &dom(0.0, 1.0), 0.5, &cfg()).unwrap();
        assert!(v.is_reachable() && v.certified);
        assert!(f.eval(v.witness.unwrap()).unwrap() >= 0.5);
    }

    #[test]
    fn certified_just_above_exact_max() {
        // the box containing the vertex encloses [.., 1 + 1ulp], below 1 + 1e-15
        let f = parse("-(x-0.5)^2+1").unwrap();
        let v = decide_reachable_certified(&f, &dom(0.0, 1.0), 1.0 + 1e-15, &cfg()).unwrap();
        assert_eq!(v, OracleVerdict::unreachable(true));
    }

    #[test]
    fn certified_depth_limit_gives_unknown() {
        // level equal to a boundary maximum: midpoints never reach it
        let f = parse("x").unwrap();
        let v = decide_reachable_certified(&f, &dom(0.0, 1.0), 1.0, &cfg()).unwrap();
        assert_eq!(v.kind, VerdictKind::Unknown);
        assert!(!v.certified);
        // the hybrid oracle falls back to the grid, which samples x = 1
        let v = decide_reachable(&f, &dom(0.0, 1.0), 1.0, &cfg()).unwrap();
        assert_eq!(v, OracleVerdict::reachable(1.0));
    }

    #[test]
    fn hybrid_respects_abort_policy() {
        // x + 0 widens the enclosure to 1 + 1ulp, so the box touching x = 1
        // can never be discarded at that level, while no sample reaches it
        let f = parse("x+0").unwrap();
        let above = 1.0f64.next_up();
        let abort = OracleConfig {
            unknown_policy: UnknownPolicy::Abort,
            ..cfg()
        };
        let v = decide_reachable(&f, &dom(0.0, 1.0), above, &abort).unwrap();
        assert_eq!(v.kind, VerdictKind::Unknown);
        let v = decide_reachable(&f, &dom(0.0, 1.0), above, &cfg()).unwrap();
        assert_eq!(v, OracleVerdict::unreachable(false));
    }

    #[test]
    fn certified_skips_undefined_region() {
        let f = parse("sqrt(x)").unwrap();
        let v = decide_reachable_certified(&f, &dom(-1.0, 1.0), 0.9, &cfg()).unwrap();
        assert!(v.is_reachable());
        let v = decide_reachable_certified(&f, &dom(-1.0, 1.0), 1.5, &cfg()).unwrap();
        assert_eq!(v, OracleVerdict::unreachable(true));
    }

    #[test]
    fn brackets() {
        let f = parse("x+5").unwrap();
        let b = initial_bracket(&f, &dom(-4.0, -1.0), &cfg()).unwrap();
        assert_eq!(b.m, 4.0);
        assert!(b.u >= 4.0 && b.u <= 4.0 + 4.0 * f64::EPSILON * 4.0);

        let f = parse("sin(x)").unwrap();
        let b = initial_bracket(&f, &dom(0.0, PI), &cfg()).unwrap();
        assert!(b.m <= 1.0 && b.u >= 1.0);

        // frozen: the grid contains 0.5 exactly and the enclosure overshoots 1 by one ulp
        let f = parse("-(x-0.5)^2+1").unwrap();
        let b = initial_bracket(&f, &dom(0.0, 1.0), &cfg()).unwrap();
        assert_eq!(b.m, 1.0);
        assert_eq!(b.u, 1.0f64.next_up());
    }

    #[test]
    fn bracket_errors() {
        let f = parse("log(x)").unwrap();
        assert_eq!(
            initial_bracket(&f, &dom(-2.0, -1.0), &cfg()),
            Err(OracleError::NothingEvaluable)
        );
        let f = parse("1/x").unwrap();
        assert!(matches!(
            initial_bracket(&f, &dom(-1.0, 1.0), &cfg()),
            Err(OracleError::UnboundedEnclosure(_))
        ));
        let f = parse("x").unwrap();
        assert!(matches!(
            decide_reachable_grid(&f, &Interval::point(1.0), 0.0, &cfg()),
            Err(OracleError::EmptyDomain { .. })
        ));
        let bad = OracleConfig {
            grid_points: 1,
            ..cfg()
        };
        assert_eq!(
            decide_reachable_grid(&f, &dom(0.0, 1.0), 0.0, &bad),
            Err(OracleError::TooFewGridPoints(1))
        );
    }

    #[test]
    fn grid_endpoints_exact() {
        let d = dom(-4.0, 1.0);
        let pts: Vec<f64> = grid(&d, 7).collect();
        assert_eq!(pts.len(), 7);
        assert_eq!(pts[0], -4.0);
        assert_eq!(pts[6], 1.0);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn slack_is_four_ulps() {
        assert_eq!(witness_slack(1.0), 4.0 * f64::EPSILON);
        assert_eq!(witness_slack(-1.0), 4.0 * f64::EPSILON);
    }
}
