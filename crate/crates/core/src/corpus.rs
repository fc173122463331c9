//! Fixed set of test functions used by the benchmark command and harness.

use std::f64::consts::PI;

use crate::expr::Expr;
use crate::interval::Interval;
use crate::parse;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
    pub domain: Interval,
    /// Known maximum value on the domain.
    pub max: f64,
}

impl CorpusEntry {
    pub fn expr(&self) -> Expr {
        parse(self.source).expect("corpus expressions parse")
    }
}

/// Discontinuous, boundary maximum, interior maximum, transcendental and
/// non-differentiable cases.
pub fn corpus() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry {
            name: "piecewise",
            source: "piecewise(x<=-1: x+5; x<0: 4; else: 3)",
            domain: Interval::new(-4.0, 1.0),
            max: 4.0,
        },
        CorpusEntry {
            name: "exp-linear",
            source: "exp(x)-4*x",
            domain: Interval::new(0.0, 1.0),
            max: 1.0,
        },
        CorpusEntry {
            name: "parabola",
            source: "-(x-0.5)^2+1",
            domain: Interval::new(0.0, 1.0),
            max: 1.0,
        },
        CorpusEntry {
            name: "sine",
            source: "sin(x)",
            domain: Interval::new(0.0, PI),
            max: 1.0,
        },
        CorpusEntry {
            name: "abs-kink",
            source: "abs(x-0.3)",
            domain: Interval::new(0.0, 1.0),
            max: 0.7,
        },
    ]
}
