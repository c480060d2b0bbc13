//! Oblivious stopping rules on timed points and their evaluation against the
//! prophet benchmark `E[max]`.

mod eval;
mod rules;

pub use eval::{evaluate_median_rule, evaluate_rule, evaluate_rules_mc, EvalMode, MedianRuleValues, ProphetInstance};
pub use rules::{
    iid_threshold, median_of_max_threshold, ode_rule, ode_rule_with_time, MedianThreshold, OdeRule, RegionRule, TimeCdf,
};

use crate::{Error, Result};

/// An element `(x, t)` of a continuous-time selection problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub x: f64,
    pub t: f64,
}

impl TimedPoint {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        if !(x >= 0.0 && x.is_finite()) || !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid("timed point", format!("({x}, {t})")));
        }
        Ok(TimedPoint { x, t })
    }
}

/// The eligible region `Q` of an oblivious stopping rule.
#[derive(Debug, Clone)]
pub enum StoppingRuleSpec {
    /// `(theta, inf) x [0, 1]` when strict, `[theta, inf) x [0, 1]` otherwise.
    Threshold { theta: f64, strict: bool },
    /// Accepts `(x, t)` iff `1 - F(x) < z(G(t)) / n`.
    Ode(OdeRule),
    /// A time-dependent threshold `theta(t)`, nonincreasing in `t`.
    Region(RegionRule),
}

impl StoppingRuleSpec {
    pub fn threshold(theta: f64, strict: bool) -> Self {
        StoppingRuleSpec::Threshold { theta, strict }
    }

    /// Accepts every point.
    pub fn accept_all() -> Self {
        StoppingRuleSpec::threshold(f64::NEG_INFINITY, false)
    }

    pub fn accepts(&self, x: f64, t: f64) -> bool {
        match self {
            StoppingRuleSpec::Threshold { theta, strict } => above(x, *theta, *strict),
            StoppingRuleSpec::Ode(r) => r.accepts(x, t),
            StoppingRuleSpec::Region(r) => above(x, r.theta_at(t), r.strict()),
        }
    }

    /// True when acceptance does not depend on `t`.
    pub fn is_time_independent(&self) -> bool {
        matches!(self, StoppingRuleSpec::Threshold { .. })
    }

    /// Short text identifying the rule in reports.
    pub fn descriptor(&self) -> String {
        match self {
            StoppingRuleSpec::Threshold { theta, strict } => {
                format!("threshold({}{theta:.9})", if *strict { ">" } else { ">=" })
            }
            StoppingRuleSpec::Ode(r) => format!("ode_rule(n={})", r.n()),
            StoppingRuleSpec::Region(r) => {
                format!(
                    "region({} steps,{})",
                    r.knots().len(),
                    if r.strict() { "strict" } else { "weak" }
                )
            }
        }
    }
}

pub(crate) fn above(x: f64, theta: f64, strict: bool) -> bool {
    if strict {
        x > theta
    } else {
        x >= theta
    }
}

/// Index of the earliest eligible point, ties in `t` going to the smaller
/// index; `None` is the null selection.
pub fn run_stopping_rule(rule: &StoppingRuleSpec, points: &[TimedPoint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if best.is_some_and(|b| p.t >= points[b].t) {
            continue;
        }
        if rule.accepts(p.x, p.t) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<TimedPoint> {
        v.iter().map(|&(x, t)| TimedPoint::new(x, t).unwrap()).collect()
    }

    #[test]
    fn earliest_eligible_wins() {
        let p = pts(&[(0.9, 0.2), (0.5, 0.1)]);
        assert_eq!(run_stopping_rule(&StoppingRuleSpec::threshold(0.4, true), &p), Some(1));
    }

    #[test]
    fn empty_intersection_is_null() {
        let p = pts(&[(0.3, 0.5)]);
        assert_eq!(run_stopping_rule(&StoppingRuleSpec::threshold(0.4, true), &p), None);
    }

    #[test]
    fn boundary_semantics() {
        let p = pts(&[(0.9, 0.7)]);
        assert_eq!(run_stopping_rule(&StoppingRuleSpec::threshold(0.9, false), &p), Some(0));
        assert_eq!(run_stopping_rule(&StoppingRuleSpec::threshold(0.9, true), &p), None);
    }

    #[test]
    fn equal_times_go_to_smaller_index() {
        let p = pts(&[(0.2, 0.5), (0.9, 0.5), (0.8, 0.5)]);
        assert_eq!(run_stopping_rule(&StoppingRuleSpec::threshold(0.5, true), &p), Some(1));
        assert_eq!(run_stopping_rule(&StoppingRuleSpec::accept_all(), &p), Some(0));
    }

    #[test]
    fn timed_point_validation() {
        assert!(TimedPoint::new(1.0, 1.5).is_err());
        assert!(TimedPoint::new(-1.0, 0.5).is_err());
    }
}
