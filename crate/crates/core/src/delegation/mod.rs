//! Single-proposal mechanisms and their link to oblivious stopping rules.
//!
//! A solution `(x, y)` is mapped to the timed point `(x, e^-y)`: the agent's
//! favourite eligible proposal is then exactly the earliest eligible point.

mod bounds;
mod general;

pub use bounds::{simulate_spm, verify_distributional_bound, BoundPart, BoundReport};
pub use general::{random_omega, spm_of_general, GeneralMechanism, SpmReport};

use crate::prophet::{run_stopping_rule, StoppingRuleSpec, TimedPoint};
use crate::{Error, Result};
use serde::Serialize;

/// Utilities of one sampled solution: `x` to the principal, `y` to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionPoint {
    pub x: f64,
    pub y: f64,
}

impl SolutionPoint {
    pub fn new(x: f64, y: f64) -> Self {
        SolutionPoint { x, y }
    }
}

/// The set `R` of proposals a single-proposal mechanism accepts.
#[derive(Debug, Clone)]
pub enum EligibleSet {
    XThreshold {
        theta: f64,
        strict: bool,
    },
    /// `{(x, y) : (x, e^-y) in Q}` for a time-dependent region `Q`.
    Curve(StoppingRuleSpec),
    Explicit(Vec<SolutionPoint>),
    All,
    None,
}

impl EligibleSet {
    pub fn contains(&self, p: SolutionPoint) -> bool {
        match self {
            EligibleSet::XThreshold { theta, strict } => crate::prophet::above(p.x, *theta, *strict),
            EligibleSet::Curve(rule) => rule.accepts(p.x, y_to_time(p.y)),
            EligibleSet::Explicit(pts) => pts.iter().any(|q| q.x == p.x && q.y == p.y),
            EligibleSet::All => true,
            EligibleSet::None => false,
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            EligibleSet::XThreshold { theta, strict } => {
                format!("spm(x{}{theta:.9})", if *strict { ">" } else { ">=" })
            }
            EligibleSet::Curve(rule) => format!("spm(curve:{})", rule.descriptor()),
            EligibleSet::Explicit(p) => format!("spm(explicit:{})", p.len()),
            EligibleSet::All => "spm(all)".into(),
            EligibleSet::None => "spm(none)".into(),
        }
    }
}

/// The agent's proposal: the eligible sample of largest `y`, the smallest
/// index among equals; `None` proposes nothing.
pub fn agent_best_response(samples: &[SolutionPoint], r: &EligibleSet) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in samples.iter().enumerate() {
        if best.is_some_and(|b| p.y <= samples[b].y) {
            continue;
        }
        if r.contains(*p) {
            best = Some(i);
        }
    }
    best
}

/// The adopted solution, or `None` for the status quo.
pub fn run_spm(r: &EligibleSet, samples: &[SolutionPoint]) -> Option<SolutionPoint> {
    agent_best_response(samples, r).map(|i| samples[i])
}

/// `t(y) = e^-y`, a decreasing bijection from `[0, inf)` onto `(0, 1]`.
pub fn y_to_time(y: f64) -> f64 {
    (-y).exp()
}

pub fn time_to_y(t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain("time", format!("{t} not in (0, 1]")));
    }
    Ok(-t.ln())
}

/// The single-proposal mechanism whose eligible set is the preimage of the
/// rule's region under `(x, y) -> (x, e^-y)`.
pub fn mechanism_from_rule(rule: &StoppingRuleSpec) -> EligibleSet {
    match rule {
        StoppingRuleSpec::Threshold { theta, strict } => {
            if *theta == f64::NEG_INFINITY {
                EligibleSet::All
            } else if *theta == f64::INFINITY {
                EligibleSet::None
            } else {
                EligibleSet::XThreshold {
                    theta: *theta,
                    strict: *strict,
                }
            }
        }
        other => EligibleSet::Curve(other.clone()),
    }
}

/// Whether running `rule` on the mapped points selects the image of the
/// mechanism's outcome (both empty counts as agreement).
pub fn bridge_equivalence_check(rule: &StoppingRuleSpec, samples: &[SolutionPoint]) -> bool {
    let timed: Vec<TimedPoint> = samples
        .iter()
        .map(|p| TimedPoint {
            x: p.x,
            t: y_to_time(p.y),
        })
        .collect();
    let by_rule = run_stopping_rule(rule, &timed).map(|i| timed[i]);
    let by_mechanism = run_spm(&mechanism_from_rule(rule), samples).map(|p| TimedPoint {
        x: p.x,
        t: y_to_time(p.y),
    });
    by_rule == by_mechanism
}
