//! The binary model: each box is feasible with probability `p`, worth `x` to
//! the principal and `y` to the agent if so, and costs `c` to inspect.

mod exhaustive;

pub use exhaustive::{exhaustive_value, Enumerated, ExhaustiveOutcome, MAX_EXHAUSTIVE_BOXES};

use crate::distributions::Dist1D;
use crate::parallel::{estimate, Estimate, McConfig};
use crate::prophet::{evaluate_rule, median_of_max_threshold, EvalMode, ProphetInstance, StoppingRuleSpec};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Slack allowed on the standing assumption `c <= p y`.
const COST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub x: f64,
    pub y: f64,
    pub c: f64,
    pub p: f64,
}

impl SearchBox {
    /// Principal priority `x - c/p`.
    pub fn z(&self) -> f64 {
        self.x - self.c / self.p
    }

    /// Agent priority `y - c/p`.
    pub fn w(&self) -> f64 {
        self.y - self.c / self.p
    }

    /// Expected net contribution when opened: `p x - c`.
    pub fn net(&self) -> f64 {
        self.p * self.x - self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxInstance {
    boxes: Vec<SearchBox>,
}

impl BoxInstance {
    pub fn new(boxes: Vec<SearchBox>) -> Result<Self> {
        for (i, b) in boxes.iter().enumerate() {
            let finite = [b.x, b.y, b.c, b.p].iter().all(|v| v.is_finite());
            if !finite || b.x < 0.0 || b.y < 0.0 || b.c < 0.0 || !(b.p > 0.0 && b.p <= 1.0) {
                return Err(Error::invalid("box", format!("#{i}: {b:?}")));
            }
            if b.c > b.p * b.y + COST_TOL {
                return Err(Error::invalid(
                    "box",
                    format!("#{i}: cost {} exceeds p y = {}", b.c, b.p * b.y),
                ));
            }
        }
        Ok(BoxInstance { boxes })
    }

    /// `m` boxes with `x, y ~ U[0, 10]`, `p ~ U[0.1, 1]`, `c ~ U[0, p y]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Self {
        let boxes = (0..m)
            .map(|_| {
                let x = rng.gen_range(0.0..=10.0);
                let y = rng.gen_range(0.0..=10.0);
                let p = rng.gen_range(0.1..=1.0);
                let c = rng.gen::<f64>() * p * y;
                SearchBox { x, y, c, p }
            })
            .collect();
        BoxInstance { boxes }
    }

    pub fn boxes(&self) -> &[SearchBox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// The sub-instance on the given box indices, in the given order.
    pub fn restrict(&self, idx: &[usize]) -> BoxInstance {
        BoxInstance {
            boxes: idx.iter().map(|&i| self.boxes[i]).collect(),
        }
    }

    /// Covered call `kappa_i^+`: `z_i` with probability `p_i`, else 0.
    pub fn kappa(&self, i: usize) -> Dist1D {
        let b = &self.boxes[i];
        let z = b.z();
        if z > 0.0 && b.p < 1.0 {
            Dist1D::new(vec![(0.0, 1.0 - b.p), (z, b.p)], vec![]).expect("two atoms")
        } else {
            Dist1D::point(z.max(0.0))
        }
    }
}

/// Per-box priorities `(z, w)`.
pub fn priorities(inst: &BoxInstance) -> (Vec<f64>, Vec<f64>) {
    inst.boxes.iter().map(|b| (b.z(), b.w())).unzip()
}

/// Boxes with `z > 0`, highest `z` first, ties by index.
fn weitzman_order(inst: &BoxInstance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.len()).filter(|&i| inst.boxes[i].z() > 0.0).collect();
    order.sort_by(|&a, &b| inst.boxes[b].z().total_cmp(&inst.boxes[a].z()).then(a.cmp(&b)));
    order
}

/// Expected net value of opening boxes in `order` until the first feasible one.
fn sequential_value(inst: &BoxInstance, order: &[usize]) -> f64 {
    let mut alive = 1.0;
    let mut v = 0.0;
    for &i in order {
        let b = &inst.boxes[i];
        v += alive * b.net();
        alive *= 1.0 - b.p;
    }
    v
}

/// Value of the principal's own optimal search (Weitzman's rule).
pub fn weitzman_value(inst: &BoxInstance) -> f64 {
    sequential_value(inst, &weitzman_order(inst))
}

/// `E[max_{i in T} kappa_i^+]`.
pub fn expected_max_kappa(inst: &BoxInstance, t: &[usize]) -> f64 {
    let mut order: Vec<usize> = t.iter().copied().filter(|&i| inst.boxes[i].z() > 0.0).collect();
    order.sort_by(|&a, &b| inst.boxes[b].z().total_cmp(&inst.boxes[a].z()).then(a.cmp(&b)));
    order.dedup();
    let mut alive = 1.0;
    let mut v = 0.0;
    for i in order {
        let b = &inst.boxes[i];
        v += alive * b.p * b.z();
        alive *= 1.0 - b.p;
    }
    v
}

/// A half-infinite interval `(theta, inf)` or `[theta, inf)` of priorities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub theta: f64,
    pub strict: bool,
}

impl Interval {
    pub fn new(theta: f64, strict: bool) -> Result<Self> {
        if !(theta >= 0.0) {
            return Err(Error::domain("theta", format!("{theta} must be >= 0")));
        }
        Ok(Interval { theta, strict })
    }

    pub fn contains(&self, z: f64) -> bool {
        crate::prophet::above(z, self.theta, self.strict)
    }

    pub fn descriptor(&self) -> String {
        format!("{}{:.9},inf)", if self.strict { "(" } else { "[" }, self.theta)
    }
}

/// The agent explores by `w` descending, then `z` descending, then index.
fn agent_rank(inst: &BoxInstance, a: usize, b: usize) -> std::cmp::Ordering {
    let (ba, bb) = (&inst.boxes[a], &inst.boxes[b]);
    bb.w()
        .total_cmp(&ba.w())
        .then(bb.z().total_cmp(&ba.z()))
        .then(a.cmp(&b))
}

/// `R(X)` in the agent's exploration order: `w` descending, then `z`
/// descending, then index. Boxes with `z <= 0` are never eligible.
pub fn eligible_order(inst: &BoxInstance, x: Interval) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.len())
        .filter(|&i| {
            let z = inst.boxes[i].z();
            z > 0.0 && x.contains(z)
        })
        .collect();
    order.sort_by(|&a, &b| agent_rank(inst, a, b));
    order
}

/// Expected principal net value of `M(X)`: the agent opens `R(X)` in order
/// and proposes the first feasible box; every inspection cost is deducted.
pub fn mechanism_value_mx(inst: &BoxInstance, x: Interval) -> f64 {
    sequential_value(inst, &eligible_order(inst, x))
}

/// The same value read as a threshold stopping rule on the covered calls
/// `kappa_i^+`, arriving in the agent's order, with region `X cap (0, inf)`.
pub fn kappa_threshold_value(inst: &BoxInstance, x: Interval) -> Result<f64> {
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.sort_by(|&a, &b| agent_rank(inst, a, b));
    if order.is_empty() {
        return Ok(0.0);
    }
    let dists = order.iter().map(|&i| inst.kappa(i)).collect();
    let pool = ProphetInstance::pool(dists, vec![1; order.len()])?;
    // a zero covered call is never a selection
    let strict = x.strict || x.theta == 0.0;
    Ok(evaluate_rule(&StoppingRuleSpec::threshold(x.theta, strict), &pool, EvalMode::Exact)?.mean)
}

/// The best interval found by sweeping every candidate and the interval the
/// median-of-max construction prescribes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdChoice {
    pub best: Interval,
    pub value: f64,
    pub constructive: Interval,
    pub constructive_value: f64,
}

pub fn best_threshold_mechanism(inst: &BoxInstance) -> Result<ThresholdChoice> {
    let mut cands = vec![0.0];
    cands.extend(inst.boxes.iter().map(|b| b.z()).filter(|&z| z > 0.0));
    let start = Interval {
        theta: 0.0,
        strict: false,
    };
    let mut best = (start, mechanism_value_mx(inst, start));
    for &theta in &cands {
        for strict in [false, true] {
            let x = Interval { theta, strict };
            let v = mechanism_value_mx(inst, x);
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    let (constructive, constructive_value) = if inst.is_empty() {
        (best.0, 0.0)
    } else {
        let kappas: Vec<Dist1D> = (0..inst.len()).map(|i| inst.kappa(i)).collect();
        let th = median_of_max_threshold(&kappas, &vec![1; inst.len()])?;
        let weak = Interval::new(th.theta, false)?;
        let strict = Interval::new(th.theta, true)?;
        let (vw, vs) = (mechanism_value_mx(inst, weak), mechanism_value_mx(inst, strict));
        if vs > vw {
            (strict, vs)
        } else {
            (weak, vw)
        }
    };
    Ok(ThresholdChoice {
        best: best.0,
        value: best.1,
        constructive,
        constructive_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Weitzman,
    Mx(Interval),
}

/// Seeded simulation of a search policy; cross-checks the closed forms.
pub fn simulate_policy(inst: &BoxInstance, policy: Policy, cfg: &McConfig) -> Result<Estimate> {
    let order = match policy {
        Policy::Weitzman => weitzman_order(inst),
        Policy::Mx(x) => eligible_order(inst, x),
    };
    estimate(cfg, |rng| {
        let mut v = 0.0;
        for &i in &order {
            let b = &inst.boxes[i];
            v -= b.c;
            if rng.gen::<f64>() < b.p {
                return v + b.x;
            }
        }
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use approx::assert_abs_diff_eq;

    fn bx(x: f64, y: f64, c: f64, p: f64) -> SearchBox {
        SearchBox { x, y, c, p }
    }

    fn two_box() -> BoxInstance {
        BoxInstance::new(vec![bx(10.0, 2.0, 0.5, 0.5), bx(4.0, 10.0, 0.5, 0.5)]).unwrap()
    }

    #[test]
    fn priority_examples() {
        assert_eq!(bx(10.0, 10.0, 2.0, 0.5).z(), 6.0);
        assert_eq!(bx(0.0, 10.0, 0.5, 0.5).w(), 9.0);
        let free = bx(3.0, 4.0, 0.0, 0.3);
        assert_eq!((free.z(), free.w()), (3.0, 4.0));
    }

    #[test]
    fn weitzman_examples() {
        let one = BoxInstance::new(vec![bx(10.0, 4.0, 2.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(weitzman_value(&one), 3.0);
        let pair = BoxInstance::new(vec![bx(10.0, 2.0, 1.0, 0.5), bx(6.0, 1.0, 0.6, 1.0)]).unwrap();
        assert_abs_diff_eq!(weitzman_value(&pair), 6.7, epsilon = 1e-12);
        let neg = BoxInstance::new(vec![bx(1.0, 4.0, 2.0, 0.5)]).unwrap();
        assert_eq!(weitzman_value(&neg), 0.0);
    }

    #[test]
    fn kappa_examples() {
        let inst = BoxInstance::new(vec![bx(6.0, 1.0, 0.0, 0.5), bx(4.0, 1.0, 0.0, 1.0)]).unwrap();
        assert_eq!(expected_max_kappa(&inst, &[]), 0.0);
        assert_abs_diff_eq!(expected_max_kappa(&inst, &[0]), 3.0);
        assert_abs_diff_eq!(expected_max_kappa(&inst, &[0, 1]), 5.0);
    }

    #[test]
    fn mx_examples() {
        let inst = two_box();
        assert_abs_diff_eq!(mechanism_value_mx(&inst, Interval::new(3.0, false).unwrap()), 3.75);
        assert_abs_diff_eq!(mechanism_value_mx(&inst, Interval::new(9.0, false).unwrap()), 4.5);
        assert_eq!(mechanism_value_mx(&inst, Interval::new(9.5, false).unwrap()), 0.0);
    }

    #[test]
    fn best_threshold_on_two_boxes() {
        let c = best_threshold_mechanism(&two_box()).unwrap();
        assert_eq!(
            c.best,
            Interval {
                theta: 9.0,
                strict: false
            }
        );
        assert_abs_diff_eq!(c.value, 4.5);
        assert!(c.constructive_value >= 0.5 * expected_max_kappa(&two_box(), &[0, 1]));
    }

    #[test]
    fn all_nonpositive_priorities() {
        let inst = BoxInstance::new(vec![bx(1.0, 4.0, 2.0, 0.5), bx(0.5, 2.0, 0.5, 0.5)]).unwrap();
        let c = best_threshold_mechanism(&inst).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.constructive_value, 0.0);
    }

    #[test]
    fn kappa_rule_matches_mechanism() {
        let mut rng = trial_rng(8, 0, 0);
        for _ in 0..50 {
            let inst = BoxInstance::random(&mut rng, 6);
            for theta in [0.0, 1.0, 3.5] {
                for strict in [false, true] {
                    let x = Interval::new(theta, strict).unwrap();
                    let a = mechanism_value_mx(&inst, x);
                    let b = kappa_threshold_value(&inst, x).unwrap();
                    assert!((a - b).abs() <= 1e-12, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn simulation_matches_closed_forms() {
        let pair = BoxInstance::new(vec![bx(10.0, 2.0, 1.0, 0.5), bx(6.0, 1.0, 0.6, 1.0)]).unwrap();
        let w = simulate_policy(&pair, Policy::Weitzman, &McConfig::new(100_000, 4)).unwrap();
        assert!((w.mean - 6.7).abs() <= 4.0 * w.stderr);
        let x = Interval::new(3.0, false).unwrap();
        let m = simulate_policy(&two_box(), Policy::Mx(x), &McConfig::new(100_000, 4)).unwrap();
        assert!((m.mean - 3.75).abs() <= 4.0 * m.stderr);
        assert!(simulate_policy(&pair, Policy::Weitzman, &McConfig::new(0, 4)).is_err());
    }

    #[test]
    fn cost_assumption_enforced() {
        assert!(BoxInstance::new(vec![bx(1.0, 1.0, 0.6, 0.5)]).is_err());
        assert!(Interval::new(-1.0, true).is_err());
    }
}
