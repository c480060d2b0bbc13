use super::rules::{median_of_max_threshold, MedianThreshold};
use super::{run_stopping_rule, StoppingRuleSpec, TimedPoint};
use crate::delegation::y_to_time;
use crate::distributions::{expected_max, Dist1D, JointDist};
use crate::parallel::{run_trials, Estimate, McConfig};
use crate::rng::TrialRng;
use crate::{Error, Result};

/// Where the points come from.
#[derive(Debug, Clone)]
pub enum ProphetInstance {
    /// Independent draws in a fixed order: `counts[i]` draws from `dists[i]`,
    /// the `k`-th of `N` draws arriving at time `k / (N + 1)`.
    Pool { dists: Vec<Dist1D>, counts: Vec<u32> },
    /// `n` i.i.d. points with independent value and arrival time.
    Timed { x: Dist1D, t: Dist1D, n: u32 },
    /// `n` i.i.d. solutions `(x, y)`, arriving at `t = e^-y`.
    Joint { dist: JointDist, n: u32 },
}

/// Exact recursion or seeded Monte Carlo.
#[derive(Debug, Clone, Copy)]
pub enum EvalMode {
    Exact,
    MonteCarlo(McConfig),
}

impl ProphetInstance {
    pub fn pool(dists: Vec<Dist1D>, counts: Vec<u32>) -> Result<Self> {
        if dists.is_empty() || dists.len() != counts.len() {
            return Err(Error::invalid("pool", "needs matching, non-empty dists and counts"));
        }
        Ok(ProphetInstance::Pool { dists, counts })
    }

    pub fn timed(x: Dist1D, t: Dist1D, n: u32) -> Result<Self> {
        if t.min_support() < 0.0 || t.max_support() > 1.0 {
            return Err(Error::invalid("time law", "support must lie in [0, 1]"));
        }
        Ok(ProphetInstance::Timed { x, t, n })
    }

    pub fn joint(dist: JointDist, n: u32) -> Result<Self> {
        if dist.y_marginal().min_support() < 0.0 {
            return Err(Error::invalid("joint law", "agent utility y must be nonnegative"));
        }
        Ok(ProphetInstance::Joint { dist, n })
    }

    /// The pool of `x`-laws whose maximum is the benchmark.
    pub fn x_pool(&self) -> (Vec<Dist1D>, Vec<u32>) {
        match self {
            ProphetInstance::Pool { dists, counts } => (dists.clone(), counts.clone()),
            ProphetInstance::Timed { x, n, .. } => (vec![x.clone()], vec![*n]),
            ProphetInstance::Joint { dist, n } => (vec![dist.x_marginal()], vec![*n]),
        }
    }

    pub fn draws(&self) -> usize {
        match self {
            ProphetInstance::Pool { counts, .. } => counts.iter().map(|&c| c as usize).sum(),
            ProphetInstance::Timed { n, .. } | ProphetInstance::Joint { n, .. } => *n as usize,
        }
    }

    /// `E[max x]` over all draws.
    pub fn benchmark(&self) -> Result<f64> {
        let (ds, counts) = self.x_pool();
        expected_max(&ds, &counts)
    }

    pub fn sample_points(&self, rng: &mut TrialRng, out: &mut Vec<TimedPoint>) {
        out.clear();
        match self {
            ProphetInstance::Pool { dists, counts } => {
                let total = self.draws() as f64 + 1.0;
                for (d, &c) in dists.iter().zip(counts) {
                    for _ in 0..c {
                        let t = (out.len() + 1) as f64 / total;
                        out.push(TimedPoint { x: d.sample(rng), t });
                    }
                }
            }
            ProphetInstance::Timed { x, t, n } => {
                for _ in 0..*n {
                    let xv = x.sample(rng);
                    out.push(TimedPoint {
                        x: xv,
                        t: t.sample(rng),
                    });
                }
            }
            ProphetInstance::Joint { dist, n } => {
                for _ in 0..*n {
                    let (x, y) = dist.sample(rng);
                    out.push(TimedPoint { x, t: y_to_time(y) });
                }
            }
        }
    }

    /// Value of a time-independent threshold rule in closed form, where the
    /// law of the selected point's value is tractable.
    fn exact_threshold(&self, theta: f64, strict: bool) -> Option<f64> {
        match self {
            ProphetInstance::Pool { dists, counts } => {
                // survive past each draw, in arrival order
                let mut alive = 1.0;
                let mut value = 0.0;
                for (d, &c) in dists.iter().zip(counts) {
                    let (a, m) = (d.tail(theta, strict), d.partial_mean(theta, strict));
                    for _ in 0..c {
                        value += alive * m;
                        alive *= 1.0 - a;
                    }
                }
                Some(value)
            }
            ProphetInstance::Timed { x, n, .. } => Some(iid_threshold_value(x, *n, theta, strict)),
            ProphetInstance::Joint { dist, n } => match dist {
                JointDist::Product { x, .. } => Some(iid_threshold_value(x, *n, theta, strict)),
                JointDist::Discrete(atoms) => Some(discrete_joint_value(atoms, *n, theta, strict)),
                JointDist::RectMixture(_) => None,
            },
        }
    }
}

/// `E[x; accepted] (1 + (1-a) + ... + (1-a)^{n-1})` for i.i.d. draws.
fn iid_threshold_value(x: &Dist1D, n: u32, theta: f64, strict: bool) -> f64 {
    let a = x.tail(theta, strict);
    let m = x.partial_mean(theta, strict);
    if a <= 0.0 {
        return 0.0;
    }
    m * -(n as f64 * (-a).ln_1p()).exp_m1() / a
}

/// Threshold on a discrete joint law with `t = e^-y`: the selection is the
/// eligible draw of largest `y`, the first such draw among equal `y`.
pub(crate) fn discrete_joint_value(atoms: &[(f64, f64, f64)], n: u32, theta: f64, strict: bool) -> f64 {
    let mut elig: Vec<(f64, f64, f64)> = atoms
        .iter()
        .copied()
        .filter(|a| super::above(a.0, theta, strict) && a.2 > 0.0)
        .collect();
    elig.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut value = 0.0;
    let mut mass_above: f64 = 0.0;
    let mut i = 0;
    while i < elig.len() {
        let y = elig[i].1;
        let (mut m, mut mx): (f64, f64) = (0.0, 0.0);
        while i < elig.len() && elig[i].1 == y {
            m += elig[i].2;
            mx += elig[i].2 * elig[i].0;
            i += 1;
        }
        let p_level = (1.0 - mass_above).powi(n as i32) - (1.0 - mass_above - m).max(0.0).powi(n as i32);
        value += p_level * mx / m;
        mass_above += m;
    }
    value
}

/// Expected selected value of `rule` on `inst`.
pub fn evaluate_rule(rule: &StoppingRuleSpec, inst: &ProphetInstance, mode: EvalMode) -> Result<Estimate> {
    match mode {
        EvalMode::Exact => {
            let StoppingRuleSpec::Threshold { theta, strict } = rule else {
                return Err(Error::Capability(format!(
                    "exact evaluation of {} (threshold rules only)",
                    rule.descriptor()
                )));
            };
            inst.exact_threshold(*theta, *strict)
                .map(Estimate::exact)
                .ok_or_else(|| Error::Capability("exact evaluation on a rectangle mixture".into()))
        }
        EvalMode::MonteCarlo(cfg) => {
            let per_trial = evaluate_rules_mc(&[rule], inst, &cfg)?;
            Ok(Estimate::from_values(&per_trial[0]))
        }
    }
}

/// Runs several rules on the same sampled point sets; returns one vector of
/// per-trial values per rule.
pub fn evaluate_rules_mc(rules: &[&StoppingRuleSpec], inst: &ProphetInstance, cfg: &McConfig) -> Result<Vec<Vec<f64>>> {
    let rows = run_trials(cfg, |rng| {
        let mut pts = Vec::with_capacity(inst.draws());
        inst.sample_points(rng, &mut pts);
        rules
            .iter()
            .map(|r| run_stopping_rule(r, &pts).map_or(0.0, |i| pts[i].x))
            .collect::<Vec<f64>>()
    })?;
    Ok((0..rules.len())
        .map(|k| rows.iter().map(|row| row[k]).collect())
        .collect())
}

/// The strict and weak median-of-max threshold rules, their `q`-mixture and
/// the deterministic better-of pick.
#[derive(Debug, Clone, Copy)]
pub struct MedianRuleValues {
    pub threshold: MedianThreshold,
    pub strict: Estimate,
    pub weak: Estimate,
    pub mixture: Estimate,
    /// Strict is picked only when it is clearly better; otherwise weak.
    pub pick_strict: bool,
    pub best: Estimate,
}

pub fn evaluate_median_rule(inst: &ProphetInstance, mode: EvalMode) -> Result<MedianRuleValues> {
    let (ds, counts) = inst.x_pool();
    let th = median_of_max_threshold(&ds, &counts)?;
    let strict_rule = StoppingRuleSpec::threshold(th.theta, true);
    let weak_rule = StoppingRuleSpec::threshold(th.theta, false);
    let q = th.q;
    let (strict, weak, mixture, pick_strict) = match mode {
        EvalMode::Exact => {
            let s = evaluate_rule(&strict_rule, inst, mode)?;
            let w = evaluate_rule(&weak_rule, inst, mode)?;
            let mix = Estimate::exact(q * s.mean + (1.0 - q) * w.mean);
            (s, w, mix, s.mean > w.mean)
        }
        EvalMode::MonteCarlo(cfg) => {
            let v = evaluate_rules_mc(&[&strict_rule, &weak_rule], inst, &cfg)?;
            let mix: Vec<f64> = v[0].iter().zip(&v[1]).map(|(a, b)| q * a + (1.0 - q) * b).collect();
            let diff: Vec<f64> = v[0].iter().zip(&v[1]).map(|(a, b)| a - b).collect();
            let d = Estimate::from_values(&diff);
            (
                Estimate::from_values(&v[0]),
                Estimate::from_values(&v[1]),
                Estimate::from_values(&mix),
                d.mean > 4.0 * d.stderr && d.mean > 0.0,
            )
        }
    };
    Ok(MedianRuleValues {
        threshold: th,
        strict,
        weak,
        mixture,
        pick_strict,
        best: if pick_strict { strict } else { weak },
    })
}
