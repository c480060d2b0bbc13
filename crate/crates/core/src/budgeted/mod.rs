//! The binary model when the agent may inspect at most `n` of the `m` boxes.

use crate::boxsearch::{best_threshold_mechanism, expected_max_kappa, BoxInstance, Interval};
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;

/// Largest instance the exact routines accept.
pub const MAX_BUDGETED_BOXES: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetedInstance {
    base: BoxInstance,
    budget: usize,
}

impl BudgetedInstance {
    pub fn new(base: BoxInstance, budget: usize) -> Result<Self> {
        if budget == 0 || budget >= base.len() {
            return Err(Error::invalid(
                "budget",
                format!("{budget} (need 1 <= n < m = {})", base.len()),
            ));
        }
        Ok(BudgetedInstance { base, budget })
    }

    /// A random box instance of size `m` with a budget drawn from `1..m`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("m", "need at least two boxes"));
        }
        let base = BoxInstance::random(rng, m);
        let budget = rng.gen_range(1..m);
        BudgetedInstance::new(base, budget)
    }

    pub fn base(&self) -> &BoxInstance {
        &self.base
    }

    pub fn budget(&self) -> usize {
        self.budget
    }
}

fn check_size(m: usize) -> Result<()> {
    if m > MAX_BUDGETED_BOXES {
        return Err(Error::Capability(format!(
            "{m} boxes exceeds the exact limit of {MAX_BUDGETED_BOXES}"
        )));
    }
    Ok(())
}

/// Optimal adaptive search on `base` with at most `budget` inspections.
/// Any budget is accepted here; `budget >= m` is the unconstrained problem.
pub fn adaptive_value(base: &BoxInstance, budget: usize) -> Result<f64> {
    let m = base.len();
    check_size(m)?;
    let k = budget.min(m);
    let mut levels: Vec<f64> = std::iter::once(0.0).chain(base.boxes().iter().map(|b| b.x)).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let level_of: Vec<usize> = base
        .boxes()
        .iter()
        .map(|b| levels.partition_point(|&v| v < b.x))
        .collect();
    let mut dp = Dp {
        base,
        levels: &levels,
        level_of: &level_of,
        nl: levels.len(),
        nk: k + 1,
        memo: vec![f64::NAN; (1usize << m) * levels.len() * (k + 1)],
    };
    Ok(dp.value((1usize << m) - 1, 0, k))
}

struct Dp<'a> {
    base: &'a BoxInstance,
    levels: &'a [f64],
    level_of: &'a [usize],
    nl: usize,
    nk: usize,
    memo: Vec<f64>,
}

impl Dp<'_> {
    /// `V(A, b, k)`: `avail` is the bitmask `A`, `b` indexes `levels`.
    fn value(&mut self, avail: usize, b: usize, k: usize) -> f64 {
        let stop = self.levels[b];
        if k == 0 || avail == 0 {
            return stop;
        }
        let key = (avail * self.nl + b) * self.nk + k;
        if !self.memo[key].is_nan() {
            return self.memo[key];
        }
        let mut best = stop;
        let mut rest = avail;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let bx = self.base.boxes()[i];
            let next = avail & !(1 << i);
            let found = self.value(next, b.max(self.level_of[i]), k - 1);
            let missed = if bx.p < 1.0 { self.value(next, b, k - 1) } else { 0.0 };
            let v = -bx.c + bx.p * found + (1.0 - bx.p) * missed;
            if v > best {
                best = v;
            }
        }
        self.memo[key] = best;
        best
    }
}

/// Optimal adaptive value subject to the instance's budget.
pub fn adaptive_opt(inst: &BudgetedInstance) -> Result<f64> {
    adaptive_value(&inst.base, inst.budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SetMethod {
    Brute,
    Greedy,
}

/// A set of at most `budget` boxes and its score `E[max_T kappa^+]`.
///
/// Boxes with `z <= 0` are dropped first; when fewer than `budget` remain
/// they are all returned, since padding would not change the score.
pub fn best_nonadaptive_set(inst: &BudgetedInstance, method: SetMethod) -> Result<(Vec<usize>, f64)> {
    let base = &inst.base;
    let positive: Vec<usize> = (0..base.len()).filter(|&i| base.boxes()[i].z() > 0.0).collect();
    let n = inst.budget;
    if positive.len() <= n {
        let score = expected_max_kappa(base, &positive);
        return Ok((positive, score));
    }
    match method {
        SetMethod::Brute => {
            check_size(base.len())?;
            let mut best: Option<(Vec<usize>, f64)> = None;
            for mask in 0u32..(1 << positive.len()) {
                if mask.count_ones() as usize != n {
                    continue;
                }
                let t: Vec<usize> = (0..positive.len())
                    .filter(|&j| mask >> j & 1 == 1)
                    .map(|j| positive[j])
                    .collect();
                let s = expected_max_kappa(base, &t);
                if best.as_ref().is_none_or(|b| s > b.1) {
                    best = Some((t, s));
                }
            }
            Ok(best.expect("at least one subset"))
        }
        SetMethod::Greedy => {
            let mut t: Vec<usize> = Vec::with_capacity(n);
            let mut score = 0.0;
            for _ in 0..n {
                let mut pick: Option<(usize, f64)> = None;
                for &i in &positive {
                    if t.contains(&i) {
                        continue;
                    }
                    t.push(i);
                    let s = expected_max_kappa(base, &t);
                    t.pop();
                    if pick.is_none_or(|p| s > p.1) {
                        pick = Some((i, s));
                    }
                }
                let (i, s) = pick.expect("more positive boxes than budget");
                t.push(i);
                score = s;
            }
            t.sort_unstable();
            Ok((t, score))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetedValue {
    pub value: f64,
    pub set: Vec<usize>,
    pub interval: Interval,
    /// `E[max_T kappa^+]` for the chosen set.
    pub kappa_score: f64,
}

/// Restricts the instance to the brute-force set and runs the best threshold
/// mechanism there. With `|T| <= n` the budget no longer binds.
pub fn budgeted_mechanism_value(inst: &BudgetedInstance) -> Result<BudgetedValue> {
    let (set, kappa_score) = best_nonadaptive_set(inst, SetMethod::Brute)?;
    let sub = inst.base.restrict(&set);
    let choice = best_threshold_mechanism(&sub)?;
    Ok(BudgetedValue {
        value: choice.value,
        set,
        interval: choice.best,
        kappa_score,
    })
}
