use super::StoppingRuleSpec;
use crate::distributions::{merged_breaks, Dist1D};
use crate::numerics::{find_root_monotone, ZCurve};
use crate::{Error, Result};
use std::sync::Arc;

/// CDF `G` of the arrival time.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeCdf {
    Dist(Dist1D),
    /// Time `t = e^-y` for `y` drawn from the wrapped law, so
    /// `G(t) = P(y >= -ln t)`.
    FromUtility(Dist1D),
}

impl TimeCdf {
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            TimeCdf::Dist(g) => g.cdf(t),
            TimeCdf::FromUtility(fy) => {
                if t <= 0.0 {
                    0.0
                } else {
                    1.0 - fy.cdf_left(-t.ln())
                }
            }
        }
    }

    fn is_atomless(&self) -> bool {
        match self {
            TimeCdf::Dist(d) | TimeCdf::FromUtility(d) => d.is_atomless(),
        }
    }
}

/// The oblivious rule built from the `z(s)` curve.
#[derive(Debug, Clone)]
pub struct OdeRule {
    n: u32,
    f: Dist1D,
    g: TimeCdf,
    curve: Arc<ZCurve>,
}

impl OdeRule {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn curve(&self) -> &ZCurve {
        &self.curve
    }

    pub fn accepts(&self, x: f64, t: f64) -> bool {
        1.0 - self.f.cdf(x) < self.curve.z_at(self.g.cdf(t)) / self.n as f64
    }
}

/// Step threshold `theta(t)`: `theta_k` on `[t_k, t_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRule {
    knots: Vec<(f64, f64)>,
    strict: bool,
}

impl RegionRule {
    /// `knots` are `(t_k, theta_k)` with `t_0 = 0`, `t` increasing and `theta`
    /// nonincreasing; thresholds may be infinite.
    pub fn new(knots: Vec<(f64, f64)>, strict: bool) -> Result<Self> {
        if knots.first().map(|k| k.0) != Some(0.0) {
            return Err(Error::invalid("region", "first knot must start at t = 0"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].0 <= 1.0) {
                return Err(Error::invalid("region", "knot times must increase within [0, 1]"));
            }
            if !(w[1].1 <= w[0].1) {
                return Err(Error::invalid("region", "thresholds must be nonincreasing in t"));
            }
        }
        if knots.iter().any(|k| k.1.is_nan()) {
            return Err(Error::invalid("region", "NaN threshold"));
        }
        Ok(RegionRule { knots, strict })
    }

    pub fn theta_at(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|kn| kn.0 <= t);
        self.knots[k.max(1) - 1].1
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

/// Median threshold of `x_* = max` of a pool, with the mixing weight that
/// makes the randomised strict/weak rule stop with probability exactly 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianThreshold {
    pub theta: f64,
    /// `P(x_* > theta) <= 1/2`.
    pub p0: f64,
    /// `P(x_* >= theta) >= 1/2`.
    pub p1: f64,
    /// Weight on the strict rule: `q p0 + (1 - q) p1 = 1/2`.
    pub q: f64,
}

fn max_cdf(ds: &[Dist1D], counts: &[u32], v: f64, left: bool) -> f64 {
    ds.iter()
        .zip(counts)
        .map(|(d, &c)| {
            let f = if left { d.cdf_left(v) } else { d.cdf(v) };
            f.powi(c as i32)
        })
        .product()
}

pub fn median_of_max_threshold(ds: &[Dist1D], counts: &[u32]) -> Result<MedianThreshold> {
    if ds.is_empty() || ds.len() != counts.len() || counts.iter().all(|&c| c == 0) {
        return Err(Error::invalid("pool", "needs at least one draw and matching counts"));
    }
    let breaks = merged_breaks(ds);
    let h = |v| max_cdf(ds, counts, v, false);
    let mut theta = *breaks.last().expect("non-empty");
    let mut prev = breaks[0];
    if h(prev) >= 0.5 {
        theta = prev;
    } else {
        for &b in &breaks[1..] {
            if h(b) >= 0.5 {
                theta = if max_cdf(ds, counts, b, true) >= 0.5 {
                    // crossing inside (prev, b) where every CDF is linear
                    let lines: Vec<(f64, f64)> = ds.iter().map(|d| d.linear_piece(prev, b)).collect();
                    let g = |v: f64| {
                        lines
                            .iter()
                            .zip(counts)
                            .map(|(&(f0, dens), &c)| (f0 + dens * (v - prev)).powi(c as i32))
                            .product::<f64>()
                            - 0.5
                    };
                    find_root_monotone(g, prev, b, 1e-15 * (1.0 + b.abs()))?
                } else {
                    b
                };
                break;
            }
            prev = b;
        }
    }
    let p0 = 1.0 - h(theta);
    let p1 = 1.0 - max_cdf(ds, counts, theta, true);
    let q = if p1 > p0 {
        ((p1 - 0.5) / (p1 - p0)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    Ok(MedianThreshold { theta, p0, p1, q })
}

/// The single-threshold rule for `n` i.i.d. draws: `F(theta) = e^{-1/n}`.
pub fn iid_threshold(f: &Dist1D, n: u32) -> Result<f64> {
    if !f.is_atomless() {
        return Err(Error::Precondition("i.i.d. threshold needs an atomless F".into()));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    Ok(f.quantile((-1.0 / n as f64).exp()))
}

/// The `z(s)`-curve rule for value law `F` and arrival-time law `G`.
pub fn ode_rule(n: u32, f: Dist1D, g: Dist1D) -> Result<StoppingRuleSpec> {
    ode_rule_with_time(n, f, TimeCdf::Dist(g))
}

pub fn ode_rule_with_time(n: u32, f: Dist1D, g: TimeCdf) -> Result<StoppingRuleSpec> {
    if !f.is_atomless() || !g.is_atomless() {
        return Err(Error::Precondition("the ODE rule needs atomless F and G".into()));
    }
    let curve = Arc::new(ZCurve::new(n)?);
    Ok(StoppingRuleSpec::Ode(OdeRule { n, f, g, curve }))
}
