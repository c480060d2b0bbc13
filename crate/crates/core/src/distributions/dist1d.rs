use super::MASS_TOL;
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;

/// A law on the real line made of point masses and uniform pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dist1D {
    /// `(value, mass)`, sorted by value, values distinct.
    atoms: Vec<(f64, f64)>,
    /// `(lo, hi, mass)` with `lo < hi`.
    segments: Vec<(f64, f64, f64)>,
}

impl Dist1D {
    pub fn new(mut atoms: Vec<(f64, f64)>, segments: Vec<(f64, f64, f64)>) -> Result<Self> {
        let mut total = 0.0;
        for &(v, m) in &atoms {
            if !v.is_finite() || !m.is_finite() || m < 0.0 {
                return Err(Error::invalid("atom", format!("({v}, {m})")));
            }
            total += m;
        }
        for &(lo, hi, m) in &segments {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) || !m.is_finite() || m < 0.0 {
                return Err(Error::invalid("segment", format!("({lo}, {hi}, {m})")));
            }
            total += m;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid("masses", format!("sum to {total}, expected 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("atoms", "values must be distinct"));
        }
        Ok(Dist1D { atoms, segments })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Dist1D::new(vec![], vec![(lo, hi, 1.0)])
    }

    pub fn point(v: f64) -> Self {
        Dist1D {
            atoms: vec![(v, 1.0)],
            segments: vec![],
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn segments(&self) -> &[(f64, f64, f64)] {
        &self.segments
    }

    pub fn is_atomless(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass sitting exactly at `v`.
    pub fn atom_mass(&self, v: f64) -> f64 {
        self.atoms
            .binary_search_by(|a| a.0.total_cmp(&v))
            .map(|i| self.atoms[i].1)
            .unwrap_or(0.0)
    }

    /// `P(X <= v)`.
    pub fn cdf(&self, v: f64) -> f64 {
        let mut p: f64 = self.atoms.iter().take_while(|a| a.0 <= v).map(|a| a.1).sum();
        for &(lo, hi, m) in &self.segments {
            if v >= hi {
                p += m;
            } else if v > lo {
                p += m * (v - lo) / (hi - lo);
            }
        }
        p.min(1.0)
    }

    /// `P(X < v)`.
    pub fn cdf_left(&self, v: f64) -> f64 {
        (self.cdf(v) - self.atom_mass(v)).max(0.0)
    }

    /// `P(X > v)` when `strict`, otherwise `P(X >= v)`.
    pub fn tail(&self, v: f64, strict: bool) -> f64 {
        if strict {
            1.0 - self.cdf(v)
        } else {
            1.0 - self.cdf_left(v)
        }
    }

    /// `E[X 1{X > v}]` when `strict`, otherwise `E[X 1{X >= v}]`.
    pub fn partial_mean(&self, v: f64, strict: bool) -> f64 {
        let mut s: f64 = self
            .atoms
            .iter()
            .filter(|a| if strict { a.0 > v } else { a.0 >= v })
            .map(|a| a.0 * a.1)
            .sum();
        for &(lo, hi, m) in &self.segments {
            let a = v.clamp(lo, hi);
            s += m * (hi * hi - a * a) / (2.0 * (hi - lo));
        }
        s
    }

    pub fn mean(&self) -> f64 {
        self.partial_mean(f64::NEG_INFINITY, false)
    }

    /// Generalised inverse `inf { v : cdf(v) >= p }`.
    pub fn quantile(&self, p: f64) -> f64 {
        let breaks = self.breaks();
        if !(p > 0.0) {
            return breaks[0];
        }
        let mut prev = breaks[0];
        if self.cdf(prev) >= p {
            return prev;
        }
        for &b in &breaks[1..] {
            if self.cdf(b) >= p {
                let (f0, dens) = self.linear_piece(prev, b);
                if dens > 0.0 && f0 + dens * (b - prev) >= p {
                    return (prev + (p - f0) / dens).clamp(prev, b);
                }
                return b;
            }
            prev = b;
        }
        *breaks.last().expect("non-empty support")
    }

    pub fn min_support(&self) -> f64 {
        self.breaks()[0]
    }

    pub fn max_support(&self) -> f64 {
        *self.breaks().last().expect("non-empty support")
    }

    /// Sorted distinct atom values and segment endpoints.
    pub fn breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        for s in &self.segments {
            b.push(s.0);
            b.push(s.1);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `(cdf(lo), density)` on `(lo, hi)`, assuming no breakpoint inside.
    pub(crate) fn linear_piece(&self, lo: f64, hi: f64) -> (f64, f64) {
        let dens = self
            .segments
            .iter()
            .filter(|s| s.0 <= lo && s.1 >= hi)
            .map(|s| s.2 / (s.1 - s.0))
            .sum();
        (self.cdf(lo), dens)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.gen();
        for &(v, m) in &self.atoms {
            if u < m {
                return v;
            }
            u -= m;
        }
        for &(lo, hi, m) in &self.segments {
            if u < m {
                return lo + (hi - lo) * rng.gen::<f64>();
            }
            u -= m;
        }
        // rounding left `u` just above the last mass
        match self.segments.last() {
            Some(&(lo, hi, _)) => lo + (hi - lo) * rng.gen::<f64>(),
            None => self.atoms.last().expect("non-empty").0,
        }
    }
}
