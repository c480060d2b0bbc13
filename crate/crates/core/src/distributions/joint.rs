use super::{Dist1D, MASS_TOL};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `[x_lo, x_hi] x [y_lo, y_hi]` carrying `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub weight: f64,
}

/// Joint law of the utility pair `(x, y)` of one sampled solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum JointDist {
    Product {
        x: Dist1D,
        y: Dist1D,
    },
    /// Mixture of uniform laws on rectangles.
    RectMixture(Vec<Rect>),
    /// `(x, y, mass)` atoms.
    Discrete(Vec<(f64, f64, f64)>),
}

impl JointDist {
    pub fn product(x: Dist1D, y: Dist1D) -> Self {
        JointDist::Product { x, y }
    }

    pub fn rect_mixture(rects: Vec<Rect>) -> Result<Self> {
        let mut total = 0.0;
        for r in &rects {
            let ok = r.x_lo < r.x_hi && r.y_lo < r.y_hi && r.weight >= 0.0;
            if !ok || ![r.x_lo, r.x_hi, r.y_lo, r.y_hi, r.weight].iter().all(|v| v.is_finite()) {
                return Err(Error::invalid("rectangle", format!("{r:?}")));
            }
            total += r.weight;
        }
        check_total(total)?;
        Ok(JointDist::RectMixture(rects))
    }

    pub fn discrete(atoms: Vec<(f64, f64, f64)>) -> Result<Self> {
        let mut total = 0.0;
        for &(x, y, m) in &atoms {
            if !(x.is_finite() && y.is_finite() && m.is_finite()) || m < 0.0 {
                return Err(Error::invalid("joint atom", format!("({x}, {y}, {m})")));
            }
            total += m;
        }
        check_total(total)?;
        Ok(JointDist::Discrete(atoms))
    }

    pub fn independent(&self) -> bool {
        matches!(self, JointDist::Product { .. })
    }

    pub fn x_marginal(&self) -> Dist1D {
        self.marginal(Axis::X)
    }

    pub fn y_marginal(&self) -> Dist1D {
        self.marginal(Axis::Y)
    }

    fn marginal(&self, axis: Axis) -> Dist1D {
        match self {
            JointDist::Product { x, y } => match axis {
                Axis::X => x.clone(),
                Axis::Y => y.clone(),
            },
            JointDist::RectMixture(rects) => {
                let segs = rects
                    .iter()
                    .filter(|r| r.weight > 0.0)
                    .map(|r| match axis {
                        Axis::X => (r.x_lo, r.x_hi, r.weight),
                        Axis::Y => (r.y_lo, r.y_hi, r.weight),
                    })
                    .collect();
                Dist1D::new(vec![], segs).expect("validated mixture")
            }
            JointDist::Discrete(atoms) => {
                let mut sorted: Vec<(f64, f64)> = atoms
                    .iter()
                    .map(|a| (if axis == Axis::X { a.0 } else { a.1 }, a.2))
                    .collect();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (v, m) in sorted {
                    match merged.last_mut() {
                        Some(last) if last.0 == v => last.1 += m,
                        _ => merged.push((v, m)),
                    }
                }
                Dist1D::new(merged, vec![]).expect("validated atoms")
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            JointDist::Product { x, y } => {
                let a = x.sample(rng);
                (a, y.sample(rng))
            }
            JointDist::RectMixture(rects) => {
                let u: f64 = rng.gen();
                let r = pick(rects.iter().map(|r| r.weight), u).map_or(rects[rects.len() - 1], |i| rects[i]);
                let a = r.x_lo + (r.x_hi - r.x_lo) * rng.gen::<f64>();
                (a, r.y_lo + (r.y_hi - r.y_lo) * rng.gen::<f64>())
            }
            JointDist::Discrete(atoms) => {
                let u: f64 = rng.gen();
                let i = pick(atoms.iter().map(|a| a.2), u).unwrap_or(atoms.len() - 1);
                (atoms[i].0, atoms[i].1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

fn check_total(total: f64) -> Result<()> {
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::invalid("weights", format!("sum to {total}, expected 1")));
    }
    Ok(())
}

fn pick(masses: impl Iterator<Item = f64>, mut u: f64) -> Option<usize> {
    for (i, m) in masses.enumerate() {
        if u < m {
            return Some(i);
        }
        u -= m;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn product_means_by_law_of_large_numbers() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        let j = JointDist::product(u.clone(), u);
        let mut r = trial_rng(5, 0, 0);
        let (mut sx, mut sy) = (0.0, 0.0);
        let n = 100_000;
        for _ in 0..n {
            let (a, b) = j.sample(&mut r);
            sx += a;
            sy += b;
        }
        assert!((sx / n as f64 - 0.5).abs() < 0.01);
        assert!((sy / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn marginals() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        let p = Dist1D::point(3.0);
        let j = JointDist::product(u.clone(), p.clone());
        assert_eq!(j.x_marginal(), u);
        assert_eq!(j.y_marginal(), p);
        assert!(j.independent());

        let d = JointDist::discrete(vec![(1.0, 2.0, 0.25), (1.0, 3.0, 0.25), (4.0, 2.0, 0.5)]).unwrap();
        assert_eq!(d.x_marginal().atoms(), &[(1.0, 0.5), (4.0, 0.5)]);
        assert_eq!(d.y_marginal().atoms(), &[(2.0, 0.75), (3.0, 0.25)]);
        assert!(!d.independent());
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(JointDist::discrete(vec![(1.0, 1.0, 0.4)]).is_err());
        let r = Rect {
            x_lo: 0.0,
            x_hi: 1.0,
            y_lo: 0.0,
            y_hi: 1.0,
            weight: 0.5,
        };
        assert!(JointDist::rect_mixture(vec![r]).is_err());
        assert!(JointDist::rect_mixture(vec![r, r]).is_ok());
    }
}
