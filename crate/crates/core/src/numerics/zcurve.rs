//! The constant `beta_n`, the limiting constant `alpha = 0.745...` and the
//! curve `z(s)` solving `dz/ds = 1 + z + beta_n e^z`, `z(0) = 0`, `z(1) = n`.
//!
//! Integrating the ODE forward is stiff near `s = 1` (the slope reaches about
//! `beta_n e^n`), so the curve is built through its inverse
//! `s(z) = int_0^z du / (1 + u + beta_n e^u)`, accumulated over a dense
//! `z`-grid and inverted by monotone linear interpolation.

use super::quad::gauss_legendre;
use super::{find_root_monotone, integrate_pieces, NeumaierSum};
use crate::{Error, Result};

pub const MIN_CURVE_N: u32 = 3;
/// Keeps `e^z`, `z <= n`, far inside double range.
pub const MAX_CURVE_N: u32 = 500;

const ROOT_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-13;
/// Where `int_0^inf` is truncated; the tail beyond is below `e^-80`.
const TAIL_SPAN: f64 = 80.0;

/// `1 / (1 + u + beta e^u)`, written to avoid overflowing `e^u`.
#[inline]
fn inv_rate(u: f64, beta: f64) -> f64 {
    let e = (-u).exp();
    e / ((1.0 + u) * e + beta)
}

fn check_n(n: u32) -> Result<()> {
    if !(MIN_CURVE_N..=MAX_CURVE_N).contains(&n) {
        return Err(Error::domain("n", format!("{n} not in [{MIN_CURVE_N}, {MAX_CURVE_N}]")));
    }
    Ok(())
}

fn unit_breaks(upper: f64) -> Vec<f64> {
    let mut b: Vec<f64> = (0..upper.ceil() as usize).map(|k| k as f64).collect();
    b.push(upper);
    b.dedup();
    b
}

/// `int_0^upper dz / (1 + z + beta e^z)`.
pub fn beta_integral(beta: f64, upper: f64) -> Result<f64> {
    integrate_pieces(|z| inv_rate(z, beta), &unit_breaks(upper), QUAD_TOL)
}

/// `beta_n`: the root of `int_0^n dz / (1 + z + beta e^z) = 1`.
///
/// The integral is strictly decreasing in `beta`, so bisection is safe.
pub fn solve_beta(n: u32) -> Result<f64> {
    check_n(n)?;
    let upper = n as f64;
    find_root_monotone(
        |b| beta_integral(b, upper).map(|v| v - 1.0).unwrap_or(f64::NAN),
        1e-9,
        10.0,
        ROOT_TOL,
    )
}

/// The limiting constant through the `z`-form: `int_0^inf dz/(1+z+beta e^z) = 1`.
pub fn solve_beta_limit() -> Result<f64> {
    find_root_monotone(
        |b| beta_integral(b, TAIL_SPAN).map(|v| v - 1.0).unwrap_or(f64::NAN),
        1e-9,
        10.0,
        ROOT_TOL,
    )
}

fn alpha_integral(alpha: f64) -> Result<f64> {
    let shift = 1.0 / alpha - 1.0;
    let f = |y: f64| {
        let yl = if y > 0.0 { y - y * y.ln() } else { 0.0 };
        1.0 / (yl + shift)
    };
    integrate_pieces(f, &[0.0, 1e-6, 1e-3, 0.1, 1.0], QUAD_TOL)
}

/// `alpha ~ 0.7454`: the root of `int_0^1 dy / (y - y ln y + 1/alpha - 1) = 1`.
pub fn solve_alpha() -> Result<f64> {
    find_root_monotone(
        |a| alpha_integral(a).map(|v| v - 1.0).unwrap_or(f64::NAN),
        0.5,
        0.99,
        ROOT_TOL,
    )
}

/// `beta = 1/alpha - 1`, the `n -> inf` limit of `beta_n`.
pub fn beta_limit() -> Result<f64> {
    Ok(1.0 / solve_alpha()? - 1.0)
}

/// `alpha_n = (1 - 6/n) / (1 + beta_n)`.
pub fn alpha_n(n: u32) -> Result<f64> {
    Ok((1.0 - 6.0 / n as f64) / (1.0 + solve_beta(n)?))
}

/// `beta_m - beta_n` for `m > n` (`None` = the limit), without cancellation.
///
/// Subtracting the defining equations gives
/// `(beta_m - beta_n) K = int_n^m dz / (1 + z + beta_m e^z)` with
/// `K = int_0^n e^z / ((1+z+beta_n e^z)(1+z+beta_m e^z)) dz > 0`. Both sides
/// are integrals of positive functions, so the gap keeps full relative
/// precision even where `beta_m` and `beta_n` agree to every printed digit.
pub fn beta_gap(n: u32, m: Option<u32>) -> Result<f64> {
    let b_n = solve_beta(n)?;
    let (b_m, span) = match m {
        Some(m) if m <= n => {
            return Err(Error::domain("m", format!("{m} must exceed n = {n}")));
        }
        Some(m) => (solve_beta(m)?, (m - n) as f64),
        None => (beta_limit()?, TAIL_SPAN),
    };
    let nf = n as f64;
    // tail = e^-n * int_0^span e^-u / ((1+n+u) e^-(n+u) + b_m) du
    let scaled_tail = integrate_pieces(
        |u| {
            let e = (-u).exp();
            e / ((1.0 + nf + u) * (-(nf + u)).exp() + b_m)
        },
        &unit_breaks(span),
        QUAD_TOL,
    )?;
    let k = integrate_pieces(
        |z| {
            let e = (-z).exp();
            e / (((1.0 + z) * e + b_n) * ((1.0 + z) * e + b_m))
        },
        &unit_breaks(nf),
        QUAD_TOL,
    )?;
    Ok((-nf).exp() * scaled_tail / k)
}

/// The curve `z(s)` on `[0, 1]` with `z(0) = 0`, `z(1) = n`.
#[derive(Debug, Clone)]
pub struct ZCurve {
    n: u32,
    beta: f64,
    z: Vec<f64>,
    /// `s(z_k)` normalised by `s_last`.
    s: Vec<f64>,
    /// `Z(z_k) = int_0^{s(z_k)} z(u) du = int_0^{z_k} u / (1 + u + beta e^u) du`.
    big_z: Vec<f64>,
    s_last: f64,
}

/// Builds the curve for `n`; see the module docs.
pub fn z_curve(n: u32) -> Result<ZCurve> {
    ZCurve::new(n)
}

impl ZCurve {
    pub fn new(n: u32) -> Result<Self> {
        let beta = solve_beta(n)?;
        let nf = n as f64;
        let segments = (100 * n as usize).max(10_000);
        let step = nf / segments as f64;
        let mut z: Vec<f64> = (0..segments).map(|k| nf * k as f64 / segments as f64).collect();
        // geometric refinement towards z = n
        z.extend((1..=30).map(|j| nf - step * 0.5f64.powi(j)));
        z.push(nf);

        let mut s_raw = Vec::with_capacity(z.len());
        let mut big_z = Vec::with_capacity(z.len());
        let (mut acc_s, mut acc_z) = (NeumaierSum::default(), NeumaierSum::default());
        s_raw.push(0.0);
        big_z.push(0.0);
        for w in z.windows(2) {
            acc_s.add(gauss_legendre(|u| inv_rate(u, beta), w[0], w[1]));
            acc_z.add(gauss_legendre(|u| u * inv_rate(u, beta), w[0], w[1]));
            s_raw.push(acc_s.total());
            big_z.push(acc_z.total());
        }
        let s_last = *s_raw.last().expect("non-empty grid");
        if !((s_last - 1.0).abs() <= 1e-6) {
            return Err(Error::Precondition(format!(
                "curve for n = {n} ends at s = {s_last}, expected 1"
            )));
        }
        let s = s_raw.iter().map(|v| v / s_last).collect();
        Ok(ZCurve {
            n,
            beta,
            z,
            s,
            big_z,
            s_last,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Raw `s(n)` before normalisation; equals 1 up to quadrature error.
    pub fn s_last(&self) -> f64 {
        self.s_last
    }

    pub fn knot_count(&self) -> usize {
        self.z.len()
    }

    /// `(z_k, s_k)` knots.
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z.iter().copied().zip(self.s.iter().copied())
    }

    /// `z(s)`, monotone piecewise-linear between knots; clamps `s` to `[0, 1]`.
    pub fn z_at(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        if s >= 1.0 {
            return self.n as f64;
        }
        let k = self.s.partition_point(|&v| v < s);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let (z0, z1) = (self.z[k - 1], self.z[k]);
        if s1 <= s0 {
            return z1;
        }
        z0 + (z1 - z0) * ((s - s0) / (s1 - s0))
    }

    fn segment_of(&self, z: f64) -> usize {
        let k = self.z.partition_point(|&v| v <= z);
        k.clamp(1, self.z.len() - 1) - 1
    }

    /// `Z` as a function of the curve height: `int_0^z u / (1 + u + beta e^u) du`.
    pub fn big_z_at_z(&self, z: f64) -> f64 {
        let z = z.clamp(0.0, self.n as f64);
        let k = self.segment_of(z);
        self.big_z[k] + gauss_legendre(|u| u * inv_rate(u, self.beta), self.z[k], z)
    }

    /// Raw `s(z) = int_0^z du / (1 + u + beta e^u)`.
    pub fn s_at_z(&self, z: f64) -> f64 {
        let z = z.clamp(0.0, self.n as f64);
        let k = self.segment_of(z);
        self.s[k] * self.s_last + gauss_legendre(|u| inv_rate(u, self.beta), self.z[k], z)
    }

    /// `Z(s) = int_0^s z(u) du`.
    pub fn big_z_at(&self, s: f64) -> f64 {
        self.big_z_at_z(self.z_at(s))
    }

    /// `h = z'(s) exp(Z(s) - z(s))`, constant `1 + beta` along the exact curve.
    pub fn h_at(&self, s: f64) -> f64 {
        let z = self.z_at(s);
        let e = (-z).exp();
        ((1.0 + z) * e + self.beta) * self.big_z_at_z(z).exp()
    }

    pub(crate) fn z_knots(&self) -> &[f64] {
        &self.z
    }

    pub(crate) fn big_z_knots(&self) -> &[f64] {
        &self.big_z
    }

    pub(crate) fn inv_rate(&self, u: f64) -> f64 {
        inv_rate(u, self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_3_exceeds_one_fifth() {
        assert!(solve_beta(3).unwrap() > 0.2);
        // the inequality used to derive it
        assert!(beta_integral(0.2, 3.0).unwrap() > 1.0);
    }

    #[test]
    fn beta_defining_residual() {
        for n in [3, 4, 7, 10, 50, 500] {
            let b = solve_beta(n).unwrap();
            assert!((beta_integral(b, n as f64).unwrap() - 1.0).abs() <= 1e-8, "n = {n}");
        }
    }

    #[test]
    fn beta_out_of_range() {
        assert!(matches!(solve_beta(2), Err(Error::Domain { .. })));
        assert!(matches!(solve_beta(501), Err(Error::Domain { .. })));
    }

    #[test]
    fn alpha_value_and_two_routes() {
        let a = solve_alpha().unwrap();
        assert_eq!((a * 1000.0).floor(), 745.0);
        let residual = alpha_integral(a).unwrap() - 1.0;
        assert!(residual.abs() <= 1e-6);
        // the y-form and the z-form (y = e^-z) define the same constant
        assert_abs_diff_eq!(beta_limit().unwrap(), solve_beta_limit().unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn beta_increases_towards_limit() {
        let limit = beta_limit().unwrap();
        let mut prev = 0.0;
        for n in [3, 4, 5, 8, 10, 20, 30] {
            let b = solve_beta(n).unwrap();
            assert!(b > prev && b < limit, "n = {n}");
            prev = b;
        }
        for n in [3, 10, 50, 200] {
            assert!(beta_gap(n, None).unwrap() > 0.0);
        }
        assert!(beta_gap(50, Some(200)).unwrap() > 0.0);
    }

    #[test]
    fn gap_matches_direct_difference_where_resolvable() {
        let direct = solve_beta(5).unwrap() - solve_beta(3).unwrap();
        assert_abs_diff_eq!(beta_gap(3, Some(5)).unwrap(), direct, epsilon = 1e-9);
    }

    #[test]
    fn curve_endpoints_and_monotonicity() {
        for n in [3, 10, 60] {
            let c = z_curve(n).unwrap();
            assert_eq!(c.z_at(0.0), 0.0);
            assert!((c.z_at(1.0) - n as f64).abs() <= 1e-6 * n as f64);
            assert!((c.s_last() - 1.0).abs() <= 1e-6);
            assert!(c.knot_count() >= 10_000.max(100 * n as usize));
            let vals: Vec<f64> = (0..=200).map(|i| c.z_at(i as f64 / 200.0)).collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]), "n = {n}");
        }
    }

    #[test]
    fn curve_satisfies_the_ode_locally() {
        let c = z_curve(10).unwrap();
        for s in [0.1, 0.3, 0.5, 0.7] {
            let h = 1e-5;
            let slope = (c.z_at(s + h) - c.z_at(s - h)) / (2.0 * h);
            let z = c.z_at(s);
            let rhs = 1.0 + z + c.beta() * z.exp();
            assert!((slope - rhs).abs() <= 1e-3 * rhs, "s = {s}");
        }
    }
}
