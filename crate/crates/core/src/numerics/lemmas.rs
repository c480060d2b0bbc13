//! Executable forms of the identities and inequalities behind the
//! `(1 - 6/n) alpha` guarantee of the oblivious ODE rule.
//!
//! Every check reports a signed margin: non-negative means it held.

use super::quad::{gauss_legendre, gauss_legendre_nodes};
use super::zcurve::{beta_integral, beta_limit, solve_alpha, ZCurve};
use super::{alpha_n, beta_gap, exp_n, NeumaierSum};
use crate::{Error, Result};
use serde::Serialize;

/// One named check from [`check_lemma_suite`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    /// The quantity that was evaluated (worst case over its grid).
    pub measured: f64,
    /// What it was compared against.
    pub reference: f64,
    pub margin: f64,
    pub pass: bool,
}

impl LemmaCheck {
    fn new(name: &str, measured: f64, reference: f64, margin: f64) -> Self {
        LemmaCheck {
            name: name.to_string(),
            measured,
            reference,
            margin,
            pass: margin >= 0.0,
        }
    }
}

/// Which multiplicative factor multiplies `min{z(t), q}` in the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Decay {
    /// `exp(-Z(t))`
    Exp,
    /// `exp_n(-Z(t))`
    ExpN,
}

/// Quadrature of `int_0^1 min{z(t), q} w(Z(t)) dt` against a [`ZCurve`].
///
/// The substitution `dt = dz / (1 + z + beta e^z)` turns the integral into one
/// over the knot segments in `z`, where the integrand is smooth apart from
/// the kink at `z = q`. Each segment carries an 8-point Gauss-Legendre rule;
/// the node weights and decay factors are tabulated once and prefix-summed so
/// each `q` costs one segment of fresh work.
#[derive(Debug, Clone)]
pub struct CurveQuadrature<'a> {
    curve: &'a ZCurve,
    /// Prefix sums over whole segments of `sum z dt w` and `sum dt w`.
    below: [Vec<f64>; 2],
    above: [Vec<f64>; 2],
}

impl<'a> CurveQuadrature<'a> {
    pub fn new(curve: &'a ZCurve) -> Self {
        let z = curve.z_knots();
        let segs = z.len() - 1;
        let mut below = [Vec::with_capacity(segs + 1), Vec::with_capacity(segs + 1)];
        let mut above = [Vec::with_capacity(segs + 1), Vec::with_capacity(segs + 1)];
        let mut acc_b = [NeumaierSum::default(); 2];
        let mut acc_a = [NeumaierSum::default(); 2];
        for d in 0..2 {
            below[d].push(0.0);
            above[d].push(0.0);
        }
        for k in 0..segs {
            let mut seg_b = [0.0; 2];
            let mut seg_a = [0.0; 2];
            for (x, w) in gauss_legendre_nodes(z[k], z[k + 1]) {
                let dt = w * curve.inv_rate(x);
                for (d, decay) in [Decay::Exp, Decay::ExpN].into_iter().enumerate() {
                    let f = self_decay(curve, k, x, decay);
                    seg_b[d] += x * dt * f;
                    seg_a[d] += dt * f;
                }
            }
            for d in 0..2 {
                acc_b[d].add(seg_b[d]);
                acc_a[d].add(seg_a[d]);
                below[d].push(acc_b[d].total());
                above[d].push(acc_a[d].total());
            }
        }
        CurveQuadrature { curve, below, above }
    }

    fn integral(&self, q: f64, decay: Decay) -> f64 {
        let c = self.curve;
        let z = c.z_knots();
        let d = decay as usize;
        let last = z.len() - 1;
        let q = q.clamp(0.0, z[last]);
        // segment j holds q
        let j = (z.partition_point(|&v| v <= q).clamp(1, last)) - 1;
        let whole_below = self.below[d][j];
        let whole_above = self.above[d][last] - self.above[d][j + 1];
        let f = |x: f64| c.inv_rate(x) * self_decay(c, j, x, decay);
        let part = gauss_legendre(|x| x * f(x), z[j], q) + q * gauss_legendre(f, q, z[j + 1]);
        whole_below + q * whole_above + part
    }

    /// `int_0^1 min{z(t), q} exp(-Z(t)) dt`.
    pub fn with_exp(&self, q: f64) -> f64 {
        self.integral(q, Decay::Exp)
    }

    /// `int_0^1 min{z(t), q} exp_n(-Z(t)) dt`.
    pub fn with_exp_n(&self, q: f64) -> f64 {
        self.integral(q, Decay::ExpN)
    }
}

fn self_decay(curve: &ZCurve, seg: usize, x: f64, decay: Decay) -> f64 {
    let z0 = curve.z_knots()[seg];
    let big_z = curve.big_z_knots()[seg] + gauss_legendre(|u| u * curve.inv_rate(u), z0, x);
    match decay {
        Decay::Exp => (-big_z).exp(),
        Decay::ExpN => exp_n(-big_z, curve.n()),
    }
}

/// Closed-form side of the identity: `(1 - e^-q - q e^-n) / (1 + beta_n)`.
fn identity_lhs(curve: &ZCurve, q: f64) -> f64 {
    let n = curve.n() as f64;
    (-(-q).exp_m1() - q * (-n).exp()) / (1.0 + curve.beta())
}

/// `|(1 - e^-q - q e^-n)/(1 + beta_n) - int_0^1 min{z(t), q} e^{-Z(t)} dt|`.
pub fn check_identity_exp(curve: &ZCurve, q: f64) -> f64 {
    identity_residuals(curve, &[q])[0]
}

/// [`check_identity_exp`] for many `q`, sharing one quadrature table.
pub fn identity_residuals(curve: &ZCurve, qs: &[f64]) -> Vec<f64> {
    let quad = CurveQuadrature::new(curve);
    qs.iter()
        .map(|&q| (identity_lhs(curve, q) - quad.with_exp(q)).abs())
        .collect()
}

fn open_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (1..=points).map(move |k| lo + (hi - lo) * k as f64 / (points + 1) as f64)
}

fn closed_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
}

fn worst<I: Iterator<Item = (f64, f64)>>(it: I) -> (f64, f64) {
    // (margin, measured) with the smallest margin
    it.fold((f64::INFINITY, f64::NAN), |acc, m| if m.0 < acc.0 { m } else { acc })
}

/// Runs every lemma check for `n` on the dense grids:
/// `lambda in [0, 2)` step 0.01, 200 interior `q` points in `(0, n)` and 200
/// points `r in [0, 1]`.
pub fn check_lemma_suite(n: u32) -> Result<Vec<LemmaCheck>> {
    if n < 3 {
        return Err(Error::domain("n", format!("lemma suite needs n >= 3, got {n}")));
    }
    let curve = ZCurve::new(n)?;
    let nf = n as f64;
    let beta = curve.beta();
    let alpha = solve_alpha()?;
    let beta_inf = beta_limit()?;
    let mut out = Vec::new();

    let residual = (beta_integral(beta, nf)? - 1.0).abs();
    out.push(LemmaCheck::new(
        "beta_defining_residual",
        residual,
        1e-8,
        1e-8 - residual,
    ));

    let alpha_err = (alpha - 0.745).abs();
    out.push(LemmaCheck::new("alpha_three_decimals", alpha, 0.745, 5e-4 - alpha_err));

    let beta_3 = super::solve_beta(3)?;
    out.push(LemmaCheck::new("beta_3_above_one_fifth", beta_3, 0.2, beta_3 - 0.2));
    out.push(LemmaCheck::new("beta_n_above_one_fifth", beta, 0.2, beta - 0.2));

    // beta_n < beta: sign from the cancellation-free gap, plus the raw values
    let gap = beta_gap(n, None)?;
    out.push(LemmaCheck::new("beta_gap_to_limit", gap, 0.0, gap));
    let step = beta_gap(n, Some(n + 1))?;
    out.push(LemmaCheck::new("beta_n_increasing", step, 0.0, step));
    out.push(LemmaCheck::new(
        "beta_n_not_above_limit",
        beta,
        beta_inf,
        beta_inf - beta + 1e-12,
    ));

    let z1 = curve.z_at(1.0);
    out.push(LemmaCheck::new("z_curve_endpoint", z1, nf, 1e-6 * nf - (z1 - nf).abs()));
    let s_err = (curve.s_last() - 1.0).abs();
    out.push(LemmaCheck::new("z_curve_total_time", curve.s_last(), 1.0, 1e-6 - s_err));

    let rs: Vec<f64> = closed_grid(0.0, 1.0, 200).collect();
    let zs: Vec<f64> = rs.iter().map(|&r| curve.z_at(r)).collect();
    let monotone = zs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    out.push(LemmaCheck::new("z_increasing", monotone, 0.0, monotone));

    let (z_margin, z_max) = worst(rs.iter().map(|&r| {
        let v = curve.big_z_at(r);
        (2.0 - v, v)
    }));
    out.push(LemmaCheck::new("big_z_below_two", z_max, 2.0, z_margin));
    // e^{Z(1)} = (1 + beta) e^n / (1 + n + beta e^n), evaluated stably
    let z1_closed = (1.0 + beta).ln() - ((1.0 + nf) * (-nf).exp() + beta).ln();
    let z1_err = (curve.big_z_at(1.0) - z1_closed).abs();
    out.push(LemmaCheck::new("big_z_one_closed_form", z1_err, 1e-8, 1e-8 - z1_err));

    let h_ref = 1.0 + beta;
    let (h_margin, h_dev) = worst(rs.iter().map(|&r| {
        let dev = (curve.h_at(r) - h_ref).abs() / h_ref;
        (1e-5 - dev, dev)
    }));
    out.push(LemmaCheck::new("h_constant", h_dev, 1e-5, h_margin));

    let quad = CurveQuadrature::new(&curve);
    let qs: Vec<f64> = open_grid(0.0, nf, 200).collect();
    let (id_margin, id_res) = worst(qs.iter().map(|&q| {
        let r = (identity_lhs(&curve, q) - quad.with_exp(q)).abs();
        (1e-6 - r, r)
    }));
    out.push(LemmaCheck::new("identity_exp", id_res, 1e-6, id_margin));

    let lambdas: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
    let lower = (1.0 - 2.0 / nf).powi(2);
    let (lo_margin, lo_at) = worst(lambdas.iter().map(|&l| (exp_n(-l, n) - lower * (-l).exp(), l)));
    out.push(LemmaCheck::new("expn_approx_lower", lo_at, 0.0, lo_margin));
    let (up_margin, up_at) = worst(lambdas.iter().map(|&l| ((-l).exp() - exp_n(-l, n), l)));
    out.push(LemmaCheck::new("expn_approx_upper", up_at, 0.0, up_margin));

    let (lam_margin, lam_at) = worst(
        (0..=(100 * n.max(2)))
            .map(|k| k as f64 * 0.01)
            .map(|l| (l.exp_m1() - l * l, l)),
    );
    out.push(LemmaCheck::new("lambda_square_below_expm1", lam_at, 0.0, lam_margin));

    let (at_margin, at_q) = worst(qs.iter().map(|&q| {
        let lhs = (1.0 - 1.0 / nf) * (1.0 - exp_n(-q, n));
        (-(-q).exp_m1() - lhs, q)
    }));
    out.push(LemmaCheck::new("almost_there", at_q, 0.0, at_margin));

    let (it_margin, it_q) = worst(qs.iter().map(|&q| {
        let lhs = (1.0 - 5.0 / nf) / (1.0 + beta) * -(-q).exp_m1();
        (quad.with_exp_n(q) - lhs, q)
    }));
    out.push(LemmaCheck::new("integral_term", it_q, 0.0, it_margin));

    let a_n = alpha_n(n)?;
    let (ex_margin, ex_q) = worst(qs.iter().map(|&q| {
        let lhs = a_n * (1.0 - exp_n(-q, n));
        (quad.with_exp_n(q) - lhs, q)
    }));
    out.push(LemmaCheck::new("expn_inequality", ex_q, a_n, ex_margin));

    // (1 - 6/n) alpha <= alpha_n is only meaningful once the factor is positive
    if n > 6 {
        let target = (1.0 - 6.0 / nf) * alpha;
        out.push(LemmaCheck::new("alpha_n_above_scaled_alpha", a_n, target, a_n - target));
    }
    Ok(out)
}
