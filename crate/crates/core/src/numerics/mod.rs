//! Numerical kernels shared by the rest of the crate.

mod lemmas;
mod quad;
mod roots;
mod zcurve;

pub use lemmas::{check_identity_exp, check_lemma_suite, identity_residuals, CurveQuadrature, LemmaCheck};
pub use quad::{gauss_legendre, integrate, integrate_pieces};
pub use roots::find_root_monotone;
pub use zcurve::{
    alpha_n, beta_gap, beta_integral, beta_limit, solve_alpha, solve_beta, solve_beta_limit, z_curve, ZCurve,
    MAX_CURVE_N, MIN_CURVE_N,
};

/// `(1 + lambda/n)^n`, the degree-`n` polynomial stand-in for `exp(lambda)`.
pub fn exp_n(lambda: f64, n: u32) -> f64 {
    assert!(n > 0, "exp_n needs n >= 1");
    (1.0 + lambda / n as f64).powi(n as i32)
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        iter.into_iter().for_each(|v| s.add(v));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_n_examples() {
        assert_eq!(exp_n(0.0, 7), 1.0);
        assert_eq!(exp_n(-1.0, 2), 0.25);
        assert_eq!(exp_n(-2.0, 4), 0.0625);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = NeumaierSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 1000.0);
    }
}
