use super::{JointDist, Rect};
use crate::{Error, Result};
use std::f64::consts::E;

/// Two-rectangle instance on which no single-proposal mechanism beats half
/// of `E[x_*]` by more than `O(1/n + 1/H)`.
///
/// `Q1 = [1 - 1/H, 1 + 1/H] x [2, 3]` with weight `1 - 1/(nH)` and
/// `Q2 = [H, H + 2] x [0, 1]` with weight `1/(nH)`.
pub fn hard_instance_half(h: f64, n: u32) -> Result<JointDist> {
    if !(h >= 100.0) || n < 2 {
        return Err(Error::domain(
            "hard instance",
            format!("needs H >= 100, n >= 2; got H = {h}, n = {n}"),
        ));
    }
    let rare = 1.0 / (n as f64 * h);
    JointDist::rect_mixture(vec![
        Rect {
            x_lo: 1.0 - 1.0 / h,
            x_hi: 1.0 + 1.0 / h,
            y_lo: 2.0,
            y_hi: 3.0,
            weight: 1.0 - rare,
        },
        Rect {
            x_lo: h,
            x_hi: h + 2.0,
            y_lo: 0.0,
            y_hi: 1.0,
            weight: rare,
        },
    ])
}

/// `1 - (1-p)^n + (1-p)^(n-1)`: the `H -> inf` principal value of a mechanism
/// accepting each `Q1` sample with probability `p` and all of `Q2`.
pub fn mech_value_half_instance(p: f64, n: u32) -> f64 {
    let miss = 1.0 - p;
    1.0 - miss.powi(n as i32) + miss.powi(n as i32 - 1)
}

/// Maximiser `p = 1/n` of [`mech_value_half_instance`] and its value
/// `1 + (1/n)(1 - 1/n)^(n-1)`.
pub fn half_instance_best_p(n: u32) -> (f64, f64) {
    let p = 1.0 / n as f64;
    (p, mech_value_half_instance(p, n))
}

/// `(1 - e^-phi) ((e-2)/(e-1) + 1/((e-1) phi))`, the ratio achieved by the
/// best `y`-oblivious mechanism on the `1 - 1/e` tightness instance.
pub fn ratio_curve_phi(phi: f64) -> f64 {
    let hit = -(-phi).exp_m1();
    hit * ((E - 2.0) / (E - 1.0) + 1.0 / ((E - 1.0) * phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::expected_max;
    use crate::ONE_MINUS_INV_E;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ratio_curve_values() {
        assert_abs_diff_eq!(ratio_curve_phi(1.0), ONE_MINUS_INV_E, epsilon = 1e-15);
        // (1 - e^-phi)/phi -> 1
        assert_abs_diff_eq!(ratio_curve_phi(1e-9), 1.0 / (E - 1.0), epsilon = 1e-8);
        // direct evaluation in a second arrangement
        let direct = (1.0 - (-2f64).exp()) * ((E - 2.0) * 2.0 + 1.0) / ((E - 1.0) * 2.0);
        assert_abs_diff_eq!(ratio_curve_phi(2.0), direct, epsilon = 1e-14);
        assert!((ratio_curve_phi(2.0) - 0.6131).abs() < 5e-5);
    }

    #[test]
    fn ratio_curve_peaks_at_one() {
        let peak = ratio_curve_phi(1.0);
        for k in 1..=2000 {
            assert!(ratio_curve_phi(k as f64 * 0.01) <= peak);
        }
    }

    #[test]
    fn half_instance_arithmetic_and_argmax() {
        assert_abs_diff_eq!(mech_value_half_instance(0.5, 2), 1.25);
        for n in [2, 10, 1000] {
            let (p, best) = half_instance_best_p(n);
            for k in 0..=1000 {
                let q = k as f64 / 1000.0;
                assert!(mech_value_half_instance(q, n) <= best + 1e-15, "n={n} q={q}");
            }
            assert_abs_diff_eq!(best, 1.0 + p * (1.0 - p).powi(n as i32 - 1), epsilon = 1e-15);
        }
    }

    #[test]
    fn hard_instance_shape() {
        let j = hard_instance_half(1e4, 1000).unwrap();
        let JointDist::RectMixture(r) = &j else { panic!() };
        assert_abs_diff_eq!(r[0].weight + r[1].weight, 1.0, epsilon = 1e-15);
        assert!(r[0].y_lo > r[1].y_hi);
        let e = expected_max(&[j.x_marginal()], &[1000]).unwrap();
        // 2 - O(1/H); the exact value sits a hair above 2
        assert!((e - 2.0).abs() <= 1e-3, "{e}");
        assert!(hard_instance_half(10.0, 5).is_err());
    }
}
