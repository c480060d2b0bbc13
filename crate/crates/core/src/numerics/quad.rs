use super::NeumaierSum;
use crate::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a <= b) {
        return Err(Error::domain("integration bounds", format!("[{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let eval = |v: f64| -> Result<f64> {
        let y = f(v);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Evaluation { at: v })
        }
    };
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&eval, a, b, fa, fm, fb, whole, tol.max(f64::MIN_POSITIVE), MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(eval: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return Ok(left + right + delta / 15.0);
    }
    let l = simpson_step(eval, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(eval, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Integrates over consecutive pieces `[b_0, b_1], [b_1, b_2], ...`, splitting
/// the tolerance evenly. Breakpoints must be sorted.
pub fn integrate_pieces<F>(f: F, breaks: &[f64], tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if breaks.len() < 2 {
        return Ok(0.0);
    }
    let per = tol / (breaks.len() - 1) as f64;
    let mut sum = NeumaierSum::default();
    for w in breaks.windows(2) {
        sum.add(integrate(&f, w[0], w[1], per)?);
    }
    Ok(sum.total())
}

// 8-point Gauss-Legendre nodes/weights on [-1, 1] (positive half).
#[allow(clippy::excessive_precision)]
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
#[allow(clippy::excessive_precision)]
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Fixed 8-point Gauss-Legendre rule on `[a, b]`, exact for polynomials of
/// degree 15. Used on short segments where adaptivity buys nothing.
pub fn gauss_legendre<F>(f: F, a: f64, b: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    gauss_legendre_nodes(a, b).map(|(x, w)| w * f(x)).sum()
}

/// The nodes and scaled weights of the 8-point rule on `[a, b]`.
pub(crate) fn gauss_legendre_nodes(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (0..8).map(move |i| {
        let (x, w) = (GL8_NODES[i / 2], GL8_WEIGHTS[i / 2]);
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        (mid + sign * half * x, half * w)
    })
}
