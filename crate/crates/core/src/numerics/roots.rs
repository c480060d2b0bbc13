use crate::{Error, Result};

const MAX_ITER: u32 = 400;

/// Bisection on a monotone `g` over `[lo, hi]`.
///
/// The returned root lies in a bracket of width at most `tol` whose endpoints
/// carry opposite signs of `g` (or on an exact zero).
pub fn find_root_monotone<G>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    let eval = |v: f64| -> Result<f64> {
        let y = g(v);
        if y.is_nan() {
            Err(Error::Evaluation { at: v })
        } else {
            Ok(y)
        }
    };
    let mut g_lo = eval(lo)?;
    let g_hi = eval(hi)?;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    for _ in 0..MAX_ITER {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = eval(mid)?;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
