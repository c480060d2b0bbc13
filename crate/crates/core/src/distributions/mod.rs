//! Finite mixtures of point masses and uniform pieces, joint laws for `(x, y)`
//! and the two tightness instances.

mod dist1d;
mod joint;
mod tightness;

pub use dist1d::Dist1D;
pub use joint::{JointDist, Rect};
pub use tightness::{half_instance_best_p, hard_instance_half, mech_value_half_instance, ratio_curve_phi};

use crate::numerics::{integrate, NeumaierSum};
use crate::{Error, Result};

/// Tolerance on the total mass of a descriptor.
pub const MASS_TOL: f64 = 1e-12;

const EMAX_TOL: f64 = 1e-12;

/// `E[max]` of independent draws, `counts[i]` of them from `ds[i]`.
///
/// Integrates `1 - prod F_i(v)^counts[i]` over `[0, sup]` piece by piece
/// between the union of all breakpoints, where every CDF is linear.
pub fn expected_max(ds: &[Dist1D], counts: &[u32]) -> Result<f64> {
    if ds.len() != counts.len() {
        return Err(Error::invalid(
            "pool",
            format!("{} distributions but {} counts", ds.len(), counts.len()),
        ));
    }
    if ds.is_empty() || counts.iter().all(|&c| c == 0) {
        return Ok(0.0);
    }
    if let Some(d) = ds.iter().find(|d| d.min_support() < 0.0) {
        return Err(Error::domain(
            "support",
            format!("E[max] needs nonnegative support, found {}", d.min_support()),
        ));
    }
    let pieces = merged_breaks(ds);
    let mut total = NeumaierSum::default();
    let mut lo = 0.0;
    for &hi in pieces.iter().filter(|&&b| b > 0.0) {
        let lines: Vec<(f64, f64)> = ds.iter().map(|d| d.linear_piece(lo, hi)).collect();
        let survive = |v: f64| {
            let prod: f64 = lines
                .iter()
                .zip(counts)
                .map(|(&(f0, dens), &c)| (f0 + dens * (v - lo)).min(1.0).powi(c as i32))
                .product();
            1.0 - prod
        };
        total.add(integrate(survive, lo, hi, EMAX_TOL)?);
        lo = hi;
    }
    Ok(total.total())
}

/// Sorted union of breakpoints of several distributions.
pub(crate) fn merged_breaks(ds: &[Dist1D]) -> Vec<f64> {
    let mut all: Vec<f64> = ds.iter().flat_map(|d| d.breaks()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}
