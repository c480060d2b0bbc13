use super::{eligible_order, weitzman_order, BoxInstance, Interval};
use crate::numerics::NeumaierSum;
use crate::{Error, Result};

/// Largest instance the `2^m` enumeration accepts.
pub const MAX_EXHAUSTIVE_BOXES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhaustiveOutcome {
    pub value: f64,
    /// Feasibility vectors in which an opened, feasible box was passed over.
    pub exposed: usize,
}

/// Which policy [`exhaustive_value`] plays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Enumerated {
    Weitzman,
    Mx(Interval),
}

/// Value of a policy by summing over all `2^m` feasibility vectors, playing
/// the search step by step in each.
pub fn exhaustive_value(inst: &BoxInstance, policy: Enumerated) -> Result<ExhaustiveOutcome> {
    let m = inst.len();
    if m > MAX_EXHAUSTIVE_BOXES {
        return Err(Error::Capability(format!("{m} boxes is too many to enumerate")));
    }
    let order = match policy {
        Enumerated::Weitzman => weitzman_order(inst),
        Enumerated::Mx(x) => eligible_order(inst, x),
    };
    let boxes = inst.boxes();
    let mut total = NeumaierSum::default();
    let mut exposed = 0;
    for mask in 0u32..(1 << m) {
        let feasible = |i: usize| mask >> i & 1 == 1;
        let weight: f64 = (0..m)
            .map(|i| if feasible(i) { boxes[i].p } else { 1.0 - boxes[i].p })
            .product();
        if weight == 0.0 {
            continue;
        }
        let mut utility = 0.0;
        let mut chosen = None;
        for &i in &order {
            utility -= boxes[i].c;
            if feasible(i) {
                chosen = Some(i);
                break;
            }
        }
        if let Some(i) = chosen {
            utility += boxes[i].x;
        }
        // the procedure claims the first feasible box it opens
        let opened = chosen.map_or(order.len(), |i| order.iter().position(|&j| j == i).unwrap() + 1);
        if order[..opened].iter().any(|&j| feasible(j) && Some(j) != chosen) {
            exposed += 1;
        }
        total.add(weight * utility);
    }
    Ok(ExhaustiveOutcome {
        value: total.total(),
        exposed,
    })
}
