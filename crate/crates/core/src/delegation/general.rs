use super::{agent_best_response, EligibleSet, SolutionPoint};
use crate::{Error, Result};
use rand::Rng;

/// Agent utility when the mechanism picks a solution the agent never sampled.
pub const UNSAMPLED_PENALTY: f64 = -1.0;

/// A finite mechanism `(Sigma, g)` over a finite solution space `Omega`,
/// together with an agent strategy on all sample sequences of length `n`.
///
/// Signals are `0..alloc.len()`; `alloc[s]` is an index into `omega` or
/// `None` for the null outcome. Sequences are encoded in base `|Omega|`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralMechanism {
    omega: Vec<SolutionPoint>,
    n: usize,
    alloc: Vec<Option<usize>>,
    strategy: Vec<usize>,
}

impl GeneralMechanism {
    pub fn new(omega: Vec<SolutionPoint>, n: usize, alloc: Vec<Option<usize>>, strategy: Vec<usize>) -> Result<Self> {
        validate_omega(&omega)?;
        if n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        if alloc.iter().flatten().any(|&w| w >= omega.len()) {
            return Err(Error::invalid("alloc", "refers outside Omega"));
        }
        if !alloc.contains(&None) {
            return Err(Error::invalid("alloc", "some signal must allocate the null outcome"));
        }
        let m = Self::count(omega.len(), n)?;
        if strategy.len() != m || strategy.iter().any(|&s| s >= alloc.len()) {
            return Err(Error::invalid(
                "strategy",
                format!("must map all {m} sequences to signals"),
            ));
        }
        Ok(GeneralMechanism {
            omega,
            n,
            alloc,
            strategy,
        })
    }

    /// Pairs `alloc` with the exhaustive best response, ties going to the
    /// smallest signal.
    pub fn with_best_response(omega: Vec<SolutionPoint>, n: usize, alloc: Vec<Option<usize>>) -> Result<Self> {
        validate_omega(&omega)?;
        if alloc.is_empty() || alloc.iter().flatten().any(|&w| w >= omega.len()) {
            return Err(Error::invalid("alloc", "needs signals allocating inside Omega"));
        }
        let m = Self::count(omega.len(), n)?;
        let mut mech = GeneralMechanism {
            omega,
            n,
            alloc,
            strategy: vec![0; m],
        };
        for code in 0..m {
            let seq = mech.decode(code);
            let mut best = 0;
            for s in 1..mech.alloc.len() {
                if mech.utility(&seq, s) > mech.utility(&seq, best) {
                    best = s;
                }
            }
            mech.strategy[code] = best;
        }
        let GeneralMechanism {
            omega,
            n,
            alloc,
            strategy,
        } = mech;
        GeneralMechanism::new(omega, n, alloc, strategy)
    }

    /// A random allocation over `omega` with `signals` signals (at least one
    /// allocating the null outcome) and its best response.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, omega: Vec<SolutionPoint>, n: usize, signals: usize) -> Result<Self> {
        let signals = signals.max(1);
        let mut alloc: Vec<Option<usize>> = (0..signals)
            .map(|_| {
                let k = rng.gen_range(0..=omega.len());
                (k < omega.len()).then_some(k)
            })
            .collect();
        if !alloc.contains(&None) {
            let s = rng.gen_range(0..signals);
            alloc[s] = None;
        }
        GeneralMechanism::with_best_response(omega, n, alloc)
    }

    fn count(omega: usize, n: usize) -> Result<usize> {
        u32::try_from(n)
            .ok()
            .and_then(|n| omega.checked_pow(n))
            .filter(|&m| m <= 1 << 20)
            .ok_or_else(|| Error::Capability(format!("|Omega|^n too large to enumerate ({omega}^{n})")))
    }

    pub fn omega(&self) -> &[SolutionPoint] {
        &self.omega
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sequence_count(&self) -> usize {
        self.strategy.len()
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let k = self.omega.len();
        (0..self.n)
            .map(|_| {
                let d = code % k;
                code /= k;
                d
            })
            .collect()
    }

    /// Agent utility of sending `signal` after observing `seq`.
    pub fn utility(&self, seq: &[usize], signal: usize) -> f64 {
        match self.alloc[signal] {
            None => 0.0,
            Some(w) if seq.contains(&w) => self.omega[w].y,
            Some(_) => UNSAMPLED_PENALTY,
        }
    }

    /// Interim allocation: the outcome when the agent plays the strategy.
    pub fn interim(&self, code: usize) -> Option<usize> {
        let seq = self.decode(code);
        self.alloc[self.strategy[code]].filter(|w| seq.contains(w))
    }
}

fn validate_omega(omega: &[SolutionPoint]) -> Result<()> {
    if omega.is_empty() {
        return Err(Error::invalid("omega", "must be non-empty"));
    }
    if omega.iter().any(|p| !(p.y > 0.0) || !(p.x >= 0.0)) {
        return Err(Error::invalid("omega", "needs x >= 0 and y > 0"));
    }
    let mut ys: Vec<f64> = omega.iter().map(|p| p.y).collect();
    ys.sort_by(f64::total_cmp);
    if ys.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("omega", "agent utilities must be distinct"));
    }
    Ok(())
}

/// `|Omega|` random solutions with distinct positive agent utilities.
pub fn random_omega<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Vec<SolutionPoint> {
    let mut out: Vec<SolutionPoint> = Vec::with_capacity(size);
    while out.len() < size {
        let p = SolutionPoint::new(rng.gen_range(0.0..10.0), rng.gen_range(0.1..10.0));
        if out.iter().all(|q| q.y != p.y) {
            out.push(p);
        }
    }
    out
}

/// Outcome of the exhaustive comparison in [`spm_of_general`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpmReport {
    pub sequences: usize,
    /// `|R|`.
    pub range_size: usize,
    /// Sequences (as `Omega` indices) where the allocations differ.
    pub mismatches: Vec<Vec<usize>>,
}

impl SpmReport {
    pub fn holds(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// The single-proposal mechanism whose eligible set is the range of `m`'s
/// interim allocation, compared with `m` on every sequence in `Omega^n`.
///
/// Fails if the strategy stored in `m` is not a best response.
pub fn spm_of_general(m: &GeneralMechanism) -> Result<(EligibleSet, SpmReport)> {
    for code in 0..m.sequence_count() {
        let seq = m.decode(code);
        let played = m.utility(&seq, m.strategy[code]);
        if let Some(s) = (0..m.alloc.len()).find(|&s| m.utility(&seq, s) > played) {
            return Err(Error::Precondition(format!(
                "strategy is not a best response: on {seq:?} signal {s} gives {} > {played}",
                m.utility(&seq, s)
            )));
        }
    }
    let mut in_range = vec![false; m.omega.len()];
    for code in 0..m.sequence_count() {
        if let Some(w) = m.interim(code) {
            in_range[w] = true;
        }
    }
    let range: Vec<SolutionPoint> = (0..m.omega.len())
        .filter(|&w| in_range[w])
        .map(|w| m.omega[w])
        .collect();
    let r = if range.is_empty() {
        EligibleSet::None
    } else {
        EligibleSet::Explicit(range.clone())
    };
    let mut mismatches = Vec::new();
    for code in 0..m.sequence_count() {
        let seq = m.decode(code);
        let samples: Vec<SolutionPoint> = seq.iter().map(|&w| m.omega[w]).collect();
        let spm = agent_best_response(&samples, &r).map(|i| samples[i]);
        let general = m.interim(code).map(|w| m.omega[w]);
        if spm != general {
            mismatches.push(seq);
        }
    }
    Ok((
        r,
        SpmReport {
            sequences: m.sequence_count(),
            range_size: range.len(),
            mismatches,
        },
    ))
}
