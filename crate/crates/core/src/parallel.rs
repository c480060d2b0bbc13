//! Deterministic fan-out of independent trials.
//!
//! Trial values are always collected in index order before any reduction, so
//! the sequential and parallel paths produce bit-identical results.

use crate::numerics::NeumaierSum;
use crate::rng::{trial_rng, TrialRng, MAX_TRIALS};
use crate::{Error, Result};

/// How trial batches are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is off.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..count`, returning results in index order.
pub fn map_indexed<T, F>(count: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..count).map(f).collect()
}

/// Seeded Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Separates experiments sharing a seed.
    pub stream: u64,
    pub exec: Execution,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            stream: 0,
            exec: Execution::default(),
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Precondition("Monte Carlo needs at least one trial".into()));
        }
        if self.trials >= MAX_TRIALS {
            return Err(Error::Precondition(format!("at most {MAX_TRIALS} trials per stream")));
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    /// A value known in closed form.
    pub fn exact(mean: f64) -> Self {
        Estimate {
            mean,
            stderr: 0.0,
            trials: 0,
        }
    }

    /// Mean and `std / sqrt(n)` with compensated, index-ordered summation.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
            };
        }
        let mut sum = NeumaierSum::default();
        values.iter().for_each(|&v| sum.add(v));
        let mean = sum.total() / n as f64;
        let mut sq = NeumaierSum::default();
        values.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
        let var = if n > 1 { sq.total() / (n - 1) as f64 } else { 0.0 };
        Estimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            trials: n as u64,
        }
    }
}

/// Runs `trial` once per trial index with its own generator.
pub fn run_trials<T, F>(cfg: &McConfig, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut TrialRng) -> T + Sync + Send,
{
    cfg.validate()?;
    let (seed, stream) = (cfg.seed, cfg.stream);
    Ok(map_indexed(cfg.trials as usize, cfg.exec, |i| {
        let mut rng = trial_rng(seed, stream, i as u64);
        trial(&mut rng)
    }))
}

/// [`run_trials`] reduced to an [`Estimate`].
pub fn estimate<F>(cfg: &McConfig, trial: F) -> Result<Estimate>
where
    F: Fn(&mut TrialRng) -> f64 + Sync + Send,
{
    Ok(Estimate::from_values(&run_trials(cfg, trial)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let base = McConfig::new(10_000, 9);
        let f = |r: &mut TrialRng| r.gen::<f64>().powi(3);
        let a = estimate(&base.with_exec(Execution::Sequential), f).unwrap();
        let b = estimate(&base.with_exec(Execution::Parallel), f).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = McConfig::new(0, 1);
        assert!(matches!(estimate(&cfg, |_| 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn estimate_of_constant_has_zero_stderr() {
        let e = Estimate::from_values(&[2.5; 17]);
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.stderr, 0.0);
    }
}
