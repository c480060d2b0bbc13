use super::{experiment_rows, write_csv, DistSpec, Experiment, ExperimentConfig, InstanceSpec, Mode, ReportRow};
use crate::distributions::Rect;
use crate::parallel::Execution;
use crate::Result;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

/// Short names of the acceptance criteria, indexed from 1.
pub const CRITERIA: [&str; 8] = [
    "half guarantee",
    "1-1/e guarantee",
    "0.745 guarantee",
    "lemma suite",
    "bridge and reduction",
    "threshold mechanisms on boxes",
    "budgeted guarantee",
    "tightness",
];

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    /// 1-based index into [`CRITERIA`].
    pub criterion: usize,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub criterion: usize,
    pub rows: Vec<ReportRow>,
    pub elapsed: Duration,
}

fn atoms(a: &[(f64, f64)]) -> DistSpec {
    DistSpec::Atoms(a.iter().map(|&(v, m)| [v, m]).collect())
}

fn unif(lo: f64, hi: f64) -> DistSpec {
    DistSpec::Uniform([lo, hi])
}

fn pool(dists: Vec<DistSpec>, counts: Vec<u32>) -> InstanceSpec {
    InstanceSpec::Pool { dists, counts }
}

fn unif_product() -> InstanceSpec {
    InstanceSpec::Product {
        x: unif(0.0, 1.0),
        y: unif(0.0, 1.0),
    }
}

/// Every experiment of the verification suite, in run order.
pub fn suite_entries(seed: u64) -> Vec<SuiteEntry> {
    use Experiment as E;
    let cfg = |e| ExperimentConfig::new(e).with_seed(seed);
    let mut out: Vec<SuiteEntry> = Vec::new();
    let mut add = |criterion: usize, config: ExperimentConfig| out.push(SuiteEntry { criterion, config });

    let discrete_pools = [
        pool(
            vec![atoms(&[(0.0, 0.5), (1.0, 0.5)]), atoms(&[(0.3, 0.7), (2.0, 0.3)])],
            vec![1, 1],
        ),
        pool(
            vec![
                atoms(&[(1.0, 0.25), (2.0, 0.25), (3.0, 0.25), (4.0, 0.25)]),
                atoms(&[(0.0, 0.9), (10.0, 0.1)]),
            ],
            vec![2, 1],
        ),
        pool(
            vec![atoms(&[(0.0, 0.99), (100.0, 0.01)]), DistSpec::Point(1.0)],
            vec![2, 1],
        ),
        pool(
            vec![
                atoms(&[(1.0, 0.5), (2.0, 0.5)]),
                atoms(&[(1.0, 0.5), (3.0, 0.5)]),
                atoms(&[(0.0, 0.8), (5.0, 0.2)]),
                DistSpec::Point(2.0),
            ],
            vec![1, 1, 1, 1],
        ),
        pool(
            vec![
                atoms(&[(0.0, 0.6), (1.0, 0.3), (4.0, 0.1)]),
                atoms(&[(0.5, 0.5), (1.5, 0.5)]),
            ],
            vec![3, 1],
        ),
    ];
    for inst in discrete_pools {
        add(1, cfg(E::ProphetHalf).with_instance(inst));
    }
    let continuous_pools = [
        pool(vec![unif(0.0, 1.0), unif(0.0, 3.0)], vec![2, 1]),
        pool(
            vec![
                DistSpec::Mixture {
                    atoms: vec![],
                    segments: vec![[0.0, 1.0, 0.5], [4.0, 5.0, 0.5]],
                },
                unif(1.0, 2.0),
            ],
            vec![1, 3],
        ),
        pool(vec![unif(0.0, 10.0), unif(2.0, 3.0)], vec![1, 4]),
    ];
    for inst in continuous_pools {
        add(
            1,
            cfg(E::ProphetHalf)
                .with_instance(inst)
                .with_mode(Mode::MonteCarlo)
                .with_trials(100_000),
        );
    }
    let points = InstanceSpec::Points {
        atoms: vec![[1.0, 2.0, 0.5], [6.0, 0.5, 0.3], [3.0, 4.0, 0.2]],
    };
    add(1, cfg(E::DelegationPart1).with_instance(points).with_n(3));
    add(1, cfg(E::DelegationPart1).with_instance(unif_product()).with_n(5));
    // the two-rectangle hard instance with H = 100, n = 10
    let (h, n) = (100.0, 10.0);
    let rects = vec![
        Rect {
            x_lo: 1.0 - 1.0 / h,
            x_hi: 1.0 + 1.0 / h,
            y_lo: 2.0,
            y_hi: 3.0,
            weight: 1.0 - 1.0 / (n * h),
        },
        Rect {
            x_lo: h,
            x_hi: h + 2.0,
            y_lo: 0.0,
            y_hi: 1.0,
            weight: 1.0 / (n * h),
        },
    ];
    add(
        1,
        cfg(E::DelegationPart1)
            .with_instance(InstanceSpec::Rects { rects })
            .with_n(10)
            .with_trials(100_000),
    );

    for n in [1, 2, 5, 20] {
        add(
            2,
            cfg(E::ProphetOneMinusInvE)
                .with_instance(InstanceSpec::Iid { x: unif(0.0, 1.0) })
                .with_n(n),
        );
        add(2, cfg(E::DelegationPart2).with_instance(unif_product()).with_n(n));
    }

    for n in [10, 50, 100] {
        add(
            3,
            cfg(E::DelegationPart3)
                .with_instance(unif_product())
                .with_n(n)
                .with_trials(1_000_000),
        );
    }
    for n in [10, 50, 100] {
        let timed = InstanceSpec::Timed {
            x: unif(0.0, 1.0),
            t: unif(0.0, 1.0),
        };
        add(
            3,
            cfg(E::Prophet0745).with_instance(timed).with_n(n).with_trials(200_000),
        );
    }

    for n in [3, 5, 10, 50, 200] {
        add(4, cfg(E::LemmaSuite).with_n(n));
    }

    let mechanisms = InstanceSpec::RandomMechanisms {
        count: 100,
        max_omega: 4,
        max_n: 3,
    };
    add(5, cfg(E::SpmLemma).with_instance(mechanisms).with_trials(10_000));

    add(
        6,
        cfg(E::BinaryMx).with_instance(InstanceSpec::RandomBoxes { count: 200, max_m: 12 }),
    );
    add(
        7,
        cfg(E::Budgeted0316).with_instance(InstanceSpec::RandomBoxes { count: 100, max_m: 10 }),
    );

    add(8, cfg(E::TightnessHalf).with_n(1000));
    add(8, cfg(E::TightnessOneMinusInvE));
    out
}

/// Runs every suite entry; entry `i` uses random stream `i`.
pub fn run_suite(seed: u64, exec: Execution) -> Result<Vec<SuiteResult>> {
    suite_entries(seed)
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let start = Instant::now();
            let rows = experiment_rows(&e.config, i as u64, exec)?;
            Ok(SuiteResult {
                criterion: e.criterion,
                rows,
                elapsed: start.elapsed(),
            })
        })
        .collect()
}

/// Runs the suite and writes `verify_all.csv` into `out_dir`.
pub fn verify_all(seed: u64, out_dir: &Path, exec: Execution) -> Result<(PathBuf, Vec<SuiteResult>)> {
    let results = run_suite(seed, exec)?;
    let rows: Vec<ReportRow> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    let path = out_dir.join("verify_all.csv");
    write_csv(&path, &rows)?;
    Ok((path, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_validate_and_cover_every_criterion() {
        let entries = suite_entries(1);
        for e in &entries {
            e.config
                .validate()
                .unwrap_or_else(|err| panic!("{:?}: {err}", e.config.experiment));
        }
        for c in 1..=CRITERIA.len() {
            assert!(entries.iter().any(|e| e.criterion == c));
        }
    }
}
