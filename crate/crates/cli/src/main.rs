//! `delegation-lab`: runs experiment configs and the verification suite.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use delegation_lab::harness::{
    experiment_rows, fmt_g, load_config, render_csv, run_experiments, verify_all, Experiment, ExperimentConfig,
    ReportRow, CRITERIA,
};
use delegation_lab::numerics::{alpha_n, beta_limit, solve_alpha, solve_beta};
use delegation_lab::parallel::Execution;
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable holding the worker count (0 = one per core).
const THREADS_VAR: &str = "DELEGATION_LAB_THREADS";

#[derive(Parser)]
#[command(
    name = "delegation-lab",
    version,
    about = "Certify delegated-search mechanisms and prophet inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments in a JSON config. Rows go to each experiment's
    /// `output` file, or to stdout when none is set.
    Run { config: PathBuf },
    /// Run the full acceptance suite and write DIR/verify_all.csv.
    VerifyAll {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the lemma checks for one n.
    Lemmas {
        #[arg(long)]
        n: u32,
    },
    /// Print the constant alpha and the limit of beta_n.
    Alpha,
    /// Print beta_n and alpha_n.
    Beta {
        #[arg(long)]
        n: u32,
    },
}

fn configure_threads() -> Result<()> {
    let threads = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("{THREADS_VAR} must be a non-negative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn status(rows: &[ReportRow]) -> ExitCode {
    if rows.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    let exec = Execution::default();
    match cli.command {
        Command::Run { config } => {
            let cfgs = load_config(&config)?;
            let rows = run_experiments(&cfgs, exec)?;
            if cfgs.iter().any(|c| c.output.is_none()) {
                print!("{}", render_csv(&rows)?);
            }
            let failed = rows.iter().filter(|r| !r.pass).count();
            eprintln!("{} rows, {failed} failed", rows.len());
            Ok(status(&rows))
        }
        Command::VerifyAll { seed, out } => {
            let (path, results) = verify_all(seed, &out, exec)?;
            let mut all = Vec::new();
            for (i, name) in CRITERIA.iter().enumerate() {
                let part: Vec<_> = results.iter().filter(|r| r.criterion == i + 1).collect();
                let secs: f64 = part.iter().map(|r| r.elapsed.as_secs_f64()).sum();
                let ok = part.iter().all(|r| r.rows.iter().all(|row| row.pass));
                println!("[{}] {}: {name} ({secs:.2}s)", if ok { "PASS" } else { "FAIL" }, i + 1);
                all.extend(part.into_iter().flat_map(|r| r.rows.iter().cloned()));
            }
            println!("wrote {}", path.display());
            Ok(status(&all))
        }
        Command::Lemmas { n } => {
            if n < 3 {
                bail!("the lemma suite needs n >= 3");
            }
            let cfg = ExperimentConfig::new(Experiment::LemmaSuite).with_n(n);
            let rows = experiment_rows(&cfg, 0, exec)?;
            print!("{}", render_csv(&rows)?);
            Ok(status(&rows))
        }
        Command::Alpha => {
            println!("alpha = {}", fmt_g(solve_alpha()?));
            println!("beta_limit = {}", fmt_g(beta_limit()?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Beta { n } => {
            println!("beta_{n} = {}", fmt_g(solve_beta(n)?));
            println!("alpha_{n} = {}", fmt_g(alpha_n(n)?));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
