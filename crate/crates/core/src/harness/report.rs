use crate::parallel::Estimate;
use crate::rng::RNG_ID;
use crate::{Error, Result};
use serde::Serialize;
use std::path::Path;

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 12] = [
    "experiment",
    "n",
    "trials",
    "seed",
    "mechanism_descriptor",
    "value_mech",
    "stderr_mech",
    "value_benchmark",
    "ratio",
    "bound",
    "margin",
    "pass",
];

/// Slack on exact comparisons.
pub const EXACT_TOL: f64 = 1e-9;

/// One line of a report. `margin = ratio - bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub mechanism_descriptor: String,
    pub value_mech: f64,
    pub stderr_mech: f64,
    pub value_benchmark: f64,
    pub ratio: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    /// Whether the row was computed without sampling.
    #[serde(skip)]
    pub exact: bool,
}

impl ReportRow {
    /// Mechanism value against a benchmark. Exact when both estimates are;
    /// otherwise the pass rule allows four combined standard errors.
    pub fn compare(
        experiment: &str,
        n: u64,
        seed: u64,
        desc: String,
        mech: Estimate,
        bench: Estimate,
        bound: f64,
    ) -> Self {
        let ratio = mech.mean / bench.mean;
        let margin = ratio - bound;
        let exact = mech.trials == 0 && bench.trials == 0;
        let slack = if exact {
            EXACT_TOL
        } else {
            4.0 * mech.stderr.hypot(ratio * bench.stderr) / bench.mean
        };
        ReportRow {
            experiment: experiment.to_string(),
            n,
            trials: mech.trials.max(bench.trials),
            seed,
            mechanism_descriptor: desc,
            value_mech: mech.mean,
            stderr_mech: mech.stderr,
            value_benchmark: bench.mean,
            ratio,
            bound,
            margin,
            pass: margin >= -slack,
            exact,
        }
    }

    /// An exact check reported as `measured` against `reference`, with
    /// `ratio = margin` and a zero bound.
    #[allow(clippy::too_many_arguments)]
    pub fn check(
        experiment: &str,
        n: u64,
        trials: u64,
        seed: u64,
        desc: String,
        measured: f64,
        reference: f64,
        margin: f64,
        pass: bool,
    ) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            n,
            trials,
            seed,
            mechanism_descriptor: desc,
            value_mech: measured,
            stderr_mech: 0.0,
            value_benchmark: reference,
            ratio: margin,
            bound: 0.0,
            margin,
            pass,
            exact: true,
        }
    }

    fn fields(&self) -> [String; 12] {
        [
            self.experiment.clone(),
            self.n.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            self.mechanism_descriptor.clone(),
            fmt_g(self.value_mech),
            fmt_g(self.stderr_mech),
            fmt_g(self.value_benchmark),
            fmt_g(self.ratio),
            fmt_g(self.bound),
            fmt_g(self.margin),
            self.pass.to_string(),
        ]
    }
}

/// Formats like C's `%.12g`.
pub fn fmt_g(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The report as CSV text, headed by a comment line with the tool version
/// and generator.
pub fn render_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| Error::Io(e.to_string()))?;
    Ok(format!(
        "# delegation-lab {} rng={RNG_ID}\n{body}",
        env!("CARGO_PKG_VERSION")
    ))
}

pub fn write_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, render_csv(rows)?)?;
    Ok(())
}
