use crate::boxsearch::SearchBox;
use crate::distributions::{Dist1D, JointDist, Rect};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "prophet_half")]
    ProphetHalf,
    #[serde(rename = "prophet_one_minus_inv_e")]
    ProphetOneMinusInvE,
    #[serde(rename = "prophet_0745")]
    Prophet0745,
    #[serde(rename = "delegation_part1")]
    DelegationPart1,
    #[serde(rename = "delegation_part2")]
    DelegationPart2,
    #[serde(rename = "delegation_part3")]
    DelegationPart3,
    #[serde(rename = "spm_lemma")]
    SpmLemma,
    #[serde(rename = "binary_mx")]
    BinaryMx,
    #[serde(rename = "budgeted_0316")]
    Budgeted0316,
    #[serde(rename = "tightness_half")]
    TightnessHalf,
    #[serde(rename = "tightness_one_minus_inv_e")]
    TightnessOneMinusInvE,
    #[serde(rename = "lemma_suite")]
    LemmaSuite,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ProphetHalf => "prophet_half",
            Experiment::ProphetOneMinusInvE => "prophet_one_minus_inv_e",
            Experiment::Prophet0745 => "prophet_0745",
            Experiment::DelegationPart1 => "delegation_part1",
            Experiment::DelegationPart2 => "delegation_part2",
            Experiment::DelegationPart3 => "delegation_part3",
            Experiment::SpmLemma => "spm_lemma",
            Experiment::BinaryMx => "binary_mx",
            Experiment::Budgeted0316 => "budgeted_0316",
            Experiment::TightnessHalf => "tightness_half",
            Experiment::TightnessOneMinusInvE => "tightness_one_minus_inv_e",
            Experiment::LemmaSuite => "lemma_suite",
        }
    }
}

/// A one-dimensional law: `{"uniform": [lo, hi]}`, `{"point": v}`,
/// `{"atoms": [[v, m], ...]}` or `{"mixture": {"atoms": .., "segments": [[lo, hi, m], ..]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistSpec {
    Uniform([f64; 2]),
    Point(f64),
    Atoms(Vec<[f64; 2]>),
    Mixture {
        #[serde(default)]
        atoms: Vec<[f64; 2]>,
        #[serde(default)]
        segments: Vec<[f64; 3]>,
    },
}

impl DistSpec {
    pub fn build(&self) -> Result<Dist1D> {
        match self {
            DistSpec::Uniform([lo, hi]) => Dist1D::uniform(*lo, *hi),
            DistSpec::Point(v) => Ok(Dist1D::point(*v)),
            DistSpec::Atoms(a) => Dist1D::new(a.iter().map(|&[v, m]| (v, m)).collect(), vec![]),
            DistSpec::Mixture { atoms, segments } => Dist1D::new(
                atoms.iter().map(|&[v, m]| (v, m)).collect(),
                segments.iter().map(|&[lo, hi, m]| (lo, hi, m)).collect(),
            ),
        }
    }
}

/// The instance fragment of a config, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Independent, non-identical draws: `counts[i]` from `dists[i]`.
    Pool {
        dists: Vec<DistSpec>,
        counts: Vec<u32>,
    },
    /// `n` i.i.d. draws of `x`.
    Iid {
        x: DistSpec,
    },
    /// `n` i.i.d. points with value law `x` and arrival-time law `t`.
    Timed {
        x: DistSpec,
        t: DistSpec,
    },
    /// Independent `x` and `y`.
    Product {
        x: DistSpec,
        y: DistSpec,
    },
    Rects {
        rects: Vec<Rect>,
    },
    /// `[x, y, mass]` atoms.
    Points {
        atoms: Vec<[f64; 3]>,
    },
    Boxes {
        boxes: Vec<SearchBox>,
        #[serde(default)]
        budget: Option<usize>,
    },
    /// `count` seeded instances with `1..=max_m` boxes (`2..=max_m` when budgeted).
    RandomBoxes {
        count: usize,
        max_m: usize,
    },
    /// `count` seeded general mechanisms with `|Omega| <= max_omega`, `n <= max_n`.
    RandomMechanisms {
        count: usize,
        max_omega: usize,
        max_n: usize,
    },
}

impl InstanceSpec {
    fn kind(&self) -> &'static str {
        match self {
            InstanceSpec::Pool { .. } => "pool",
            InstanceSpec::Iid { .. } => "iid",
            InstanceSpec::Timed { .. } => "timed",
            InstanceSpec::Product { .. } => "product",
            InstanceSpec::Rects { .. } => "rects",
            InstanceSpec::Points { .. } => "points",
            InstanceSpec::Boxes { .. } => "boxes",
            InstanceSpec::RandomBoxes { .. } => "random_boxes",
            InstanceSpec::RandomMechanisms { .. } => "random_mechanisms",
        }
    }

    pub fn joint(&self) -> Result<JointDist> {
        match self {
            InstanceSpec::Product { x, y } => Ok(JointDist::product(x.build()?, y.build()?)),
            InstanceSpec::Rects { rects } => JointDist::rect_mixture(rects.clone()),
            InstanceSpec::Points { atoms } => JointDist::discrete(atoms.iter().map(|&[x, y, m]| (x, y, m)).collect()),
            other => Err(Error::config(
                "instance.type",
                format!("`{}` is not a joint law", other.kind()),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to exact wherever a closed form exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            instance: None,
            n: None,
            trials: None,
            seed: 0,
            mode: None,
            output: None,
        }
    }

    pub fn with_instance(mut self, instance: InstanceSpec) -> Self {
        self.instance = Some(instance);
        self
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = Some(trials);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn mode(&self) -> Mode {
        match self.experiment {
            Experiment::Prophet0745 | Experiment::DelegationPart3 => Mode::MonteCarlo,
            Experiment::DelegationPart1 if matches!(self.instance, Some(InstanceSpec::Rects { .. })) => {
                Mode::MonteCarlo
            }
            Experiment::ProphetHalf | Experiment::ProphetOneMinusInvE => self.mode.unwrap_or(Mode::Exact),
            _ => Mode::Exact,
        }
    }

    pub(crate) fn n_or_err(&self) -> Result<u32> {
        self.n.ok_or_else(|| Error::config("n", "required"))
    }

    pub(crate) fn trials_or_err(&self) -> Result<u64> {
        self.trials
            .ok_or_else(|| Error::config("trials", "required in Monte Carlo mode"))
    }

    pub(crate) fn instance_or_err(&self) -> Result<&InstanceSpec> {
        self.instance
            .as_ref()
            .ok_or_else(|| Error::config("instance", "required"))
    }

    /// Checks the fields `experiment` needs before anything is computed.
    pub fn validate(&self) -> Result<()> {
        use Experiment as E;
        let allowed: &[&str] = match self.experiment {
            E::ProphetHalf => &["pool", "iid"],
            E::ProphetOneMinusInvE => &["iid"],
            E::Prophet0745 => &["timed"],
            E::DelegationPart1 => &["product", "rects", "points"],
            E::DelegationPart2 | E::DelegationPart3 => &["product"],
            E::SpmLemma => &["random_mechanisms"],
            E::BinaryMx | E::Budgeted0316 => &["boxes", "random_boxes"],
            E::TightnessHalf | E::TightnessOneMinusInvE | E::LemmaSuite => &[],
        };
        match (&self.instance, allowed.is_empty()) {
            (Some(i), true) => {
                return Err(Error::config(
                    "instance",
                    format!("`{}` takes no instance, got `{}`", self.experiment.name(), i.kind()),
                ));
            }
            (None, false) => {
                return Err(Error::config(
                    "instance",
                    format!("required (one of {})", allowed.join(", ")),
                ))
            }
            (Some(i), false) if !allowed.contains(&i.kind()) => {
                return Err(Error::config(
                    "instance.type",
                    format!(
                        "`{}` not accepted by `{}` (one of {})",
                        i.kind(),
                        self.experiment.name(),
                        allowed.join(", ")
                    ),
                ));
            }
            _ => {}
        }

        let needs_n = !matches!(
            (&self.experiment, &self.instance),
            (E::ProphetHalf, Some(InstanceSpec::Pool { .. }))
                | (
                    E::SpmLemma | E::BinaryMx | E::Budgeted0316 | E::TightnessOneMinusInvE,
                    _
                )
        );
        if needs_n {
            let n = self.n_or_err()?;
            let min = match self.experiment {
                E::Prophet0745 | E::DelegationPart3 | E::LemmaSuite => 3,
                E::TightnessHalf => 2,
                _ => 1,
            };
            if n < min {
                return Err(Error::config(
                    "n",
                    format!("{n} is below the minimum {min} for `{}`", self.experiment.name()),
                ));
            }
        } else if self.n.is_some() {
            return Err(Error::config(
                "n",
                format!("not used by `{}` with this instance", self.experiment.name()),
            ));
        }

        if self.mode() == Mode::MonteCarlo || self.experiment == E::SpmLemma {
            match self.trials_or_err()? {
                0 => return Err(Error::config("trials", "must be positive")),
                t if t >= crate::rng::MAX_TRIALS => return Err(Error::config("trials", "too large")),
                _ => {}
            }
        }
        if let Some(asked) = self.mode.filter(|&m| m != self.mode()) {
            return Err(Error::config(
                "mode",
                format!(
                    "{asked:?} evaluation is not available for `{}` here",
                    self.experiment.name()
                ),
            ));
        }

        match self.instance.as_ref() {
            Some(InstanceSpec::Pool { dists, counts }) => {
                if dists.is_empty() || dists.len() != counts.len() {
                    return Err(Error::config("instance.counts", "needs one count per law"));
                }
                if counts.iter().all(|&c| c == 0) {
                    return Err(Error::config("instance.counts", "needs at least one draw"));
                }
            }
            Some(InstanceSpec::Boxes { boxes, budget }) => {
                if boxes.is_empty() {
                    return Err(Error::config("instance.boxes", "must be non-empty"));
                }
                match (self.experiment, budget) {
                    (E::Budgeted0316, None) => return Err(Error::config("instance.budget", "required")),
                    (E::Budgeted0316, Some(b)) if *b == 0 || *b >= boxes.len() => {
                        return Err(Error::config(
                            "instance.budget",
                            format!("{b} (need 1 <= budget < {})", boxes.len()),
                        ));
                    }
                    (E::BinaryMx, Some(_)) => return Err(Error::config("instance.budget", "only for `budgeted_0316`")),
                    _ => {}
                }
            }
            Some(InstanceSpec::RandomBoxes { count, max_m }) => {
                let min = if self.experiment == E::Budgeted0316 { 2 } else { 1 };
                if *count == 0 {
                    return Err(Error::config("instance.count", "must be positive"));
                }
                if *max_m < min || *max_m > crate::budgeted::MAX_BUDGETED_BOXES {
                    return Err(Error::config(
                        "instance.max_m",
                        format!("{max_m} (need {min}..={})", crate::budgeted::MAX_BUDGETED_BOXES),
                    ));
                }
            }
            Some(InstanceSpec::RandomMechanisms {
                count,
                max_omega,
                max_n,
            }) => {
                if *count == 0 || *max_omega == 0 || *max_n == 0 {
                    return Err(Error::config("instance", "count, max_omega and max_n must be positive"));
                }
                if (*max_omega as f64).powi(*max_n as i32) > (1 << 20) as f64 {
                    return Err(Error::config("instance.max_n", "max_omega^max_n must stay below 2^20"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Reads a JSON config holding one experiment, an array of them, or an
/// object with an `experiments` array.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?;
    let (items, prefix) = match value {
        serde_json::Value::Array(a) => (a, ""),
        serde_json::Value::Object(mut o) if o.contains_key("experiments") => {
            if o.len() > 1 {
                let extra: Vec<String> = o.keys().filter(|k| *k != "experiments").cloned().collect();
                return Err(Error::config(extra.join(","), "unknown top-level field"));
            }
            match o.remove("experiments") {
                Some(serde_json::Value::Array(a)) => (a, "experiments"),
                _ => return Err(Error::config("experiments", "must be an array")),
            }
        }
        single => (vec![single], ""),
    };
    if items.is_empty() {
        return Err(Error::config("experiments", "no experiments given"));
    }
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let at = format!("{prefix}[{i}]");
            let cfg: ExperimentConfig =
                serde_json::from_value(v).map_err(|e| Error::config(at.clone(), e.to_string()))?;
            cfg.validate().map_err(|e| match e {
                Error::Config { field, detail } => Error::config(format!("{at}.{field}"), detail),
                other => other,
            })?;
            Ok(cfg)
        })
        .collect()
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
