//! Experiment configuration: flags layered over a flat `key = value` file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use smp_core::surrogate::{Selection, SurrogateConfig};
use smp_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Imp,
    Rr,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Imp => "imp",
            Problem::Rr => "rr",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> std::result::Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "imp" => Ok(Problem::Imp),
            "rr" => Ok(Problem::Rr),
            other => Err(Error::input(format!("unknown problem `{other}` (expected imp or rr)"))),
        }
    }
}

/// Command-line flags shared by every verb. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub problem: Option<String>,
    /// Flat `key = value` file; keys mirror the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Instance file or directory of instance files.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Surrogate probability; omitting it solves without a surrogate.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub selection: Option<String>,
    #[arg(long = "deactivate-gap")]
    pub deactivate_gap: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    #[arg(long = "R")]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub schedules: Option<usize>,
    #[arg(long = "P")]
    pub features: Option<usize>,
    #[arg(long = "M")]
    pub observations: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of instances to generate.
    #[arg(long)]
    pub n: Option<usize>,
    /// Training step budget.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub rollout: Option<usize>,
    /// Trainer checkpoint to resume from.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Directory of baseline traces (compare).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Directory of candidate traces (compare).
    #[arg(long)]
    pub candidate: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: Option<Problem>,
    pub seed: u64,
    pub out: PathBuf,
    pub input: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub surrogate: Option<SurrogateConfig>,
    pub tol: f64,
    pub horizon: usize,
    pub scenarios: usize,
    pub schedules: usize,
    pub features: usize,
    pub observations: usize,
    pub lambda: f64,
    pub n: usize,
    pub steps: usize,
    pub rollout: usize,
    pub resume: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub candidate: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "problem",
    "seed",
    "out",
    "input",
    "policy",
    "gamma",
    "batch",
    "selection",
    "deactivate-gap",
    "tol",
    "T",
    "R",
    "schedules",
    "P",
    "M",
    "lambda",
    "n",
    "steps",
    "rollout",
    "resume",
    "baseline",
    "candidate",
];

/// Parses a flat config file. `#` starts a comment; `_` and `-` are
/// interchangeable in keys.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::input(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::input(format!("config line {}: unknown key `{key}`", n + 1)).into());
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::input(format!("config key `{key}`: bad value `{v}`")).into()),
    }
}

impl ExperimentConfig {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(path, e))
                    .with_context(|| "reading config file")?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let problem = match pick(flags.problem.clone(), &file, "problem")? {
            Some(p) => Some(p.parse::<Problem>()?),
            None => None,
        };
        let selection = match pick(flags.selection.clone(), &file, "selection")? {
            Some(s) => Some(s.parse::<Selection>()?),
            None => None,
        };
        let gamma: Option<f64> = pick(flags.gamma, &file, "gamma")?;
        let batch = pick(flags.batch, &file, "batch")?;
        let deactivate_gap = pick(flags.deactivate_gap, &file, "deactivate-gap")?;
        let seed = pick(flags.seed, &file, "seed")?.unwrap_or(0);

        let surrogate = match gamma {
            None => {
                if batch.is_some() || selection.is_some() || deactivate_gap.is_some() {
                    return Err(Error::input("surrogate options need --gamma").into());
                }
                None
            }
            Some(gamma) => {
                let defaults = SurrogateConfig::default();
                let cfg = SurrogateConfig {
                    gamma,
                    batch_size: batch.unwrap_or(defaults.batch_size),
                    selection: selection.unwrap_or(defaults.selection),
                    deactivate_gap: deactivate_gap.unwrap_or(defaults.deactivate_gap),
                    seed,
                };
                cfg.validate()?;
                Some(cfg)
            }
        };

        let cfg = Self {
            problem,
            seed,
            out: pick(flags.out.clone(), &file, "out")?.unwrap_or_else(|| PathBuf::from("out")),
            input: pick(flags.input.clone(), &file, "input")?,
            policy: pick(flags.policy.clone(), &file, "policy")?,
            surrogate,
            tol: pick(flags.tol, &file, "tol")?.unwrap_or(1e-6),
            horizon: pick(flags.horizon, &file, "T")?.unwrap_or(8),
            scenarios: pick(flags.scenarios, &file, "R")?.unwrap_or(20),
            schedules: pick(flags.schedules, &file, "schedules")?.unwrap_or(6),
            features: pick(flags.features, &file, "P")?.unwrap_or(10),
            observations: pick(flags.observations, &file, "M")?.unwrap_or(250),
            lambda: pick(flags.lambda, &file, "lambda")?.unwrap_or(0.1),
            n: pick(flags.n, &file, "n")?.unwrap_or(1),
            steps: pick(flags.steps, &file, "steps")?.unwrap_or(300_000),
            rollout: pick(flags.rollout, &file, "rollout")?.unwrap_or(2048),
            resume: pick(flags.resume.clone(), &file, "resume")?,
            baseline: pick(flags.baseline.clone(), &file, "baseline")?,
            candidate: pick(flags.candidate.clone(), &file, "candidate")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::input("--tol must be a finite nonnegative number").into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::input("--lambda must be a finite nonnegative number").into());
        }
        if self.n == 0 || self.steps == 0 || self.rollout == 0 {
            return Err(Error::input("--n, --steps and --rollout must be positive").into());
        }
        for path in [&self.input, &self.policy, &self.resume, &self.baseline, &self.candidate]
            .into_iter()
            .flatten()
        {
            if !path.exists() {
                return Err(Error::input(format!("path {} does not exist", path.display())).into());
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        self.problem
            .ok_or_else(|| Error::input("--problem is required (imp or rr)").into())
    }

    pub fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::input("--input is required").into())
    }
}
