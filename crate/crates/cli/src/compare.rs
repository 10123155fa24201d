use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use smp_core::l0::{fit_lasso, metrics_csv_row, rr_metrics, run_l0_cutplane, RrMetrics, METRICS_CSV_HEADER};
use smp_core::trace::ConvergenceTrace;
use smp_core::Error;

use crate::artifacts::{instance_files, load_rr, read_text, stem, write_json, write_text};
use crate::config::{ExperimentConfig, Problem};

/// Gap at which "exact calls to gap" is measured.
pub const COMPARE_GAP: f64 = 0.05;
/// Lasso penalty of the second comparison column.
pub const LASSO_WIDE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Loss,
    Tie,
}

impl Outcome {
    /// Fewer is better; `None` (never reached) loses to any count.
    fn of(baseline: Option<usize>, candidate: Option<usize>) -> Self {
        let key = |v: Option<usize>| v.unwrap_or(usize::MAX);
        match key(candidate).cmp(&key(baseline)) {
            Ordering::Less => Outcome::Win,
            Ordering::Greater => Outcome::Loss,
            Ordering::Equal => Outcome::Tie,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Outcome::Win => "win",
            Outcome::Loss => "loss",
            Outcome::Tie => "tie",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// Candidate share with ties split evenly.
    pub candidate_share: f64,
    pub baseline_share: f64,
    pub all_tied: bool,
}

impl Tally {
    fn from(outcomes: &[Outcome]) -> Self {
        let count = |o: Outcome| outcomes.iter().filter(|&&x| x == o).count();
        let (wins, losses, ties) = (count(Outcome::Win), count(Outcome::Loss), count(Outcome::Tie));
        let n = outcomes.len().max(1) as f64;
        let candidate_share = (wins as f64 + 0.5 * ties as f64) / n;
        Self {
            wins,
            losses,
            ties,
            candidate_share,
            baseline_share: 1.0 - candidate_share,
            all_tied: ties == outcomes.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceComparison {
    pub instances: usize,
    pub exact_calls: Tally,
    pub exact_calls_to_gap: Tally,
    pub iterations: Tally,
}

pub const TRACE_CSV_HEADER: &str = "instance,baseline_exact,candidate_exact,exact_outcome,baseline_exact_to_gap,candidate_exact_to_gap,gap_outcome,baseline_iterations,candidate_iterations,iteration_outcome";

fn opt(v: Option<usize>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn load_traces(dir: &Path) -> Result<BTreeMap<String, ConvergenceTrace>> {
    let mut map = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(instance) = name.strip_suffix(".trace.csv") {
            let trace = ConvergenceTrace::from_csv(&read_text(&path)?).with_context(|| format!("parsing {}", path.display()))?;
            map.insert(instance.to_string(), trace);
        }
    }
    Ok(map)
}

fn compare_traces(cfg: &ExperimentConfig, baseline: &Path, candidate: &Path) -> Result<()> {
    let base = load_traces(baseline)?;
    let cand = load_traces(candidate)?;
    if base.is_empty() {
        return Err(Error::input(format!("no .trace.csv files in {}", baseline.display())).into());
    }
    if base.keys().ne(cand.keys()) {
        return Err(Error::input("baseline and candidate directories hold different instances").into());
    }
    let mut csv = format!("{TRACE_CSV_HEADER}\n");
    let (mut exact, mut gap, mut iters) = (Vec::new(), Vec::new(), Vec::new());
    for (name, b) in &base {
        let c = &cand[name];
        let (be, ce) = (b.exact_calls(), c.exact_calls());
        let (bg, cg) = (b.exact_calls_to_gap(COMPARE_GAP), c.exact_calls_to_gap(COMPARE_GAP));
        let (bi, ci) = (b.len(), c.len());
        let oe = Outcome::of(Some(be), Some(ce));
        let og = Outcome::of(bg, cg);
        let oi = Outcome::of(Some(bi), Some(ci));
        csv.push_str(&format!(
            "{name},{be},{ce},{},{},{},{},{bi},{ci},{}\n",
            oe.as_str(),
            opt(bg),
            opt(cg),
            og.as_str(),
            oi.as_str()
        ));
        exact.push(oe);
        gap.push(og);
        iters.push(oi);
    }
    let report = TraceComparison {
        instances: base.len(),
        exact_calls: Tally::from(&exact),
        exact_calls_to_gap: Tally::from(&gap),
        iterations: Tally::from(&iters),
    };
    write_text(&cfg.out.join("compare.csv"), &csv)?;
    write_json(&cfg.out.join("compare.json"), &report)?;
    println!(
        "{} instances: candidate needs fewer exact solves on {}, more on {}, ties {}{}",
        report.instances,
        report.exact_calls.wins,
        report.exact_calls.losses,
        report.exact_calls.ties,
        if report.exact_calls.all_tied { " (all tied)" } else { "" }
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMeans {
    pub method: String,
    pub lambda: f64,
    pub instances: usize,
    pub beta_recovery: f64,
    pub beta_mse: f64,
    pub pred_mse: f64,
}

fn compare_metrics(cfg: &ExperimentConfig, input: &Path) -> Result<()> {
    let mut methods: Vec<(&str, f64)> = vec![("l0", cfg.lambda), ("lasso", cfg.lambda)];
    if cfg.lambda != LASSO_WIDE {
        methods.push(("lasso", LASSO_WIDE));
    }
    let mut csv = format!("{METRICS_CSV_HEADER}\n");
    let mut sums = vec![[0.0; 3]; methods.len()];
    let files = instance_files(input)?;
    for (k, path) in files.iter().enumerate() {
        let data = load_rr(path)?;
        for (i, &(method, lambda)) in methods.iter().enumerate() {
            let beta = match method {
                "l0" => run_l0_cutplane(&data, lambda, cfg.tol, None)
                    .with_context(|| format!("L0 fit of {}", stem(path)))?
                    .model
                    .beta,
                _ => fit_lasso(&data, lambda)?,
            };
            let m: RrMetrics = rr_metrics(&beta, &data);
            csv.push_str(&metrics_csv_row(k, method, lambda, &m));
            csv.push('\n');
            sums[i][0] += m.beta_recovery;
            sums[i][1] += m.beta_mse;
            sums[i][2] += m.pred_mse;
        }
    }
    let n = files.len();
    let means: Vec<MethodMeans> = methods
        .iter()
        .zip(&sums)
        .map(|(&(method, lambda), s)| MethodMeans {
            method: method.to_string(),
            lambda,
            instances: n,
            beta_recovery: s[0] / n as f64,
            beta_mse: s[1] / n as f64,
            pred_mse: s[2] / n as f64,
        })
        .collect();
    write_text(&cfg.out.join("metrics.csv"), &csv)?;
    write_json(&cfg.out.join("metrics.json"), &means)?;
    for m in &means {
        println!(
            "{} (lambda {}): beta_recovery {:.4}, beta_mse {:.4e}, pred_mse {:.4e}",
            m.method, m.lambda, m.beta_recovery, m.beta_mse, m.pred_mse
        );
    }
    Ok(())
}

/// With `--baseline` and `--candidate`, tallies per-instance wins between two
/// sets of traces; with `--problem rr --input`, tabulates L0 against lasso.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    match (&cfg.baseline, &cfg.candidate) {
        (Some(b), Some(c)) => compare_traces(cfg, b, c),
        (None, None) => match cfg.problem()? {
            Problem::Rr => compare_metrics(cfg, cfg.input()?),
            Problem::Imp => Err(Error::input("imp comparisons need --baseline and --candidate trace directories").into()),
        },
        _ => Err(Error::input("--baseline and --candidate must be given together").into()),
    }
}
