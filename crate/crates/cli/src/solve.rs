use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use smp_core::cutplane::{RunOutcome, RunStatus, SurrogateHook};
use smp_core::imp::{run_benders, ImpMasterDecision};
use smp_core::l0::{run_l0_cutplane, SubsetModel};
use smp_core::rl::PolicyProposer;
use smp_core::trace::ConvergenceTrace;
use smp_core::Error;

use crate::artifacts::{instance_files, load_imp, load_rr, stem, write_json, write_text, PolicyFile};
use crate::config::{ExperimentConfig, Problem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Solution {
    Imp { schedule: usize, order_up_to: Vec<u32> },
    Rr { support: Vec<usize>, beta: Vec<f64> },
}

impl Solution {
    pub fn imp(d: &ImpMasterDecision) -> Self {
        Solution::Imp {
            schedule: d.schedule,
            order_up_to: d.order_up_to.clone(),
        }
    }

    pub fn rr(m: &SubsetModel) -> Self {
        Solution::Rr {
            support: (0..m.support.len()).filter(|&j| m.support[j]).collect(),
            beta: m.beta.clone(),
        }
    }
}

/// Result of one solve. Everything except `objective`, `status`,
/// `surrogate_picks` and `solution` is recomputable from the trace rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: Problem,
    pub instance: String,
    pub status: RunStatus,
    pub objective: f64,
    pub lower_bound: f64,
    pub final_gap: f64,
    pub iterations: usize,
    pub exact_calls: usize,
    pub surrogate_calls: usize,
    pub total_cuts: usize,
    pub surrogate_picks: Vec<usize>,
    pub solution: Solution,
}

impl Summary {
    fn new<C>(problem: Problem, instance: String, out: &RunOutcome<C>, solution: Solution) -> Self {
        let last = out.trace.records.last();
        Self {
            problem,
            instance,
            status: out.status,
            objective: out.objective,
            lower_bound: last.map_or(f64::NEG_INFINITY, |r| r.lower_bound),
            final_gap: last.map_or(f64::INFINITY, |r| r.rel_gap),
            iterations: out.trace.len(),
            exact_calls: out.trace.exact_calls(),
            surrogate_calls: out.trace.surrogate_calls(),
            total_cuts: last.map_or(0, |r| r.n_cuts_total),
            surrogate_picks: out.surrogate_picks.clone(),
            solution,
        }
    }
}

fn solve_one(cfg: &ExperimentConfig, problem: Problem, path: &Path, policy: Option<&PolicyFile>) -> Result<(Summary, ConvergenceTrace)> {
    let name = stem(path);
    let surrogate = match (&cfg.surrogate, policy) {
        (Some(s), Some(p)) => Some((s, p)),
        (Some(_), None) => return Err(Error::input("--gamma needs a --policy file").into()),
        (None, _) => None,
    };
    match problem {
        Problem::Imp => {
            let inst = load_imp(path)?;
            let out = match surrogate {
                None => run_benders(&inst, cfg.tol, None)?,
                Some((s, p)) => {
                    let mut prop = PolicyProposer::new(p.policy.clone(), p.imp_env(&inst)?)?;
                    run_benders(&inst, cfg.tol, Some(SurrogateHook { config: s, proposer: &mut prop }))?
                }
            };
            let solution = Solution::imp(&out.incumbent);
            Ok((Summary::new(problem, name, &out, solution), out.trace))
        }
        Problem::Rr => {
            let data = load_rr(path)?;
            let run = match surrogate {
                None => run_l0_cutplane(&data, cfg.lambda, cfg.tol, None)?,
                Some((s, p)) => {
                    let mut prop = PolicyProposer::new(p.policy.clone(), p.rr_env(&data, cfg.lambda)?)?;
                    run_l0_cutplane(&data, cfg.lambda, cfg.tol, Some(SurrogateHook { config: s, proposer: &mut prop }))?
                }
            };
            let solution = Solution::rr(&run.model);
            Ok((Summary::new(problem, name, &run.outcome, solution), run.outcome.trace))
        }
    }
}

/// Solves every instance under `--input`, writing `<stem>.trace.csv` and
/// `<stem>.summary.json` for each.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    let problem = cfg.problem()?;
    let policy = match &cfg.policy {
        Some(path) => Some(PolicyFile::load(path)?),
        None => None,
    };
    let mut limited = Vec::new();
    for path in instance_files(cfg.input()?)? {
        let (summary, trace) =
            solve_one(cfg, problem, &path, policy.as_ref()).with_context(|| format!("solving {}", path.display()))?;
        write_text(&cfg.out.join(format!("{}.trace.csv", summary.instance)), &trace.to_csv())?;
        write_json(&cfg.out.join(format!("{}.summary.json", summary.instance)), &summary)?;
        println!(
            "{}: objective {} after {} iterations ({} exact, {} surrogate), gap {:.3e}",
            summary.instance,
            summary.objective,
            summary.iterations,
            summary.exact_calls,
            summary.surrogate_calls,
            summary.final_gap
        );
        if summary.status == RunStatus::IterationLimit {
            limited.push(summary.instance);
        }
    }
    if !limited.is_empty() {
        return Err(Error::Limit(format!("iteration limit reached on {}", limited.join(", "))).into());
    }
    Ok(())
}
