//! Generic cutting-plane loop with optional surrogate master proposals.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Cut, CutLedger};
use crate::rng::{stream, Stream};
use crate::surrogate::{gate, select, Proposer, SurrogateConfig};
use crate::trace::{relative_gap, ConvergenceTrace, TraceRecord};

/// Result of evaluating one candidate against the true objective.
#[derive(Debug, Clone)]
pub struct Evaluation<C> {
    pub objective: f64,
    /// The solution whose objective was measured (may differ from the
    /// candidate, e.g. after refitting).
    pub incumbent: C,
    pub cuts: Vec<Cut>,
}

pub trait CuttingPlaneProblem {
    type Candidate: Clone;

    fn n_scenarios(&self) -> usize;

    /// Length of a decision column.
    fn dim(&self) -> usize;

    /// Exact master solve: a candidate and a certified lower bound.
    fn solve_master(&mut self, ledger: &CutLedger) -> Result<(Self::Candidate, f64)>;

    fn evaluate(&mut self, candidate: &Self::Candidate) -> Result<Evaluation<Self::Candidate>>;

    /// Decodes a surrogate column into a candidate.
    fn from_column(&self, column: &[f64]) -> Result<Self::Candidate>;

    /// Identity used to skip candidates that were already evaluated.
    fn key(&self, candidate: &Self::Candidate) -> Vec<u64>;

    fn converged(&self, lower: f64, upper: f64) -> bool;

    /// Whether `(new, new_obj)` should replace the incumbent.
    fn improves(&self, new_obj: f64, _new: &Self::Candidate, old_obj: f64, _old: &Self::Candidate) -> bool {
        new_obj < old_obj
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct RunOutcome<C> {
    pub status: RunStatus,
    pub objective: f64,
    pub incumbent: C,
    pub lower_bound: f64,
    pub trace: ConvergenceTrace,
    pub ledger: CutLedger,
    /// Batch index chosen on each surrogate iteration.
    pub surrogate_picks: Vec<usize>,
}

impl<C> RunOutcome<C> {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// A surrogate proposer together with its configuration.
pub struct SurrogateHook<'a> {
    pub config: &'a SurrogateConfig,
    pub proposer: &'a mut dyn Proposer,
}

pub fn run_cutting_plane<P: CuttingPlaneProblem>(
    problem: &mut P,
    max_iterations: usize,
    mut surrogate: Option<SurrogateHook<'_>>,
) -> Result<RunOutcome<P::Candidate>> {
    if let Some(hook) = &surrogate {
        hook.config.validate()?;
    }
    let start = Instant::now();
    let seed = surrogate.as_ref().map_or(0, |h| h.config.seed);
    let mut gate_rng = stream(seed, Stream::Gate);
    let mut select_rng = stream(seed, Stream::Selection);

    let mut ledger = CutLedger::new(problem.n_scenarios(), problem.dim());
    let mut trace = ConvergenceTrace::default();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut picks = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut best: Option<(f64, P::Candidate)> = None;
    let mut status = RunStatus::IterationLimit;

    for iteration in 1..=max_iterations {
        let upper = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        let gap = relative_gap(lower, upper);
        let use_surrogate = match &surrogate {
            Some(hook) => gate(hook.config, &mut gate_rng, gap),
            None => false,
        };

        let candidate = if use_surrogate {
            let hook = surrogate.as_mut().expect("gate fired without a surrogate");
            let batch = hook.proposer.propose(&ledger, hook.config)?;
            if batch.decisions.iter().any(|c| c.len() != problem.dim()) {
                return Err(Error::input("surrogate column length does not match the master dimension"));
            }
            let pick = select(&batch, hook.config.selection, &ledger, &mut select_rng)?;
            picks.push(pick);
            problem.from_column(&batch.decisions[pick])?
        } else {
            let (candidate, bound) = problem.solve_master(&ledger)?;
            lower = lower.max(bound);
            candidate
        };

        let fresh = seen.insert(problem.key(&candidate));
        if fresh {
            let eval = problem.evaluate(&candidate)?;
            for cut in eval.cuts {
                ledger.add_cut(cut)?;
            }
            let replace = match &best {
                None => true,
                Some((obj, inc)) => problem.improves(eval.objective, &eval.incumbent, *obj, inc),
            };
            if replace {
                best = Some((eval.objective, eval.incumbent));
            }
        }

        let upper = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        trace.push(TraceRecord {
            iteration,
            used_surrogate: use_surrogate,
            lower_bound: lower,
            upper_bound: upper,
            rel_gap: relative_gap(lower, upper),
            n_cuts_total: ledger.total_cuts(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        // a repeated exact candidate is certified by its own cuts
        if !use_surrogate && (!fresh || problem.converged(lower, upper)) {
            status = RunStatus::Converged;
            break;
        }
    }

    let (objective, incumbent) =
        best.ok_or_else(|| Error::Limit("no candidate was evaluated".into()))?;
    Ok(RunOutcome {
        status,
        objective,
        incumbent,
        lower_bound: lower,
        trace,
        ledger,
        surrogate_picks: picks,
    })
}
