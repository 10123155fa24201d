//! Multi-cut Benders decomposition.

use super::master::{build_master, decision_from_solution};
use super::subproblem::Subproblem;
use super::{ImpInstance, ImpMasterDecision};
use crate::cutplane::{run_cutting_plane, CuttingPlaneProblem, Evaluation, RunOutcome, SurrogateHook};
use crate::error::{Error, Result};
use crate::ledger::CutLedger;
use crate::lp::{solve_mip_with, MipOptions, MipStatus};
use crate::trace::relative_gap;

#[derive(Debug, Clone)]
pub struct BendersOptions {
    /// Relative gap `(UB − LB) / (1 + |UB|)` at which the loop stops.
    pub gap_tol: f64,
    pub max_iterations: usize,
    pub mip: MipOptions,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-4,
            max_iterations: 500,
            mip: MipOptions::default(),
        }
    }
}

pub struct ImpBenders<'a> {
    instance: &'a ImpInstance,
    subproblems: Vec<Subproblem>,
    options: BendersOptions,
    /// Latest master bound per fixed schedule, used to order the search.
    schedule_bounds: Vec<f64>,
    /// Master solves performed so far.
    pub master_solves: usize,
}

impl<'a> ImpBenders<'a> {
    pub fn new(instance: &'a ImpInstance, options: BendersOptions) -> Result<Self> {
        instance.validate()?;
        if !(options.gap_tol > 0.0) {
            return Err(Error::input(format!("gap tolerance must be positive, got {}", options.gap_tol)));
        }
        let subproblems = (0..instance.n_scenarios()).map(|r| Subproblem::new(instance, r)).collect();
        Ok(Self {
            instance,
            subproblems,
            options,
            schedule_bounds: instance.schedules.iter().map(|s| s.cost).collect(),
            master_solves: 0,
        })
    }
}

impl CuttingPlaneProblem for ImpBenders<'_> {
    type Candidate = ImpMasterDecision;

    fn n_scenarios(&self) -> usize {
        self.instance.n_scenarios()
    }

    fn dim(&self) -> usize {
        self.instance.dim()
    }

    /// Solves the master one schedule at a time (most promising first),
    /// each restricted problem pruned against the best solution so far.
    fn solve_master(&mut self, ledger: &CutLedger) -> Result<(ImpMasterDecision, f64)> {
        self.master_solves += 1;
        let inst = self.instance;
        let s_len = inst.n_schedules();
        let mut mip = build_master(inst, ledger)?;
        let mut order: Vec<usize> = (0..s_len).collect();
        order.sort_by(|&i, &j| self.schedule_bounds[i].total_cmp(&self.schedule_bounds[j]).then(i.cmp(&j)));

        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut bound = f64::INFINITY;
        for s in order {
            for j in 0..s_len {
                let v = if j == s { 1.0 } else { 0.0 };
                mip.lp.set_bounds(j, v, v);
            }
            for t in 0..inst.horizon {
                let hi = if inst.orders_on(s, t) { f64::from(inst.capacity) } else { 0.0 };
                mip.lp.set_bounds(s_len + t, 0.0, hi);
            }
            let mut opts = self.options.mip;
            opts.cutoff = best.as_ref().map(|b| b.0);
            let sol = solve_mip_with(&mip, 0.1 * self.options.gap_tol, &opts)?;
            let sb = match sol.status {
                MipStatus::Optimal => {
                    if best.as_ref().map_or(true, |b| sol.objective < b.0) {
                        best = Some((sol.objective, sol.x));
                    }
                    sol.best_bound
                }
                MipStatus::Cutoff => sol.best_bound,
                MipStatus::Limit => {
                    return Err(Error::Limit(format!("master stopped after {} nodes", sol.nodes)))
                }
                other => return Err(Error::Internal(format!("master problem reported {other:?}"))),
            };
            self.schedule_bounds[s] = sb;
            bound = bound.min(sb);
        }
        let (obj, x) = best.ok_or_else(|| Error::Internal("master problem has no feasible schedule".into()))?;
        Ok((decision_from_solution(inst, &x)?, bound.min(obj)))
    }

    fn evaluate(&mut self, candidate: &ImpMasterDecision) -> Result<Evaluation<ImpMasterDecision>> {
        let x = candidate.column(self.instance);
        let mut cuts = Vec::with_capacity(self.subproblems.len());
        let mut total = 0.0;
        for sp in &mut self.subproblems {
            let sol = sp.solve(&x)?;
            total += sol.primal.objective;
            cuts.push(sol.cut);
        }
        Ok(Evaluation {
            objective: candidate.fixed_cost(self.instance) + total / self.subproblems.len() as f64,
            incumbent: candidate.clone(),
            cuts,
        })
    }

    fn from_column(&self, column: &[f64]) -> Result<ImpMasterDecision> {
        ImpMasterDecision::from_column(self.instance, column)
    }

    fn key(&self, candidate: &ImpMasterDecision) -> Vec<u64> {
        std::iter::once(candidate.schedule as u64)
            .chain(candidate.order_up_to.iter().map(|&a| u64::from(a)))
            .collect()
    }

    fn converged(&self, lower: f64, upper: f64) -> bool {
        relative_gap(lower, upper) <= self.options.gap_tol
    }
}

pub fn run_benders(
    instance: &ImpInstance,
    gap_tol: f64,
    surrogate: Option<SurrogateHook<'_>>,
) -> Result<RunOutcome<ImpMasterDecision>> {
    let options = BendersOptions {
        gap_tol,
        ..Default::default()
    };
    run_benders_with(instance, &options, surrogate)
}

pub fn run_benders_with(
    instance: &ImpInstance,
    options: &BendersOptions,
    surrogate: Option<SurrogateHook<'_>>,
) -> Result<RunOutcome<ImpMasterDecision>> {
    let mut problem = ImpBenders::new(instance, options.clone())?;
    run_cutting_plane(&mut problem, options.max_iterations, surrogate)
}
