//! Monolithic mixed-integer formulation over all scenarios.

use super::master::{add_schedule_rows, bound_decisions, decision_from_solution, decision_kinds};
use super::subproblem::{Subproblem, VARS_PER_DAY};
use super::{ImpInstance, ImpMasterDecision};
use crate::error::{Error, Result};
use crate::lp::{solve_mip_with, LpProblem, MipOptions, MipProblem, MipStatus, Sense, VarKind};

/// Largest `T · R` the extensive form is meant for.
pub const EXTENSIVE_MAX_CELLS: usize = 60;

pub fn check_extensive_size(instance: &ImpInstance) -> Result<()> {
    let cells = instance.horizon * instance.n_scenarios();
    if cells > EXTENSIVE_MAX_CELLS {
        return Err(Error::input(format!(
            "extensive form limited to T*R <= {EXTENSIVE_MAX_CELLS}, instance has {cells}"
        )));
    }
    Ok(())
}

/// Columns: `u`, `a`, then `(k, d, p, o, v)` per day for each scenario.
pub fn build_extensive(instance: &ImpInstance) -> Result<MipProblem> {
    instance.validate()?;
    let dim = instance.dim();
    let r_len = instance.n_scenarios();
    let block = VARS_PER_DAY * instance.horizon;
    let n_vars = dim + r_len * block;

    let mut cost = vec![0.0; n_vars];
    for (c, sch) in cost.iter_mut().zip(&instance.schedules) {
        *c = sch.cost;
    }
    let mut lp = LpProblem::new(Sense::Minimize, cost);
    bound_decisions(instance, &mut lp);
    add_schedule_rows(instance, &mut lp, n_vars);

    for r in 0..r_len {
        let sp = Subproblem::new(instance, r);
        let offset = dim + r * block;
        for j in 0..block {
            lp.cost[offset + j] = sp.lp.cost[j] / r_len as f64;
            lp.lower[offset + j] = sp.lp.lower[j];
            lp.upper[offset + j] = sp.lp.upper[j];
        }
        for ((row, sense), affine) in sp.lp.rows.iter().zip(&sp.lp.row_senses).zip(&sp.rhs) {
            let mut full = vec![0.0; n_vars];
            full[offset..offset + block].copy_from_slice(row);
            for &(j, c) in &affine.terms {
                full[j] -= c;
            }
            lp.add_row(full, *sense, affine.constant);
        }
    }
    let mut kinds = decision_kinds(instance);
    kinds.extend(std::iter::repeat(VarKind::Continuous).take(r_len * block));
    Ok(MipProblem::new(lp, kinds))
}

pub fn solve_extensive(instance: &ImpInstance, gap_tol: f64) -> Result<(f64, ImpMasterDecision)> {
    solve_extensive_with(instance, gap_tol, &MipOptions::default())
}

pub fn solve_extensive_with(
    instance: &ImpInstance,
    gap_tol: f64,
    options: &MipOptions,
) -> Result<(f64, ImpMasterDecision)> {
    let mip = build_extensive(instance)?;
    let sol = solve_mip_with(&mip, gap_tol, options)?;
    match sol.status {
        MipStatus::Optimal => Ok((sol.objective, decision_from_solution(instance, &sol.x)?)),
        MipStatus::Limit => Err(Error::Limit(format!(
            "extensive form stopped after {} nodes with gap {:.3e}",
            sol.nodes, sol.gap
        ))),
        other => Err(Error::Internal(format!("extensive form reported {other:?}"))),
    }
}
