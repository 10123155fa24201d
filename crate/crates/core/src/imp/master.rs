//! Benders master problem over `(u, a, θ)`.

use super::{ImpInstance, ImpMasterDecision};
use crate::error::{Error, Result};
use crate::ledger::CutLedger;
use crate::lp::{LpProblem, MipProblem, RowSense, Sense, VarKind};

/// Rows shared by the master and the extensive form: order levels only on
/// scheduled days and exactly one schedule. `n_vars` is the full column count.
pub(crate) fn add_schedule_rows(instance: &ImpInstance, lp: &mut LpProblem, n_vars: usize) {
    let s_len = instance.n_schedules();
    let m = f64::from(instance.capacity);
    for t in 0..instance.horizon {
        let mut row = vec![0.0; n_vars];
        row[s_len + t] = 1.0;
        for s in 0..s_len {
            if instance.orders_on(s, t) {
                row[s] = -m;
            }
        }
        lp.add_row(row, RowSense::Le, 0.0);
    }
    let mut row = vec![0.0; n_vars];
    row[..s_len].iter_mut().for_each(|v| *v = 1.0);
    lp.add_row(row, RowSense::Eq, 1.0);
}

pub(crate) fn decision_kinds(instance: &ImpInstance) -> Vec<VarKind> {
    let mut kinds = vec![VarKind::Binary; instance.n_schedules()];
    kinds.extend(std::iter::repeat(VarKind::Integer).take(instance.horizon));
    kinds
}

pub(crate) fn bound_decisions(instance: &ImpInstance, lp: &mut LpProblem) {
    let s_len = instance.n_schedules();
    for s in 0..s_len {
        lp.set_bounds(s, 0.0, 1.0);
    }
    for t in 0..instance.horizon {
        lp.set_bounds(s_len + t, 0.0, f64::from(instance.capacity));
    }
}

/// Columns are `u` (|S|), then `a` (T), then `θ` (R).
pub fn build_master(instance: &ImpInstance, ledger: &CutLedger) -> Result<MipProblem> {
    let dim = instance.dim();
    let r_len = instance.n_scenarios();
    if ledger.dim() != dim || ledger.n_scenarios() != r_len {
        return Err(Error::input(format!(
            "ledger is {}x{} (scenarios x dim), instance needs {r_len}x{dim}",
            ledger.n_scenarios(),
            ledger.dim()
        )));
    }
    let n_vars = dim + r_len;
    let mut cost = vec![0.0; n_vars];
    for (c, sch) in cost.iter_mut().zip(&instance.schedules) {
        *c = sch.cost;
    }
    for c in &mut cost[dim..] {
        *c = 1.0 / r_len as f64;
    }
    let mut lp = LpProblem::new(Sense::Minimize, cost);
    bound_decisions(instance, &mut lp);
    add_schedule_rows(instance, &mut lp, n_vars);
    for cut in ledger.cuts() {
        let mut row = vec![0.0; n_vars];
        for (v, c) in row.iter_mut().zip(&cut.coeffs) {
            *v = -c;
        }
        row[dim + cut.scenario] = 1.0;
        lp.add_row(row, RowSense::Ge, cut.constant);
    }
    let mut kinds = decision_kinds(instance);
    kinds.extend(std::iter::repeat(VarKind::Continuous).take(r_len));
    Ok(MipProblem::new(lp, kinds))
}

/// Reads the decision block of a master (or extensive-form) solution.
pub fn decision_from_solution(instance: &ImpInstance, x: &[f64]) -> Result<ImpMasterDecision> {
    let s_len = instance.n_schedules();
    let schedule = (0..s_len)
        .max_by(|&i, &j| x[i].total_cmp(&x[j]).then(j.cmp(&i)))
        .ok_or_else(|| Error::input("instance has no schedules"))?;
    let order_up_to = x[s_len..s_len + instance.horizon]
        .iter()
        .map(|v| v.round().max(0.0) as u32)
        .collect();
    ImpMasterDecision::new(instance, schedule, order_up_to)
        .map_err(|e| Error::Numerical(format!("master solution does not decode to a feasible decision: {e}")))
}
