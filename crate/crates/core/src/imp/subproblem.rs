//! Scenario subproblems: the recourse LP for fixed master decisions, its
//! dual solution, and the resulting optimality cut.
//!
//! Recourse variables per day `t` are the order quantity `k_t` (free), the
//! end-of-day inventory `d_t`, the holding space `p_t`, the emergency order
//! `o_t` and the overfill `v_t` (all nonnegative). Every row's right-hand
//! side is affine in the master column `x = (u, a)`, so the dual objective
//! `Σ_i y_i · rhs_i(x)` is itself the cut.

use serde::{Deserialize, Serialize};

use super::{ImpInstance, ImpMasterDecision};
use crate::error::{Error, Result};
use crate::ledger::Cut;
use crate::lp::{solve_lp, LpProblem, LpSolution, LpStatus, RowSense, Sense};

pub const VARS_PER_DAY: usize = 5;
pub const K: usize = 0;
pub const D: usize = 1;
pub const P: usize = 2;
pub const O: usize = 3;
pub const V: usize = 4;

pub fn var(t: usize, which: usize) -> usize {
    VARS_PER_DAY * t + which
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowRole {
    Flow(usize),
    Holding(usize),
    HoldingCarry(usize),
    Capacity(usize),
    OrderStart,
    OrderLower(usize),
    OrderUpper(usize),
    OrderCap(usize),
    OrderFloor(usize),
    Overfill(usize),
}

/// `constant + Σ coef · x[index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineRhs {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineRhs {
    fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(j, c)| acc + c * x[j])
    }
}

#[derive(Debug, Clone)]
pub struct Subproblem {
    pub scenario: usize,
    /// Recourse LP; its right-hand side is refreshed by [`Subproblem::set_decision`].
    pub lp: LpProblem,
    pub rhs: Vec<AffineRhs>,
    pub roles: Vec<RowRole>,
}

impl Subproblem {
    pub fn new(instance: &ImpInstance, scenario: usize) -> Self {
        let t_len = instance.horizon;
        let s_len = instance.n_schedules();
        let m = f64::from(instance.capacity);
        let y = f64::from(instance.initial);
        let n = &instance.demand[scenario];
        let nv = VARS_PER_DAY * t_len;

        let mut cost = vec![0.0; nv];
        for t in 0..t_len {
            cost[var(t, P)] = instance.holding;
            cost[var(t, O)] = instance.emergency;
            cost[var(t, V)] = instance.overfill;
        }
        let mut lp = LpProblem::new(Sense::Minimize, cost);
        for t in 0..t_len {
            lp.set_bounds(var(t, K), f64::NEG_INFINITY, f64::INFINITY);
        }
        let a = |t: usize| s_len + t;
        // Σ_s u_s w_st scaled by `scale`
        let gated = |t: usize, scale: f64| -> Vec<(usize, f64)> {
            (0..s_len).filter(|&s| instance.orders_on(s, t)).map(|s| (s, scale)).collect()
        };

        let mut rows: Vec<(Vec<(usize, f64)>, RowSense, AffineRhs, RowRole)> = Vec::new();
        for t in 0..t_len {
            let nt = f64::from(n[t]);
            if t == 0 {
                rows.push((
                    vec![(var(0, D), 1.0), (var(0, K), -1.0), (var(0, V), 1.0), (var(0, O), -1.0)],
                    RowSense::Eq,
                    AffineRhs::constant(y - nt),
                    RowRole::Flow(0),
                ));
                rows.push((
                    vec![(var(0, P), 1.0), (var(0, K), -1.0), (var(0, V), 1.0)],
                    RowSense::Ge,
                    AffineRhs::constant(y),
                    RowRole::Holding(0),
                ));
                rows.push((
                    vec![(var(0, K), 1.0), (var(0, V), -1.0)],
                    RowSense::Le,
                    AffineRhs::constant(m - y),
                    RowRole::Capacity(0),
                ));
                let mut terms = vec![(a(0), 1.0)];
                terms.extend(gated(0, -y));
                rows.push((
                    vec![(var(0, K), 1.0)],
                    RowSense::Eq,
                    AffineRhs { constant: 0.0, terms },
                    RowRole::OrderStart,
                ));
            } else {
                rows.push((
                    vec![
                        (var(t, D), 1.0),
                        (var(t - 1, D), -1.0),
                        (var(t, K), -1.0),
                        (var(t, V), 1.0),
                        (var(t, O), -1.0),
                    ],
                    RowSense::Eq,
                    AffineRhs::constant(-nt),
                    RowRole::Flow(t),
                ));
                rows.push((
                    vec![(var(t, P), 1.0)],
                    RowSense::Ge,
                    AffineRhs {
                        constant: 0.0,
                        terms: vec![(a(t), 1.0)],
                    },
                    RowRole::Holding(t),
                ));
                rows.push((
                    vec![(var(t, P), 1.0), (var(t - 1, P), -1.0)],
                    RowSense::Ge,
                    AffineRhs {
                        constant: 0.0,
                        terms: vec![(a(t), -1.0)],
                    },
                    RowRole::HoldingCarry(t),
                ));
                rows.push((
                    vec![(var(t - 1, D), 1.0), (var(t, K), 1.0), (var(t, V), -1.0)],
                    RowSense::Le,
                    AffineRhs::constant(m),
                    RowRole::Capacity(t),
                ));
                rows.push((
                    vec![(var(t, K), 1.0), (var(t - 1, D), 1.0)],
                    RowSense::Ge,
                    AffineRhs {
                        constant: 0.0,
                        terms: vec![(a(t), 1.0)],
                    },
                    RowRole::OrderLower(t),
                ));
                let mut terms = vec![(a(t), 1.0)];
                terms.extend(gated(t, -m));
                rows.push((
                    vec![(var(t, K), 1.0), (var(t - 1, D), 1.0)],
                    RowSense::Le,
                    AffineRhs { constant: m, terms },
                    RowRole::OrderUpper(t),
                ));
            }
            rows.push((
                vec![(var(t, K), 1.0)],
                RowSense::Le,
                AffineRhs {
                    constant: 0.0,
                    terms: vec![(a(t), 1.0)],
                },
                RowRole::OrderCap(t),
            ));
            rows.push((
                vec![(var(t, K), 1.0)],
                RowSense::Ge,
                AffineRhs {
                    constant: 0.0,
                    terms: gated(t, -m),
                },
                RowRole::OrderFloor(t),
            ));
            rows.push((
                vec![(var(t, V), 1.0)],
                RowSense::Le,
                AffineRhs {
                    constant: 0.0,
                    terms: vec![(a(t), 1.0)],
                },
                RowRole::Overfill(t),
            ));
        }

        let mut rhs = Vec::with_capacity(rows.len());
        let mut roles = Vec::with_capacity(rows.len());
        for (entries, sense, b, role) in rows {
            let mut dense = vec![0.0; nv];
            for (j, c) in entries {
                dense[j] += c;
            }
            lp.add_row(dense, sense, b.constant);
            rhs.push(b);
            roles.push(role);
        }
        Self {
            scenario,
            lp,
            rhs,
            roles,
        }
    }

    pub fn set_decision(&mut self, x: &[f64]) {
        for (b, affine) in self.lp.rhs.iter_mut().zip(&self.rhs) {
            *b = affine.eval(x);
        }
    }

    /// Solves the recourse LP at `x` and assembles duals and the cut.
    pub fn solve(&mut self, x: &[f64]) -> Result<SubproblemSolution> {
        self.set_decision(x);
        let primal = solve_lp(&self.lp)?;
        match primal.status {
            LpStatus::Optimal => {}
            other => {
                return Err(Error::Internal(format!(
                    "scenario {} subproblem reported {other:?}; emergency orders should keep it feasible and bounded",
                    self.scenario
                )))
            }
        }
        let n = x.len();
        let mut coeffs = vec![0.0; n];
        let mut constant = 0.0;
        for (yi, affine) in primal.duals.iter().zip(&self.rhs) {
            constant += yi * affine.constant;
            for &(j, c) in &affine.terms {
                coeffs[j] += yi * c;
            }
        }
        let cut = Cut {
            scenario: self.scenario,
            coeffs,
            constant,
        };
        let duals = ImpDualSolution::from_rows(&self.roles, &primal, &self.lp);
        Ok(SubproblemSolution { primal, duals, cut })
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub primal: LpSolution,
    pub duals: ImpDualSolution,
    pub cut: Cut,
}

/// Dual values grouped by constraint family, indexed by day.
///
/// Sign convention: each value is the derivative of the optimal cost with
/// respect to its row's right-hand side, so `≥` rows carry nonnegative and
/// `≤` rows nonpositive duals. Entries for rows that do not exist on a given
/// day (e.g. `omega[0]`) are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpDualSolution {
    /// Flow balance.
    pub alpha: Vec<f64>,
    /// Holding lower bounds (starting and per-day).
    pub gamma: Vec<f64>,
    /// Holding carry-over.
    pub omega: Vec<f64>,
    /// Capacity.
    pub phi: Vec<f64>,
    /// Overfill limit.
    pub rho: Vec<f64>,
    /// Day-zero order definition.
    pub xi0: f64,
    pub xi_lb: Vec<f64>,
    pub xi_ub: Vec<f64>,
    /// Order cap on the order-up-to level.
    pub sigma: Vec<f64>,
    /// Order floor on unscheduled days.
    pub pi: Vec<f64>,
    /// Dual objective.
    pub objective: f64,
    /// Primal recourse cost.
    pub primal_objective: f64,
}

impl ImpDualSolution {
    fn from_rows(roles: &[RowRole], sol: &LpSolution, lp: &LpProblem) -> Self {
        let t_len = lp.n_vars() / VARS_PER_DAY;
        let z = || vec![0.0; t_len];
        let mut out = Self {
            alpha: z(),
            gamma: z(),
            omega: z(),
            phi: z(),
            rho: z(),
            xi0: 0.0,
            xi_lb: z(),
            xi_ub: z(),
            sigma: z(),
            pi: z(),
            objective: sol.dual_objective(lp),
            primal_objective: sol.objective,
        };
        for (role, &y) in roles.iter().zip(&sol.duals) {
            match *role {
                RowRole::Flow(t) => out.alpha[t] = y,
                RowRole::Holding(t) => out.gamma[t] = y,
                RowRole::HoldingCarry(t) => out.omega[t] = y,
                RowRole::Capacity(t) => out.phi[t] = y,
                RowRole::OrderStart => out.xi0 = y,
                RowRole::OrderLower(t) => out.xi_lb[t] = y,
                RowRole::OrderUpper(t) => out.xi_ub[t] = y,
                RowRole::OrderCap(t) => out.sigma[t] = y,
                RowRole::OrderFloor(t) => out.pi[t] = y,
                RowRole::Overfill(t) => out.rho[t] = y,
            }
        }
        out
    }
}

/// Solves scenario `r` at `decision` and returns its duals and cut.
pub fn solve_dual_sp(
    instance: &ImpInstance,
    decision: &ImpMasterDecision,
    r: usize,
) -> Result<(ImpDualSolution, Cut)> {
    decision.validate(instance)?;
    if r >= instance.n_scenarios() {
        return Err(Error::input(format!("scenario {r} out of range 0..{}", instance.n_scenarios())));
    }
    let mut sp = Subproblem::new(instance, r);
    let sol = sp.solve(&decision.column(instance))?;
    Ok((sol.duals, sol.cut))
}
