//! Best-bound branch-and-bound over LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::simplex::{solve_lp_warm, LpProblem, LpStatus, Sense, SimplexOptions, WarmStart};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipProblem {
    pub lp: LpProblem,
    pub kinds: Vec<VarKind>,
}

impl MipProblem {
    pub fn new(lp: LpProblem, kinds: Vec<VarKind>) -> Self {
        Self { lp, kinds }
    }

    pub fn validate(&self) -> Result<()> {
        self.lp.validate()?;
        if self.kinds.len() != self.lp.n_vars() {
            return Err(Error::input(format!(
                "integrality mask has {} entries for {} variables",
                self.kinds.len(),
                self.lp.n_vars()
            )));
        }
        Ok(())
    }

    /// Largest distance of a discrete variable from the nearest integer.
    pub fn integrality_violation(&self, x: &[f64]) -> f64 {
        self.kinds
            .iter()
            .zip(x)
            .filter(|(k, _)| k.is_discrete())
            .map(|(_, v)| (v - v.round()).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node budget exhausted; `x` holds the best incumbent, if any.
    Limit,
    /// No solution strictly better than [`MipOptions::cutoff`] exists.
    Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipSolution {
    pub status: MipStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Proven bound on the optimum (below the objective when minimising).
    pub best_bound: f64,
    pub nodes: usize,
    /// `|objective - best_bound| / (1 + |objective|)`.
    pub gap: f64,
}

impl MipSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MipOptions {
    pub node_limit: usize,
    pub int_tol: f64,
    /// Objective value (in the problem's sense) that solutions must beat.
    pub cutoff: Option<f64>,
    /// Memory allowed for tableaus kept to warm-start child nodes.
    pub warm_bytes: usize,
    pub simplex: SimplexOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            int_tol: 1e-6,
            cutoff: None,
            warm_bytes: 256 << 20,
            simplex: SimplexOptions::default(),
        }
    }
}

pub fn solve_mip(problem: &MipProblem, gap_tol: f64) -> Result<MipSolution> {
    solve_mip_with(problem, gap_tol, &MipOptions::default())
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Parent relaxation value, minimisation sense.
    bound: f64,
    depth: usize,
    seq: usize,
    warm: Option<Rc<WarmStart>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the maximum: smallest bound, then deepest, then newest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

pub fn solve_mip_with(problem: &MipProblem, gap_tol: f64, opts: &MipOptions) -> Result<MipSolution> {
    problem.validate()?;
    if !(gap_tol >= 0.0) {
        return Err(Error::input(format!("gap tolerance must be >= 0, got {gap_tol}")));
    }
    let sign = match problem.lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let n = problem.lp.n_vars();
    let mut lower = problem.lp.lower.clone();
    let mut upper = problem.lp.upper.clone();
    for j in 0..n {
        match problem.kinds[j] {
            VarKind::Continuous => {}
            VarKind::Integer | VarKind::Binary => {
                if problem.kinds[j] == VarKind::Binary {
                    lower[j] = lower[j].max(0.0);
                    upper[j] = upper[j].min(1.0);
                }
                lower[j] = (lower[j] - opts.int_tol).ceil();
                upper[j] = (upper[j] + opts.int_tol).floor();
            }
        }
    }
    let finish = |status, x: Vec<f64>, inc: f64, bound: f64, nodes| {
        let objective = sign * inc;
        let best_bound = sign * bound;
        let gap = if objective.is_finite() && best_bound.is_finite() {
            (objective - best_bound).abs() / (1.0 + objective.abs())
        } else {
            f64::INFINITY
        };
        MipSolution {
            status,
            x,
            objective,
            best_bound,
            nodes,
            gap,
        }
    };
    // Minimisation-sense value every solution has to beat.
    let bar = opts.cutoff.map_or(f64::INFINITY, |c| sign * c);
    let no_solution = |nodes| {
        if bar.is_finite() {
            finish(MipStatus::Cutoff, Vec::new(), f64::NAN, bar, nodes)
        } else {
            finish(MipStatus::Infeasible, Vec::new(), f64::NAN, f64::NAN, nodes)
        }
    };
    if (0..n).any(|j| lower[j] > upper[j]) {
        return Ok(no_solution(0));
    }

    let mut lp = problem.lp.clone();
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Node {
        lower,
        upper,
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq,
        warm: None,
    });
    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc = f64::INFINITY;
    let mut nodes = 0;

    while let Some(node) = heap.pop() {
        let limit = inc.min(bar);
        if node.bound >= limit - 1e-9 * (1.0 + limit.abs()) {
            // Every remaining node is at least as bad.
            break;
        }
        if incumbent.is_some() && (inc - node.bound) / (1.0 + inc.abs()) <= gap_tol {
            let bound = node.bound;
            return Ok(finish(MipStatus::Optimal, incumbent.unwrap(), inc, bound, nodes));
        }
        if nodes >= opts.node_limit {
            let bound = node.bound;
            let x = incumbent.unwrap_or_default();
            let inc = if x.is_empty() { f64::NAN } else { inc };
            return Ok(finish(MipStatus::Limit, x, inc, bound, nodes));
        }
        nodes += 1;

        lp.lower.clone_from(&node.lower);
        lp.upper.clone_from(&node.upper);
        let (sol, warm) = solve_lp_warm(&lp, &opts.simplex, node.warm.as_deref())?;
        let z = match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Ok(finish(
                    MipStatus::Unbounded,
                    Vec::new(),
                    f64::NEG_INFINITY,
                    f64::NEG_INFINITY,
                    nodes,
                ));
            }
            LpStatus::Optimal => sign * sol.objective,
        };
        let limit = inc.min(bar);
        if z >= limit - 1e-9 * (1.0 + limit.abs()) {
            continue;
        }

        let mut branch: Option<(usize, f64)> = None;
        let mut best_dist = opts.int_tol;
        for j in 0..n {
            if !problem.kinds[j].is_discrete() {
                continue;
            }
            let xj = sol.x[j];
            let frac = xj - xj.floor();
            let dist = frac.min(1.0 - frac);
            if dist > best_dist {
                best_dist = dist;
                branch = Some((j, xj));
            }
        }

        match branch {
            None => {
                let mut x = sol.x;
                for j in 0..n {
                    if problem.kinds[j].is_discrete() {
                        x[j] = x[j].round();
                    }
                }
                inc = sign * problem.lp.objective_value(&x);
                incumbent = Some(x);
            }
            Some((j, xj)) => {
                let keep = heap.len() * warm.bytes() < opts.warm_bytes;
                let warm = keep.then(|| Rc::new(warm));
                let mut up = Node {
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                    bound: z,
                    depth: node.depth + 1,
                    seq: 0,
                    warm: warm.clone(),
                };
                up.lower[j] = xj.ceil();
                seq += 1;
                up.seq = seq;
                heap.push(up);
                let mut down = node;
                down.upper[j] = xj.floor();
                down.bound = z;
                down.depth += 1;
                seq += 1;
                down.seq = seq;
                down.warm = warm;
                heap.push(down);
            }
        }
    }

    Ok(match incumbent {
        Some(x) => finish(MipStatus::Optimal, x, inc, inc, nodes),
        None => no_solution(nodes),
    })
}
