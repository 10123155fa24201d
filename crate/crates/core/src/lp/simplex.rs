//! Dense bounded-variable primal simplex.
//!
//! Every row `i` gets a logical variable `s_i = a_i · x` whose bounds encode
//! the row sense (`≤ b` becomes `s_i ∈ (-∞, b]`, and so on). The constraint
//! system is then homogeneous, so the solver keeps a condensed tableau of
//! size `rows × structurals`: each basic variable is a linear combination of
//! the nonbasic ones, which sit at a bound (or at zero when free).
//!
//! Phase one minimises the total bound violation of the basic variables,
//! phase two the true objective. Pricing is Dantzig's rule until a run of
//! degenerate pivots triggers Bland's rule for the rest of the solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// A linear program `opt c·x  s.t.  A x (≤|=|≥) b,  l ≤ x ≤ u` with dense rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: Sense,
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub row_senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Empty problem over `cost.len()` variables, all bounded to `[0, ∞)`.
    pub fn new(sense: Sense, cost: Vec<f64>) -> Self {
        let n = cost.len();
        Self {
            sense,
            cost,
            rows: Vec::new(),
            row_senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(coeffs);
        self.row_senses.push(sense);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.rhs.len() != self.rows.len() || self.row_senses.len() != self.rows.len() {
            return Err(Error::input(format!(
                "{} rows but {} right-hand sides and {} senses",
                self.rows.len(),
                self.rhs.len(),
                self.row_senses.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::input("bound vectors must match the cost length"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) || !self.rhs[i].is_finite() {
                return Err(Error::input(format!("row {i} contains a non-finite value")));
            }
        }
        if self.cost.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("cost vector contains a non-finite value"));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::input(format!(
                    "variable {j} has bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.cost, x)
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let act = dot(row, x);
            let v = match self.row_senses[i] {
                RowSense::Le => act - self.rhs[i],
                RowSense::Ge => self.rhs[i] - act,
                RowSense::Eq => (act - self.rhs[i]).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`].
///
/// Duals follow the sensitivity convention `y_i = ∂ objective / ∂ b_i`, so for
/// a minimisation `≥` rows carry `y ≥ 0` and `≤` rows `y ≤ 0` (reversed for
/// maximisation). `reduced_costs` satisfy `c = Aᵀy + d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LpSolution {
    /// `bᵀy + dᵀx`; equals the primal objective at an optimal basis.
    pub fn dual_objective(&self, problem: &LpProblem) -> f64 {
        dot(&self.duals, &problem.rhs) + dot(&self.reduced_costs, &self.x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Primal feasibility and reduced-cost tolerance.
    pub tol: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_pivots: 50_000,
            tol: 1e-7,
            pivot_tol: 1e-9,
            bland_after: 1_000,
        }
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(problem, &SimplexOptions::default())
}

pub fn solve_lp_with(problem: &LpProblem, opts: &SimplexOptions) -> Result<LpSolution> {
    problem.validate()?;
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let (sol, _) = drive(Tableau::new(problem, sign), problem, sign, opts)?;
    Ok(sol)
}

/// Pivots after which a warm-started tableau is rebuilt from scratch.
const WARM_REFRESH: usize = 20_000;

/// Final tableau of a solve, reusable after the variable bounds change.
#[derive(Clone)]
pub(crate) struct WarmStart {
    tab: Tableau,
    age: usize,
}

impl WarmStart {
    /// Approximate heap footprint in bytes.
    pub(crate) fn bytes(&self) -> usize {
        8 * (self.tab.t.len() + 4 * self.tab.val.len())
    }
}

/// Solves `problem`, restarting from `warm` when given. The warm state must
/// come from a problem with the same rows, costs and row bounds.
pub(crate) fn solve_lp_warm(
    problem: &LpProblem,
    opts: &SimplexOptions,
    warm: Option<&WarmStart>,
) -> Result<(LpSolution, WarmStart)> {
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    if let Some(w) = warm.filter(|w| w.age < WARM_REFRESH) {
        let mut tab = w.tab.clone();
        tab.reset_bounds(problem);
        let (sol, tab) = drive(tab, problem, sign, opts)?;
        let trusted = sol.status != LpStatus::Optimal || problem.max_violation(&sol.x) <= 1e-6;
        if trusted {
            let age = w.age + sol.pivots;
            return Ok((sol, WarmStart { tab, age }));
        }
    }
    problem.validate()?;
    let (sol, tab) = drive(Tableau::new(problem, sign), problem, sign, opts)?;
    let age = sol.pivots;
    Ok((sol, WarmStart { tab, age }))
}

fn drive(mut tab: Tableau, problem: &LpProblem, sign: f64, opts: &SimplexOptions) -> Result<(LpSolution, Tableau)> {
    let mut state = PivotState::default();
    if !tab.run(Phase::Feasibility, opts, &mut state)? {
        let sol = tab.finish(problem, sign, LpStatus::Infeasible, state.pivots);
        return Ok((sol, tab));
    }
    let status = if tab.run(Phase::Optimality, opts, &mut state)? {
        LpStatus::Optimal
    } else {
        LpStatus::Unbounded
    };
    let sol = tab.finish(problem, sign, status, state.pivots);
    Ok((sol, tab))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Feasibility,
    Optimality,
}

#[derive(Default)]
struct PivotState {
    pivots: usize,
    degenerate_run: usize,
    bland: bool,
}

#[derive(Clone)]
struct Tableau {
    m: usize,
    ncols: usize,
    /// `m × ncols`, row-major: `x_head[i] = Σ_j t[i][j] · x_cols[j]`.
    t: Vec<f64>,
    head: Vec<usize>,
    cols: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    val: Vec<f64>,
    /// Minimisation costs over structurals then logicals.
    cost: Vec<f64>,
}

enum Ratio {
    Flip,
    Pivot { row: usize, to_upper: bool },
}

impl Tableau {
    fn new(p: &LpProblem, sign: f64) -> Self {
        let n = p.n_vars();
        let m = p.n_rows();
        let total = n + m;
        let mut lo = Vec::with_capacity(total);
        let mut hi = Vec::with_capacity(total);
        lo.extend_from_slice(&p.lower);
        hi.extend_from_slice(&p.upper);
        for i in 0..m {
            let b = p.rhs[i];
            let (l, u) = match p.row_senses[i] {
                RowSense::Le => (f64::NEG_INFINITY, b),
                RowSense::Ge => (b, f64::INFINITY),
                RowSense::Eq => (b, b),
            };
            lo.push(l);
            hi.push(u);
        }
        let mut val = vec![0.0; total];
        for j in 0..n {
            val[j] = if lo[j].is_finite() {
                lo[j]
            } else if hi[j].is_finite() {
                hi[j]
            } else {
                0.0
            };
        }
        let mut t = Vec::with_capacity(m * n);
        for row in &p.rows {
            t.extend_from_slice(row);
        }
        let mut cost = vec![0.0; total];
        for j in 0..n {
            cost[j] = sign * p.cost[j];
        }
        let mut tab = Self {
            m,
            ncols: n,
            t,
            head: (n..total).collect(),
            cols: (0..n).collect(),
            lo,
            hi,
            val,
            cost,
        };
        tab.recompute_basics();
        tab
    }

    /// Installs new structural bounds, moving nonbasic variables onto them.
    fn reset_bounds(&mut self, p: &LpProblem) {
        let n = p.n_vars();
        self.lo[..n].copy_from_slice(&p.lower);
        self.hi[..n].copy_from_slice(&p.upper);
        for &v in &self.cols {
            if self.val[v] < self.lo[v] {
                self.val[v] = self.lo[v];
            } else if self.val[v] > self.hi[v] {
                self.val[v] = self.hi[v];
            }
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.ncols..(i + 1) * self.ncols]
    }

    fn recompute_basics(&mut self) {
        for i in 0..self.m {
            let mut acc = 0.0;
            for (j, &tij) in self.row(i).iter().enumerate() {
                acc += tij * self.val[self.cols[j]];
            }
            self.val[self.head[i]] = acc;
        }
    }

    fn basic_costs(&self, phase: Phase, tol: f64) -> Vec<f64> {
        self.head
            .iter()
            .map(|&v| match phase {
                Phase::Optimality => self.cost[v],
                Phase::Feasibility => {
                    if self.val[v] < self.lo[v] - tol {
                        -1.0
                    } else if self.val[v] > self.hi[v] + tol {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }

    fn reduced_costs(&self, phase: Phase, cb: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = match phase {
            Phase::Optimality => self.cols.iter().map(|&v| self.cost[v]).collect(),
            Phase::Feasibility => vec![0.0; self.ncols],
        };
        for (i, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                for (dj, &tij) in d.iter_mut().zip(self.row(i)) {
                    *dj += c * tij;
                }
            }
        }
        d
    }

    /// Returns `true` when the phase ends at its optimum, `false` when phase
    /// one proves infeasibility or phase two detects an unbounded ray.
    fn run(&mut self, phase: Phase, opts: &SimplexOptions, st: &mut PivotState) -> Result<bool> {
        self.recompute_basics();
        loop {
            let cb = self.basic_costs(phase, opts.tol);
            if phase == Phase::Feasibility && cb.iter().all(|&c| c == 0.0) {
                return Ok(true);
            }
            let d = self.reduced_costs(phase, &cb);

            // Pricing.
            let mut enter: Option<(usize, f64)> = None;
            let mut best_score = 0.0;
            for (j, &dj) in d.iter().enumerate() {
                let v = self.cols[j];
                let dir = if dj < -opts.tol && self.hi[v] - self.val[v] > opts.tol {
                    1.0
                } else if dj > opts.tol && self.val[v] - self.lo[v] > opts.tol {
                    -1.0
                } else {
                    continue;
                };
                if st.bland {
                    let better = match enter {
                        None => true,
                        Some((bj, _)) => v < self.cols[bj],
                    };
                    if better {
                        enter = Some((j, dir));
                    }
                } else if dj.abs() > best_score {
                    best_score = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((col, dir)) = enter else {
                if phase == Phase::Feasibility {
                    return Ok(false);
                }
                return Ok(true);
            };

            if st.pivots >= opts.max_pivots {
                return Err(Error::Numerical(format!(
                    "simplex iteration limit of {} pivots exceeded",
                    opts.max_pivots
                )));
            }

            // Ratio test.
            let ev = self.cols[col];
            let mut step = f64::INFINITY;
            let mut choice: Option<Ratio> = None;
            let mut best_alpha = 0.0;
            for i in 0..self.m {
                let alpha = dir * self.t[i * self.ncols + col];
                if alpha.abs() <= opts.pivot_tol {
                    continue;
                }
                let v = self.head[i];
                let x = self.val[v];
                let (limit, to_upper) = if x < self.lo[v] - opts.tol {
                    if alpha > 0.0 {
                        ((self.lo[v] - x) / alpha, false)
                    } else {
                        continue;
                    }
                } else if x > self.hi[v] + opts.tol {
                    if alpha < 0.0 {
                        ((self.hi[v] - x) / alpha, true)
                    } else {
                        continue;
                    }
                } else if alpha > 0.0 {
                    if !self.hi[v].is_finite() {
                        continue;
                    }
                    (((self.hi[v] - x) / alpha).max(0.0), true)
                } else {
                    if !self.lo[v].is_finite() {
                        continue;
                    }
                    (((self.lo[v] - x) / alpha).max(0.0), false)
                };
                let tie = (limit - step).abs() <= 1e-12 * (1.0 + step.abs().min(1e12));
                let better = if limit < step && !tie {
                    true
                } else if tie {
                    match choice {
                        Some(Ratio::Pivot { row, .. }) if st.bland => v < self.head[row],
                        _ => alpha.abs() > best_alpha,
                    }
                } else {
                    false
                };
                if better {
                    step = limit;
                    best_alpha = alpha.abs();
                    choice = Some(Ratio::Pivot { row: i, to_upper });
                }
            }
            let range = if dir > 0.0 {
                self.hi[ev] - self.val[ev]
            } else {
                self.val[ev] - self.lo[ev]
            };
            if range.is_finite() && range <= step {
                step = range;
                choice = Some(Ratio::Flip);
            }
            let Some(choice) = choice else {
                if phase == Phase::Optimality {
                    return Ok(false);
                }
                return Err(Error::Numerical(
                    "phase-one ratio test found no blocking variable".into(),
                ));
            };

            // Update values along the edge.
            if step > 0.0 {
                self.val[ev] += dir * step;
                for i in 0..self.m {
                    let a = self.t[i * self.ncols + col];
                    if a != 0.0 {
                        let hv = self.head[i];
                        self.val[hv] += dir * a * step;
                    }
                }
            }
            st.pivots += 1;
            if step <= 1e-12 {
                st.degenerate_run += 1;
                if st.degenerate_run > opts.bland_after {
                    st.bland = true;
                }
            } else {
                st.degenerate_run = 0;
            }

            match choice {
                Ratio::Flip => {
                    self.val[ev] = if dir > 0.0 { self.hi[ev] } else { self.lo[ev] };
                }
                Ratio::Pivot { row, to_upper } => {
                    let lv = self.head[row];
                    self.val[lv] = if to_upper { self.hi[lv] } else { self.lo[lv] };
                    self.pivot(row, col);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let nc = self.ncols;
        let p = self.t[r * nc + c];
        let mut newrow: Vec<f64> = self.row(r).iter().map(|&v| -v / p).collect();
        newrow[c] = 1.0 / p;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + c];
            if f == 0.0 {
                continue;
            }
            let ri = &mut self.t[i * nc..(i + 1) * nc];
            ri[c] = 0.0;
            for (x, &nr) in ri.iter_mut().zip(&newrow) {
                *x += f * nr;
            }
        }
        self.t[r * nc..(r + 1) * nc].copy_from_slice(&newrow);
        std::mem::swap(&mut self.head[r], &mut self.cols[c]);
    }

    fn finish(&mut self, p: &LpProblem, sign: f64, status: LpStatus, pivots: usize) -> LpSolution {
        let n = p.n_vars();
        let m = p.n_rows();
        self.recompute_basics();
        let x: Vec<f64> = self.val[..n].to_vec();
        let mut duals = vec![0.0; m];
        let mut reduced_costs = vec![0.0; n];
        if status == LpStatus::Optimal {
            let cb = self.basic_costs(Phase::Optimality, 0.0);
            let d = self.reduced_costs(Phase::Optimality, &cb);
            for (j, &v) in self.cols.iter().enumerate() {
                if v < n {
                    reduced_costs[v] = sign * d[j];
                } else {
                    duals[v - n] = sign * d[j];
                }
            }
        }
        let objective = match status {
            LpStatus::Optimal => p.objective_value(&x),
            LpStatus::Infeasible => f64::NAN,
            LpStatus::Unbounded => match p.sense {
                Sense::Minimize => f64::NEG_INFINITY,
                Sense::Maximize => f64::INFINITY,
            },
        };
        LpSolution {
            status,
            x,
            duals,
            reduced_costs,
            objective,
            pivots,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_active_bound() {
        let mut lp = LpProblem::new(Sense::Minimize, vec![1.0]);
        lp.add_row(vec![1.0], RowSense::Ge, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_vertex_dual() {
        let mut lp = LpProblem::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_row(vec![1.0, 1.0], RowSense::Le, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LpProblem::new(Sense::Minimize, vec![1.0, 1.0]);
        lp.add_row(vec![1.0, 1.0], RowSense::Le, 1.0);
        lp.add_row(vec![1.0, 0.0], RowSense::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LpProblem::new(Sense::Maximize, vec![1.0, 0.0]);
        lp.add_row(vec![1.0, -1.0], RowSense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x - y  s.t. x + y = 2, x - y >= -4, x,y free, y <= 5
        let mut lp = LpProblem::new(Sense::Minimize, vec![1.0, -1.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        lp.set_bounds(1, f64::NEG_INFINITY, 5.0);
        lp.add_row(vec![1.0, 1.0], RowSense::Eq, 2.0);
        lp.add_row(vec![1.0, -1.0], RowSense::Ge, -4.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 4.0).abs() < 1e-9);
        assert!(lp.max_violation(&sol.x) < 1e-9);
        assert!((sol.dual_objective(&lp) - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn boxed_variable_bound_flip() {
        // max 3x + 2y, x,y in [0,1], x + y <= 1.5
        let mut lp = LpProblem::new(Sense::Maximize, vec![3.0, 2.0]);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.add_row(vec![1.0, 1.0], RowSense::Le, 1.5);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 4.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let mut lp = LpProblem::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.add_row(vec![1.0], RowSense::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::Input(_))));
    }

    #[test]
    fn pivot_budget_is_numerical_error() {
        let mut lp = LpProblem::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_row(vec![1.0, 2.0], RowSense::Le, 4.0);
        lp.add_row(vec![3.0, 1.0], RowSense::Le, 6.0);
        let opts = SimplexOptions {
            max_pivots: 1,
            ..Default::default()
        };
        assert!(matches!(solve_lp_with(&lp, &opts), Err(Error::Numerical(_))));
    }
}
