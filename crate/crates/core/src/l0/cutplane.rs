//! Outer-approximation cutting planes for L0-penalised least squares.

use serde::{Deserialize, Serialize};

use super::fit::{beats, tangent_cut, Design, SubsetModel};
use super::RegressionData;
use crate::cutplane::{run_cutting_plane, CuttingPlaneProblem, Evaluation, RunOutcome, SurrogateHook};
use crate::error::{Error, Result};
use crate::ledger::CutLedger;
use crate::lp::{solve_mip_with, LpProblem, MipOptions, MipProblem, MipStatus, RowSense, Sense, VarKind};

pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// A master point: coefficients and the support they are linked to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L0Candidate {
    pub beta: Vec<f64>,
    pub support: Vec<bool>,
}

impl L0Candidate {
    pub fn support_size(&self) -> usize {
        self.support.iter().filter(|&&z| z).count()
    }
}

#[derive(Debug, Clone)]
pub struct L0Options {
    pub lambda: f64,
    /// Absolute gap between master bound and best evaluated objective.
    pub tol: f64,
    pub max_iterations: usize,
    pub mip: MipOptions,
}

impl L0Options {
    pub fn new(lambda: f64, tol: f64) -> Self {
        Self {
            lambda,
            tol,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            mip: MipOptions::default(),
        }
    }
}

/// Big-M for the coefficient link: twice the largest full least-squares
/// coefficient, at least one.
pub fn big_m(design: &Design) -> Result<f64> {
    let full = design.fit(&vec![true; design.n_features()])?;
    Ok((2.0 * full.beta.iter().fold(0.0_f64, |a, b| a.max(b.abs()))).max(1.0))
}

pub struct L0Problem {
    design: Design,
    options: L0Options,
    big_m: f64,
    best: Option<(f64, L0Candidate)>,
    pub master_solves: usize,
}

impl L0Problem {
    pub fn new(data: &RegressionData, options: L0Options) -> Result<Self> {
        data.validate()?;
        if !(options.lambda >= 0.0) || !options.lambda.is_finite() {
            return Err(Error::input(format!("lambda must be finite and >= 0, got {}", options.lambda)));
        }
        if !(options.tol > 0.0) {
            return Err(Error::input(format!("tolerance must be positive, got {}", options.tol)));
        }
        let design = Design::new(data);
        let big_m = big_m(&design)?;
        Ok(Self {
            design,
            options,
            big_m,
            best: None,
            master_solves: 0,
        })
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    /// Master over `(β, z, θ)`: minimise `θ + λΣz` subject to `|β_i| ≤ M z_i`
    /// and every stored cut `θ ≥ gᵀβ + c`.
    pub fn build_master(&self, ledger: &CutLedger) -> MipProblem {
        let p = self.design.n_features();
        let n = 2 * p + 1;
        let mut cost = vec![0.0; n];
        cost[p..2 * p].iter_mut().for_each(|c| *c = self.options.lambda);
        cost[2 * p] = 1.0;
        let mut lp = LpProblem::new(Sense::Minimize, cost);
        for i in 0..p {
            lp.set_bounds(i, -self.big_m, self.big_m);
            lp.set_bounds(p + i, 0.0, 1.0);
        }
        lp.set_bounds(2 * p, 0.0, f64::INFINITY);
        for i in 0..p {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                row[i] = sign;
                row[p + i] = -self.big_m;
                lp.add_row(row, RowSense::Le, 0.0);
            }
        }
        for cut in ledger.cuts() {
            let mut row = vec![0.0; n];
            for (r, g) in row.iter_mut().zip(&cut.coeffs) {
                *r = -g;
            }
            row[2 * p] = 1.0;
            lp.add_row(row, RowSense::Ge, cut.constant);
        }
        let mut kinds = vec![VarKind::Continuous; n];
        kinds[p..2 * p].iter_mut().for_each(|k| *k = VarKind::Binary);
        MipProblem::new(lp, kinds)
    }
}

impl CuttingPlaneProblem for L0Problem {
    type Candidate = L0Candidate;

    fn n_scenarios(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        self.design.n_features()
    }

    fn solve_master(&mut self, ledger: &CutLedger) -> Result<(L0Candidate, f64)> {
        self.master_solves += 1;
        let p = self.design.n_features();
        let mip = self.build_master(ledger);
        let mut opts = self.options.mip;
        opts.cutoff = self.best.as_ref().map(|b| b.0);
        let sol = solve_mip_with(&mip, 0.0, &opts)?;
        match sol.status {
            MipStatus::Optimal => {
                let beta = sol.x[..p].to_vec();
                let support = sol.x[p..2 * p].iter().map(|&z| z > 0.5).collect();
                Ok((L0Candidate { beta, support }, sol.best_bound.min(sol.objective)))
            }
            MipStatus::Cutoff => {
                // nothing beats the incumbent, which is proposed again
                let (_, inc) = self.best.as_ref().expect("cutoff implies an incumbent");
                Ok((inc.clone(), sol.best_bound))
            }
            MipStatus::Limit => Err(Error::Limit(format!("master stopped after {} nodes", sol.nodes))),
            other => Err(Error::Internal(format!("master problem reported {other:?}"))),
        }
    }

    fn evaluate(&mut self, candidate: &L0Candidate) -> Result<Evaluation<L0Candidate>> {
        let model = self.design.fit(&candidate.support)?;
        let mut cuts = vec![tangent_cut(&self.design, &model.beta)?];
        let moved = candidate
            .beta
            .iter()
            .zip(&model.beta)
            .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()));
        if moved {
            cuts.push(tangent_cut(&self.design, &candidate.beta)?);
        }
        let objective = model.objective(self.options.lambda);
        let incumbent = L0Candidate {
            beta: model.beta,
            support: model.support,
        };
        let size = incumbent.support_size();
        if self.best.as_ref().map_or(true, |(obj, inc)| beats(objective, size, *obj, inc.support_size())) {
            self.best = Some((objective, incumbent.clone()));
        }
        Ok(Evaluation {
            objective,
            incumbent,
            cuts,
        })
    }

    fn from_column(&self, column: &[f64]) -> Result<L0Candidate> {
        if column.len() != self.dim() || column.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("coefficient column must be a finite vector of length P"));
        }
        Ok(L0Candidate {
            beta: column.to_vec(),
            support: column.iter().map(|&b| b != 0.0).collect(),
        })
    }

    fn key(&self, candidate: &L0Candidate) -> Vec<u64> {
        candidate.support.iter().map(|&z| u64::from(z)).collect()
    }

    fn converged(&self, lower: f64, upper: f64) -> bool {
        upper - lower <= self.options.tol
    }

    fn improves(&self, new_obj: f64, new: &L0Candidate, old_obj: f64, old: &L0Candidate) -> bool {
        beats(new_obj, new.support_size(), old_obj, old.support_size())
    }
}

/// Result of an L0 cutting-plane run.
#[derive(Debug, Clone)]
pub struct L0Run {
    pub model: SubsetModel,
    pub outcome: RunOutcome<L0Candidate>,
    pub big_m: f64,
    pub master_solves: usize,
}

impl L0Run {
    pub fn objective(&self) -> f64 {
        self.outcome.objective
    }
}

pub fn run_l0_cutplane(
    data: &RegressionData,
    lambda: f64,
    tol: f64,
    surrogate: Option<SurrogateHook<'_>>,
) -> Result<L0Run> {
    run_l0_cutplane_with(data, &L0Options::new(lambda, tol), surrogate)
}

pub fn run_l0_cutplane_with(
    data: &RegressionData,
    options: &L0Options,
    surrogate: Option<SurrogateHook<'_>>,
) -> Result<L0Run> {
    let mut problem = L0Problem::new(data, options.clone())?;
    let outcome = run_cutting_plane(&mut problem, options.max_iterations, surrogate)?;
    let model = problem.design.fit(&outcome.incumbent.support)?;
    let limit = 0.999 * problem.big_m;
    if let Some(b) = model.beta.iter().find(|b| b.abs() >= limit) {
        return Err(Error::Numerical(format!(
            "coefficient {b} reaches the big-M bound {}",
            problem.big_m
        )));
    }
    Ok(L0Run {
        model,
        outcome,
        big_m: problem.big_m,
        master_solves: problem.master_solves,
    })
}
