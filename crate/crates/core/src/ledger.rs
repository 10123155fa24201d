//! Per-scenario store of subgradient cuts on the proxy variables `θ_r`.
//!
//! Each scenario `r` owns a coefficient block `A_r` (one row per generated
//! cut, `N` columns) and a constant vector `c_r`. The floor `θ_r ≥ 0` is
//! implicit and never stored, so row counts equal the number of generated cuts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The linear lower bound `θ_r ≥ coeffs · x + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub scenario: usize,
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl Cut {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, v) in self.coeffs.iter().zip(x) {
            acc += a * v;
        }
        acc + self.constant
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCuts {
    pub rows: Vec<Vec<f64>>,
    pub constants: Vec<f64>,
}

impl ScenarioCuts {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutLedger {
    dim: usize,
    scenarios: Vec<ScenarioCuts>,
}

impl CutLedger {
    pub fn new(n_scenarios: usize, dim: usize) -> Self {
        Self {
            dim,
            scenarios: vec![ScenarioCuts::default(); n_scenarios],
        }
    }

    /// Number of master decision variables `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn scenario(&self, r: usize) -> &ScenarioCuts {
        &self.scenarios[r]
    }

    pub fn total_cuts(&self) -> usize {
        self.scenarios.iter().map(ScenarioCuts::len).sum()
    }

    pub fn cuts(&self) -> impl Iterator<Item = Cut> + '_ {
        self.scenarios.iter().enumerate().flat_map(|(r, s)| {
            s.rows.iter().zip(&s.constants).map(move |(row, &c)| Cut {
                scenario: r,
                coeffs: row.clone(),
                constant: c,
            })
        })
    }

    pub fn add_cut(&mut self, cut: Cut) -> Result<()> {
        if cut.coeffs.len() != self.dim {
            return Err(Error::input(format!(
                "cut has {} coefficients, ledger dimension is {}",
                cut.coeffs.len(),
                self.dim
            )));
        }
        let n = self.scenarios.len();
        let slot = self
            .scenarios
            .get_mut(cut.scenario)
            .ok_or_else(|| Error::input(format!("scenario {} out of range 0..{n}", cut.scenario)))?;
        slot.rows.push(cut.coeffs);
        slot.constants.push(cut.constant);
        Ok(())
    }

    /// Largest stored cut for scenario `r` at `x`, floored at zero.
    pub fn max_cut_value(&self, r: usize, x: &[f64]) -> f64 {
        let s = &self.scenarios[r];
        let mut best = 0.0_f64;
        for (row, &c) in s.rows.iter().zip(&s.constants) {
            let mut acc = 0.0;
            for (a, v) in row.iter().zip(x) {
                acc += a * v;
            }
            best = best.max(acc + c);
        }
        best
    }

    /// Cut-approximated cost of each candidate decision.
    ///
    /// `decisions` holds the `B` columns of `D` (each of length `N`). For every
    /// scenario the loss matrix `A_r D + c_r 1ᵀ` is reduced by a column-wise
    /// maximum together with the zero floor; the scenario maxima are averaged
    /// and each candidate's fixed cost is added. Accumulation runs over cuts,
    /// then candidates, then coordinates.
    pub fn approx_losses(&self, decisions: &[Vec<f64>], fixed_costs: &[f64]) -> Result<Vec<f64>> {
        let b = decisions.len();
        if b == 0 {
            return Err(Error::input("approx_losses needs at least one decision column"));
        }
        if fixed_costs.len() != b {
            return Err(Error::input(format!(
                "{} fixed costs for {b} decision columns",
                fixed_costs.len()
            )));
        }
        if let Some(col) = decisions.iter().find(|c| c.len() != self.dim) {
            return Err(Error::input(format!(
                "decision column has length {}, ledger dimension is {}",
                col.len(),
                self.dim
            )));
        }
        if self.scenarios.is_empty() {
            return Err(Error::input("ledger has no scenarios"));
        }

        let mut totals = vec![0.0; b];
        let mut per_scenario = vec![0.0; b];
        for s in &self.scenarios {
            per_scenario.iter_mut().for_each(|v| *v = 0.0);
            for (row, &c) in s.rows.iter().zip(&s.constants) {
                for (col, best) in decisions.iter().zip(per_scenario.iter_mut()) {
                    let mut acc = 0.0;
                    for (a, d) in row.iter().zip(col) {
                        acc += a * d;
                    }
                    acc += c;
                    if acc > *best {
                        *best = acc;
                    }
                }
            }
            for (t, v) in totals.iter_mut().zip(&per_scenario) {
                *t += v;
            }
        }
        let r = self.scenarios.len() as f64;
        Ok(totals
            .iter()
            .zip(fixed_costs)
            .map(|(t, f)| t / r + f)
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ledger: Self = serde_json::from_str(text)?;
        for (r, s) in ledger.scenarios.iter().enumerate() {
            if s.rows.len() != s.constants.len() || s.rows.iter().any(|row| row.len() != ledger.dim) {
                return Err(Error::Format(format!("scenario {r} has inconsistent cut rows")));
            }
        }
        Ok(ledger)
    }
}
