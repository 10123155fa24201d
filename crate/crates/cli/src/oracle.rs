use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use smp_core::imp::{check_extensive_size, solve_extensive};
use smp_core::l0::enumerate_best_subset;
use smp_core::Error;

use crate::artifacts::{instance_files, load_imp, load_rr, stem, write_json};
use crate::config::{ExperimentConfig, Problem};
use crate::solve::Solution;

/// Subset enumeration visits 2^P supports.
pub const ORACLE_MAX_FEATURES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub problem: Problem,
    pub instance: String,
    pub objective: f64,
    pub solution: Solution,
}

/// Certified optimum of each instance by extensive form or enumeration.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    let problem = cfg.problem()?;
    for path in instance_files(cfg.input()?)? {
        let instance = stem(&path);
        let report = match problem {
            Problem::Imp => {
                let inst = load_imp(&path)?;
                check_extensive_size(&inst).with_context(|| format!("{instance} is too large for the extensive form"))?;
                let (objective, decision) = solve_extensive(&inst, 0.0)?;
                OracleReport {
                    problem,
                    instance,
                    objective,
                    solution: Solution::imp(&decision),
                }
            }
            Problem::Rr => {
                let data = load_rr(&path)?;
                let p = data.n_features();
                if p > ORACLE_MAX_FEATURES {
                    return Err(Error::input(format!(
                        "{instance} has {p} features; enumeration is limited to {ORACLE_MAX_FEATURES}"
                    ))
                    .into());
                }
                let model = enumerate_best_subset(&data, cfg.lambda)?;
                OracleReport {
                    problem,
                    instance,
                    objective: model.objective(cfg.lambda),
                    solution: Solution::rr(&model),
                }
            }
        };
        write_json(&cfg.out.join(format!("{}.oracle.json", report.instance)), &report)?;
        println!("{}: optimum {}", report.instance, report.objective);
    }
    Ok(())
}
