use anyhow::Result;
use smp_core::imp::{generate_instance, CostParams};
use smp_core::l0::{generate_rr_data_with, RrParams};

use crate::artifacts::write_text;
use crate::config::{ExperimentConfig, Problem};

/// Writes `n` instances seeded `seed, seed + 1, ...` as `imp-0000.json` or
/// `rr-0000.json` under the output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    let problem = cfg.problem()?;
    for k in 0..cfg.n {
        let seed = cfg.seed + k as u64;
        let (name, text) = match problem {
            Problem::Imp => {
                let inst = generate_instance(seed, cfg.horizon, cfg.scenarios, cfg.schedules, &CostParams::default())?;
                (format!("imp-{k:04}.json"), inst.to_json()?)
            }
            Problem::Rr => {
                let base = RrParams::default();
                let params = RrParams {
                    n_obs: cfg.observations,
                    n_features: cfg.features,
                    min_support: base.min_support.min(cfg.features),
                    max_support: base.max_support.min(cfg.features),
                    ..base
                };
                (format!("rr-{k:04}.json"), generate_rr_data_with(seed, &params)?.to_json()?)
            }
        };
        write_text(&cfg.out.join(name), &text)?;
    }
    println!("wrote {} {problem} instance(s) to {}", cfg.n, cfg.out.display());
    Ok(())
}
