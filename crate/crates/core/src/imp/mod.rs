//! Two-stage stochastic inventory management.

pub mod benders;
pub mod decision;
pub mod eval;
pub mod extensive;
pub mod instance;
pub mod master;
pub mod subproblem;

pub use benders::{run_benders, run_benders_with, BendersOptions, ImpBenders};
pub use decision::ImpMasterDecision;
pub use eval::{expected_cost, recourse_cost, scenario_cost, simulate, DayCost};
pub use extensive::{build_extensive, check_extensive_size, solve_extensive, solve_extensive_with};
pub use instance::{generate_instance, CostParams, ImpInstance, Schedule};
pub use master::{build_master, decision_from_solution};
pub use subproblem::{solve_dual_sp, ImpDualSolution, Subproblem};
