//! Linear and mixed-integer programming substrate.

pub mod mip;
pub mod simplex;

pub use mip::{solve_mip, solve_mip_with, MipOptions, MipProblem, MipSolution, MipStatus, VarKind};
pub use simplex::{
    solve_lp, solve_lp_with, LpProblem, LpSolution, LpStatus, RowSense, Sense, SimplexOptions,
};
