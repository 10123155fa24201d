//! L0-penalised least-squares regression.

pub mod cutplane;
pub mod data;
pub mod fit;
pub mod lasso;
pub mod metrics;

pub use cutplane::{big_m, run_l0_cutplane, run_l0_cutplane_with, L0Candidate, L0Options, L0Problem, L0Run};
pub use data::{generate_rr_data, generate_rr_data_with, RegressionData, RrParams};
pub use fit::{beats, enumerate_best_subset, fit_subset, subgradient_cut, support_from_mask, Design, SubsetModel};
pub use lasso::{fit_lasso, lasso_kkt_residual};
pub use metrics::{metrics_csv_row, rr_metrics, RrMetrics, METRICS_CSV_HEADER};
