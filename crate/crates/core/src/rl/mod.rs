//! Actor-critic reinforcement learning for master-problem surrogates.

pub mod dist;
pub mod env;
pub mod gae;
pub mod imp_env;
pub mod net;
pub mod normalizer;
pub mod policy;
pub mod ppo;
pub mod proposer;
pub mod rr_env;
pub mod train;

pub use dist::Categorical;
pub use env::{DecisionEnv, Env, Step};
pub use gae::{gae, standardize};
pub use imp_env::{ImpEnv, DEFAULT_SUBSAMPLE};
pub use net::{Architecture, Forward, PolicyNet, PortableNet};
pub use normalizer::RunningNorm;
pub use policy::{Act, ActMode, Policy};
pub use ppo::{clipped_objective, ppo_update, Optimizer, OptimizerKind, PpoConfig, PpoDiagnostics, RolloutBuffer, Transition};
pub use proposer::{surrogate_step, PolicyProposer};
pub use rr_env::{ols_with_pvalues, RrEnv};
pub use train::{log_to_csv, train, TrainConfig, TrainLogRow, Trainer, TRAIN_CSV_HEADER};
