pub mod cutplane;
pub mod error;
pub mod imp;
pub mod l0;
pub mod ledger;
pub mod lp;
pub mod rl;
pub mod rng;
pub mod surrogate;
pub mod trace;

pub use error::{Error, Result};
