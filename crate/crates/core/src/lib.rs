//! Simulation toolkit for non-stationary rested multi-armed bandits.
//!
//! Arms are stochastic processes that advance only when pulled. Policies
//! estimate each arm's next reward from a weighted average of its past
//! rewards and add a confidence width that scales with the 2-norm of the
//! weights; matching the weights to the process family keeps the estimate's
//! bias (its discrepancy) small. Regret is measured path by path against the
//! environments' exact conditional-mean oracles.

pub mod config;
pub mod engine;
pub mod env;
pub mod error;
pub mod history;
pub mod ledger;
pub mod panel;
pub mod policy;
pub mod report;
pub mod rng;
pub mod verify;
pub mod weights;

pub use error::{BanditError, Result};
