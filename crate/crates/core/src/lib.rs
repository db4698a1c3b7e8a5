//! Simulation and design toolkit for adaptive Gaussian bandit experiments.
//!
//! - [`design`]: closed-form total MSE benchmarks, the pilot-size condition
//!   for two-stage adaptive Neyman allocation to beat uniform sampling, and
//!   the minimal pilot scan.
//! - [`estimators`]: sample mean, Horvitz-Thompson and pilot-centered IPW
//!   estimators, plus Monte Carlo MSE decompositions.
//! - [`oracle`]: the fixed-allocation optimum of the joint RMSE/regret
//!   objective.
//! - [`policies`]: uniform, two-stage adaptive Neyman, SARP, NARP and oracle
//!   policies behind a name-keyed registry.
//! - [`harness`]: replicated runs, metrics, pilot and horizon sweeps.

pub mod design;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod history;
pub mod instance;
pub mod oracle;
pub mod policies;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use history::{Branch, RoundRecord, RunHistory};
pub use instance::{BanditInstance, RewardFamily};
pub use rng::RngStream;
