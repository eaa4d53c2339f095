//! Mean-field equilibria for competitive investment–consumption games with
//! external habit formation, plus an n-agent Monte Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exp_mfg;
pub mod model;
pub mod numerics;
pub mod power_mfg;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use model::{AgentClass, MarketParams, Regime, TypeDistribution};
pub use numerics::{GridPath, TimeGrid};
