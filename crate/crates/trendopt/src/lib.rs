//! Trend-corrected adaptive stochastic optimizers and a deterministic
//! benchmark harness.
//!
//! The crate implements AdamT and AMSGradT — Adam-type optimizers whose
//! first- and second-moment estimates carry damped linear trend information —
//! alongside the SGD, Adam and AMSGrad baselines. It also ships
//! analytic-gradient benchmark models (logistic regression, feedforward nets
//! with optional dropout, quadratic and Rosenbrock surfaces), seeded data
//! pipelines, an experiment harness with regret tracking, and the independent
//! oracles in [`verify`] that back the test suite and the `trendopt verify`
//! command.

pub mod data;
pub mod error;
pub mod harness;
pub mod models;
pub mod optim;
pub mod smoothing;
pub mod verify;

pub(crate) mod util;

pub use error::{Error, Result};

/// Flat vector of 64-bit reals; the optimizer's entire view of a model.
pub type ParamVector = Vec<f64>;
