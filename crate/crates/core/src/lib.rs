//! Log-symmetric ARMAX regression for positive, autocorrelated time series.
//!
//! The response is modeled on the log scale: v_t = log y_t has a symmetric
//! conditional distribution whose median term combines covariates with
//! autoregressive and moving-average components in past log-scale
//! residuals, and whose dispersion follows its own covariates through a
//! log link. The crate provides the density kernels, conditional
//! maximum-likelihood fitting, stationarity and marginal-moment theory,
//! quantile-residual diagnostics, series simulation, and a Monte Carlo
//! harness for estimator quality, all surfaced through a CLI.

pub mod bfgs;
pub mod config;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod kernels;
pub mod model;
pub mod report;
pub mod simulation;
mod streams;
pub mod theory;

pub use error::{Error, Result};
