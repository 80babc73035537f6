#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Resource estimates, error budgets and classical oracles for pricing
//! path-dependent derivatives with quantum amplitude estimation.

pub mod amplitude;
pub mod benchmarks;
pub mod circuit_estimator;
pub mod config;
pub mod contracts;
pub mod error;
pub mod error_budget;
pub mod gaussian_loader;
pub mod market_model;
pub mod pricing;
pub mod qarith;

pub use error::{Error, Result};
