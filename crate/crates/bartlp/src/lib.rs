//! Nonparametric local projections.
//!
//! This crate estimates impulse responses without committing to a linear
//! model. Each horizon gets its own regression of `y_{t+h}` on a shock
//! measure, controls, and (past horizon zero) leads of the horizon-zero
//! residuals; the regression function is a Bayesian sum-of-trees model
//! sampled by MCMC, so the response to a shock is read off as a difference
//! of posterior predictions rather than a coefficient.
//!
//! What lives where:
//!
//! - [`bart`] — the sum-of-trees sampler (tree moves in [`tree`]);
//! - [`lp`] — per-horizon design construction and residual-lead augmentation;
//! - [`girf`] — generalized impulse responses, state-conditional variants,
//!   and cumulative multipliers;
//! - [`dgp`] — three benchmark simulators (a variance-feedback VAR, a
//!   threshold VAR, and a sign-asymmetric moving average) plus a brute-force
//!   simulator for their true responses;
//! - [`montecarlo`] — the replication harness comparing tree-based and
//!   linear local projections against the simulated truth;
//! - [`cli`] — the `bartlp` binary: `simulate`, `fit`, `girf`, `montecarlo`,
//!   and `multiplier` subcommands over CSV/TOML/JSON files.
//!
//! The fastest way in is the examples directory:
//!
//! ```text
//! cargo run --release --example bart_regression
//! cargo run --release --example girf_shock_series
//! cargo run --release --example girf_impulse_vector
//! cargo run --release --example state_dependent
//! cargo run --release --example monte_carlo
//! ```
//!
//! Everything that consumes randomness takes an explicit [`rng::RngStream`];
//! two runs with the same seed produce byte-identical output, including
//! across thread counts.

pub mod bart;
pub mod cli;
pub mod config;
pub mod dgp;
pub mod dist;
pub mod error;
pub mod girf;
pub mod linalg;
pub mod lp;
pub mod mat;
pub mod montecarlo;
pub mod rng;
pub mod series;
pub mod tree;

pub use error::Error;

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
