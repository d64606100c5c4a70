//! Non-Bayesian social learning over networks with partial information
//! sharing.
//!
//! Agents hold beliefs over a finite hypothesis set `0..H`, update them with
//! private observations (a local Bayes step) and pool them geometrically with
//! their neighbours. Under partial sharing each agent transmits a single
//! belief component, the one for the hypothesis of interest, and receivers
//! complete it into a full vector with a *filling strategy*.
//!
//! The crate is organised as:
//!
//! - [`graph`]: combination matrices, connectivity and the Perron vector;
//! - [`models`]: likelihood families, KL divergences, identifiability;
//! - [`learning`]: belief states and the four update strategies;
//! - [`analysis`]: confusion ratios, limit predictions, decision rules,
//!   the memoryless-failure predictor and martingale diagnostics.
//!
//! Hypotheses and agents are zero-based indices throughout.

pub mod analysis;
pub mod error;
pub mod graph;
pub mod learning;
pub mod logmath;
pub mod models;
pub mod rng;

pub use error::{Error, Result};
