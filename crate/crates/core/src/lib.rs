//! Perron–Frobenius recovery of probability measures from Arrow prices,
//! stochastic discount factor decomposition, structural SDF models and
//! divergence bounds on the martingale component.

pub mod bounds;
pub mod diffusion;
pub mod error;
pub mod io;
pub mod lrr;
pub mod markov;
pub mod preferences;
pub mod sim;

pub use error::{Error, Result};
pub use markov::{
    build_economy, recover, GaussianAugmentedFunctional, MarkovPricingEconomy, PricingMatrix,
    RecoveredMeasure, SdfMatrix, StochasticMatrix,
};
