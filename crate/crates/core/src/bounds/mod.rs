//! Divergence measures of the martingale component and lower bounds on them
//! from incomplete sets of asset prices.

mod divergence;
mod dual;
mod problem;

pub use divergence::DivergenceSpec;
pub use dual::{
    bootstrap_bound, unconditional_bound, unconditional_bound_with, BootstrapBound,
    BootstrapOptions, BoundOptions, BoundResult,
};
pub use problem::{
    conditional_discrepancy, generate_problem_from_chain, kazemi_test, population_discrepancy,
    BoundProblem, PayoffMenu, SampleMode,
};
