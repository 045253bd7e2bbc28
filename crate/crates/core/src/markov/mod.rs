//! Finite-state Arrow-price economies and Perron–Frobenius recovery.

mod approx;
mod ergodic;
mod extended;
mod long_term;
mod measures;
mod perron;
mod recovery;
mod types;

pub use approx::{
    persistent_approximation, persistent_economy, PersistentApproxConfig, PersistentApproxRow, ZetaTrial,
};
pub use ergodic::{ergodicity_check, ErgodicityReport};
pub use extended::{
    extended_pf_family, structured_recover, zeta_residual, AugmentedEconomy, StructuredRecovery,
    ZetaSolution,
};
pub use long_term::{
    forward_one_period_limit, holding_period_return, holding_period_return_limit,
    log_return_bound_check, yield_curve, yield_curve_with, CashFlow, LogBoundCheck, YieldMeasure,
    YieldPoint,
};
pub use measures::{forward_measure, risk_neutral, scaled_apply, scaled_power};
pub use perron::{
    enumerate_positive_eigen, is_primitive, perron_frobenius, power_iteration, PerronFrobenius,
    PerronSolution, PositiveEigenCandidate, PowerIterationOptions,
};
pub use recovery::{
    change_of_measure, martingale_increments, recover, recover_prices, recovered_stationary,
    sdf_decomposition, sdf_decomposition_with, SdfDecomposition,
};
pub use types::{
    build_economy, GaussianAugmentedFunctional, MarkovPricingEconomy, PricingMatrix,
    RecoveredMeasure, SdfMatrix, StochasticMatrix, ROW_SUM_TOL,
};
pub(crate) use long_term::return_limit_from;
pub(crate) use types::{matrix_from_rows, matrix_to_rows};
