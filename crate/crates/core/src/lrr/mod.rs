//! Continuous-time long-run-risk economy with recursive utility.

mod affine;
mod params;
mod simulate;
mod solve;
mod yields;

pub use affine::{affine_coefficients, affine_expectation, AffineExpectationCoeffs, ODE_ATOL, ODE_RTOL};
pub use params::{AffineFunctional, LrrParams, StateDynamics, PARAM_KEYS};
pub use simulate::{
    simulate_paths, stationary_density, Histogram2d, LrrSimConfig, PathEnsemble,
    StationaryDensity, HIST_BINS,
};
pub use solve::{
    changed_measure, pf_residuals, risk_neutral_measure, sdf_coefficients, solve_eigen,
    solve_lrr, solve_pf, solve_value_function, value_discriminant, value_martingale_loading,
    value_residuals, ChangedMeasureParams, LrrSolution, PfRoot, PfSolution, ValueCoefficients,
};
pub use yields::{
    quantile, yield_curves, LrrCashFlow, YieldCoefficients, YieldQuartiles, MONTHS,
};
