use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::types::{PricingMatrix, StochasticMatrix};

/// One-period risk-neutral transition `q_ij / q̄_i` and bond prices `q̄`.
pub fn risk_neutral(prices: &PricingMatrix) -> Result<(StochasticMatrix, DVector<f64>)> {
    let bonds = prices.bond_prices();
    let q = prices.matrix();
    let p_bar = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] / bonds[i]);
    Ok((StochasticMatrix::from_unnormalized(p_bar)?, bonds))
}

/// `Qᵗ` divided by a running scale, returned with the log of that scale so
/// that `Qᵗ = exp(log_scale) · matrix`.
pub fn scaled_power(q: &DMatrix<f64>, t: usize) -> (DMatrix<f64>, f64) {
    let n = q.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut log_scale = 0.0;
    for _ in 0..t {
        out = &out * q;
        let top = out.amax();
        out /= top;
        log_scale += top.ln();
    }
    (out, log_scale)
}

/// Repeatedly applies `m` to `v`, `t` times, rescaling each step. Returns the
/// final direction and the accumulated log scale, so that
/// `mᵗ v = exp(log_scale) · direction`.
pub fn scaled_apply(m: &DMatrix<f64>, v: &DVector<f64>, t: usize) -> (DVector<f64>, f64) {
    let mut out = v.clone();
    let mut log_scale = 0.0;
    for _ in 0..t {
        out = m * out;
        let top = out.amax();
        if top > 0.0 {
            out /= top;
            log_scale += top.ln();
        }
    }
    (out, log_scale)
}

/// Horizon-`t` forward measure: rows of `Qᵗ` normalized by the `t`-period
/// bond price.
pub fn forward_measure(prices: &PricingMatrix, horizon: usize) -> Result<StochasticMatrix> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let (qt, _) = scaled_power(prices.matrix(), horizon);
    StochasticMatrix::from_unnormalized(qt)
}
