use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::ergodic::ergodicity_check;
use crate::markov::perron::perron_frobenius;
use crate::markov::types::{MarkovPricingEconomy, PricingMatrix, RecoveredMeasure, StochasticMatrix};

/// Recovers the long-term risk-neutral transition from prices alone.
pub fn recover_prices(prices: &PricingMatrix) -> Result<RecoveredMeasure> {
    let pf = perron_frobenius(prices)?;
    let q = prices.matrix();
    let n = q.nrows();
    let lam = (-pf.eta_hat).exp();
    let raw = DMatrix::from_fn(n, n, |i, j| lam * q[(i, j)] * pf.e_hat[j] / pf.e_hat[i]);
    let p_hat = StochasticMatrix::from_unnormalized(raw)?;
    let report = ergodicity_check(&p_hat);
    if !report.passed() {
        return Err(Error::NotErgodic(report.describe()));
    }
    Ok(RecoveredMeasure {
        eta_hat: pf.eta_hat,
        e_hat: pf.e_hat,
        e_star: pf.e_star,
        p_hat,
        h_increments: None,
    })
}

/// Recovery with the true transition known, so the martingale increments
/// `ĥ_ij = p̂_ij / p_ij` can be filled in.
pub fn recover(economy: &MarkovPricingEconomy) -> Result<RecoveredMeasure> {
    let mut rec = recover_prices(economy.prices())?;
    rec.h_increments = Some(martingale_increments(economy.transition(), &rec.p_hat));
    Ok(rec)
}

/// Likelihood ratio of `p_hat` against `p`, one where `p` is zero.
pub fn martingale_increments(p: &StochasticMatrix, p_hat: &StochasticMatrix) -> DMatrix<f64> {
    let n = p.n();
    DMatrix::from_fn(n, n, |i, j| {
        let pij = p.get(i, j);
        if pij > 0.0 {
            p_hat.get(i, j) / pij
        } else {
            1.0
        }
    })
}

/// Stationary distribution of the recovered chain, `ê*_i ê_i` normalized.
pub fn recovered_stationary(rec: &RecoveredMeasure) -> DVector<f64> {
    let w = rec.e_star.component_mul(&rec.e_hat);
    &w / w.sum()
}

/// Factors of the compounded SDF along a state path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfDecomposition {
    /// `exp(η̂ t)`
    pub trend: f64,
    /// `ê(x₀) / ê(x_t)`
    pub eigen_ratio: f64,
    /// `Ĥ_t / Ĥ₀`
    pub martingale: f64,
    /// `∏ s_{x_k x_{k+1}}` accumulated directly.
    pub sdf: f64,
}

impl SdfDecomposition {
    pub fn product(&self) -> f64 {
        self.trend * self.eigen_ratio * self.martingale
    }
}

/// Splits `S_t` along `path` into trend, eigenfunction ratio and martingale.
pub fn sdf_decomposition(economy: &MarkovPricingEconomy, path: &[usize]) -> Result<SdfDecomposition> {
    let rec = recover(economy)?;
    sdf_decomposition_with(economy, &rec, path)
}

/// As [`sdf_decomposition`] with a recovery already at hand.
pub fn sdf_decomposition_with(
    economy: &MarkovPricingEconomy,
    rec: &RecoveredMeasure,
    path: &[usize],
) -> Result<SdfDecomposition> {
    let n = economy.n();
    let Some(&x0) = path.first() else {
        return Err(Error::InvalidInput("path is empty".into()));
    };
    if let Some(&bad) = path.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidInput(format!("state {bad} out of range for {n} states")));
    }
    let h = rec
        .h_increments
        .clone()
        .unwrap_or_else(|| martingale_increments(economy.transition(), &rec.p_hat));
    let q = economy.prices().matrix();
    let mut log_sdf = 0.0;
    let mut log_h = 0.0;
    for (step, w) in path.windows(2).enumerate() {
        let (i, j) = (w[0], w[1]);
        if q[(i, j)] <= 0.0 {
            return Err(Error::ImpossiblePath { step, from: i, to: j });
        }
        log_sdf += economy.sdf().get(i, j).ln();
        log_h += h[(i, j)].ln();
    }
    let t = (path.len() - 1) as f64;
    let xt = path[path.len() - 1];
    Ok(SdfDecomposition {
        trend: (rec.eta_hat * t).exp(),
        eigen_ratio: rec.e_hat[x0] / rec.e_hat[xt],
        martingale: log_h.exp(),
        sdf: log_sdf.exp(),
    })
}

/// Changes measure by a multiplicative martingale with increments `h`
/// (`Σ_j p_ij h_ij = 1`): returns `(S∘H⁻¹, P∘H)`, which prices every claim
/// exactly as `(S, P)` does.
pub fn change_of_measure(
    economy: &MarkovPricingEconomy,
    h: &DMatrix<f64>,
) -> Result<MarkovPricingEconomy> {
    let n = economy.n();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::Dimension("martingale increments must be n×n".into()));
    }
    let p = economy.transition().matrix();
    for i in 0..n {
        let m: f64 = (0..n).map(|j| p[(i, j)] * h[(i, j)]).sum();
        if (m - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "increment row {i} has conditional mean {m}, not 1"
            )));
        }
    }
    let ph = StochasticMatrix::from_unnormalized(p.component_mul(h))?;
    let s = economy.sdf().matrix();
    let sh = DMatrix::from_fn(n, n, |i, j| {
        if p[(i, j)] > 0.0 {
            s[(i, j)] / h[(i, j)]
        } else {
            1.0
        }
    });
    crate::markov::types::build_economy(ph, crate::SdfMatrix::new(sh)?)
}
