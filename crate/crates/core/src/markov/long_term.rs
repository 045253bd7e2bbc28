use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::measures::scaled_apply;
use crate::markov::perron::perron_frobenius;
use crate::markov::recovery::recover;
use crate::markov::types::{
    GaussianAugmentedFunctional, MarkovPricingEconomy, PricingMatrix, RecoveredMeasure,
    StochasticMatrix,
};

/// Limit of one-period holding returns on ever longer bonds,
/// `R∞_ij = exp(−η̂) ê_j / ê_i`.
pub fn holding_period_return_limit(prices: &PricingMatrix) -> Result<DMatrix<f64>> {
    let pf = perron_frobenius(prices)?;
    Ok(return_limit_from(pf.eta_hat, &pf.e_hat))
}

pub(crate) fn return_limit_from(eta_hat: f64, e_hat: &DVector<f64>) -> DMatrix<f64> {
    let n = e_hat.len();
    let lam = (-eta_hat).exp();
    DMatrix::from_fn(n, n, |i, j| lam * e_hat[j] / e_hat[i])
}

/// Holding return from `i` to `j` on a bond of maturity `tau`:
/// `[Q^(τ−1) 𝟙]_j / [Q^τ 𝟙]_i`.
pub fn holding_period_return(prices: &PricingMatrix, tau: usize) -> Result<DMatrix<f64>> {
    if tau < 1 {
        return Err(Error::InvalidInput("maturity must be at least 1".into()));
    }
    let q = prices.matrix();
    let n = q.nrows();
    let (b_prev, _) = scaled_apply(q, &DVector::from_element(n, 1.0), tau - 1);
    let b = q * &b_prev;
    Ok(DMatrix::from_fn(n, n, |i, j| b_prev[j] / b[i]))
}

/// One-period transition implied by the maturity-`tau` forward measure,
/// `p_ij s_ij [Q^(τ−1) 𝟙]_j / [Q^τ 𝟙]_i`. Converges to `P̂` as `tau` grows.
pub fn forward_one_period_limit(prices: &PricingMatrix, tau: usize) -> Result<StochasticMatrix> {
    if tau < 2 {
        return Err(Error::InvalidInput("maturity must be at least 2".into()));
    }
    let q = prices.matrix();
    let n = q.nrows();
    let (b_prev, _) = scaled_apply(q, &DVector::from_element(n, 1.0), tau - 1);
    let b = q * &b_prev;
    let m = DMatrix::from_fn(n, n, |i, j| q[(i, j)] * b_prev[j] / b[i]);
    StochasticMatrix::from_unnormalized(m)
}

/// Probability measure used to compute expected cash flows in a yield.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YieldMeasure {
    Physical,
    LongTermRiskNeutral,
}

/// A cash flow `G_t ψ(X_t)`: stationary payoff `ψ` times an optional growth
/// functional with state-pair conditional increments `g_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct CashFlow {
    pub payoff: DVector<f64>,
    pub growth: Option<DMatrix<f64>>,
}

impl CashFlow {
    pub fn stationary(payoff: DVector<f64>) -> Self {
        Self { payoff, growth: None }
    }

    pub fn unit(n: usize) -> Self {
        Self::stationary(DVector::from_element(n, 1.0))
    }

    pub fn growing(growth: DMatrix<f64>) -> Self {
        let n = growth.nrows();
        Self {
            payoff: DVector::from_element(n, 1.0),
            growth: Some(growth),
        }
    }

    /// Growth given as a multiplicative functional; the Gaussian block is
    /// integrated out. The Gaussian shocks are independent of the chain and
    /// unaffected by the chain's change of measure.
    pub fn from_functional(f: &GaussianAugmentedFunctional, transition: &StochasticMatrix) -> Result<Self> {
        Ok(Self::growing(f.conditional_increment(transition)?))
    }
}

/// Yields on one horizon, one entry per current state.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldPoint {
    pub horizon: usize,
    pub yields: DVector<f64>,
}

/// `y_t(x) = (1/t) [log E(G_t ψ(X_t) | x) − log E(S_t G_t ψ(X_t) | x)]`, with
/// the expectation in the first term taken under `measure`.
pub fn yield_curve(
    economy: &MarkovPricingEconomy,
    cash_flow: &CashFlow,
    horizons: &[usize],
    measure: YieldMeasure,
) -> Result<Vec<YieldPoint>> {
    let rec = recover(economy)?;
    yield_curve_with(economy, &rec, cash_flow, horizons, measure)
}

pub fn yield_curve_with(
    economy: &MarkovPricingEconomy,
    rec: &RecoveredMeasure,
    cash_flow: &CashFlow,
    horizons: &[usize],
    measure: YieldMeasure,
) -> Result<Vec<YieldPoint>> {
    let n = economy.n();
    if cash_flow.payoff.len() != n {
        return Err(Error::Dimension("payoff length differs from state count".into()));
    }
    if cash_flow.payoff.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("payoff must be strictly positive".into()));
    }
    if horizons.iter().any(|&t| t == 0) {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let g = match &cash_flow.growth {
        Some(g) if g.nrows() != n || g.ncols() != n => {
            return Err(Error::Dimension("growth matrix must be n×n".into()))
        }
        Some(g) => g.clone(),
        None => DMatrix::from_element(n, n, 1.0),
    };
    let p = match measure {
        YieldMeasure::Physical => economy.transition().matrix(),
        YieldMeasure::LongTermRiskNeutral => rec.p_hat.matrix(),
    };
    let expect_op = p.component_mul(&g);
    let price_op = economy.prices().matrix().component_mul(&g);

    let mut order: Vec<usize> = horizons.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut e_dir = cash_flow.payoff.clone();
    let mut q_dir = cash_flow.payoff.clone();
    let (mut e_log, mut q_log) = (0.0, 0.0);
    let mut done = 0;
    let mut table = Vec::with_capacity(order.len());
    for &t in &order {
        let (e_next, el) = scaled_apply(&expect_op, &e_dir, t - done);
        let (q_next, ql) = scaled_apply(&price_op, &q_dir, t - done);
        e_dir = e_next;
        q_dir = q_next;
        e_log += el;
        q_log += ql;
        done = t;
        let y = DVector::from_fn(n, |x, _| {
            ((e_log + e_dir[x].ln()) - (q_log + q_dir[x].ln())) / t as f64
        });
        table.push(YieldPoint { horizon: t, yields: y });
    }
    Ok(horizons
        .iter()
        .map(|t| table.iter().find(|p| p.horizon == *t).cloned().unwrap())
        .collect())
}

/// Per-state sides of the log-return inequality
/// `E[log R∞ | x] ≤ E[log S_t − log S_{t+1} | x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBoundCheck {
    pub lhs: DVector<f64>,
    pub rhs: DVector<f64>,
    /// `rhs − lhs = −E[log ĥ | x] ≥ 0`.
    pub slack: DVector<f64>,
}

/// Evaluates both sides exactly as finite sums over next-period states.
pub fn log_return_bound_check(economy: &MarkovPricingEconomy) -> Result<LogBoundCheck> {
    let rec = recover(economy)?;
    let r = return_limit_from(rec.eta_hat, &rec.e_hat);
    let n = economy.n();
    let p = economy.transition().matrix();
    let s = economy.sdf().matrix();
    let mut lhs = DVector::zeros(n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                lhs[i] += p[(i, j)] * r[(i, j)].ln();
                rhs[i] -= p[(i, j)] * s[(i, j)].ln();
            }
        }
    }
    let slack = &rhs - &lhs;
    Ok(LogBoundCheck { lhs, rhs, slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::types::build_economy;
    use crate::SdfMatrix;

    #[test]
    fn unit_sdf_has_zero_yields() {
        let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let s = SdfMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let econ = build_economy(p, s).unwrap();
        let ys = yield_curve(&econ, &CashFlow::unit(2), &[1, 10, 3], YieldMeasure::Physical).unwrap();
        assert_eq!(ys.iter().map(|y| y.horizon).collect::<Vec<_>>(), vec![1, 10, 3]);
        for y in ys {
            assert!(y.yields.amax() < 1e-14);
        }
    }

    #[test]
    fn one_period_holding_return_inverts_bond_price() {
        let q = PricingMatrix::from_rows(&[vec![0.5, 0.3], vec![0.1, 0.7]]).unwrap();
        let r = holding_period_return(&q, 1).unwrap();
        assert!((r[(0, 1)] - 1.0 / 0.8).abs() < 1e-14);
    }
}
