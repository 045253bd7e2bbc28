use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrr::affine::{affine_coefficients, AffineExpectationCoeffs};
use crate::lrr::params::{AffineFunctional, LrrParams};
use crate::lrr::solve::LrrSolution;

/// Months per year, for annualizing.
pub const MONTHS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrrCashFlow {
    Consumption,
    Bond,
}

/// θ tables for the three expectations a yield needs.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldCoefficients {
    pub horizons: Vec<f64>,
    /// `E[G_t | x]` under the physical measure.
    pub expected: AffineExpectationCoeffs,
    /// `Ê[G_t | x]` under the long-term risk-neutral measure.
    pub expected_hat: AffineExpectationCoeffs,
    /// `E[S_t G_t | x]`.
    pub price: AffineExpectationCoeffs,
}

impl YieldCoefficients {
    pub fn new(
        p: &LrrParams,
        sol: &LrrSolution,
        cash_flow: LrrCashFlow,
        horizons: &[f64],
    ) -> Result<Self> {
        if horizons.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput("yield horizons must be positive".into()));
        }
        let g = match cash_flow {
            LrrCashFlow::Consumption => p.consumption(),
            LrrCashFlow::Bond => AffineFunctional::zero(),
        };
        let d = p.dynamics();
        let g_hat = sol.p_hat.transform(p, &g);
        Ok(Self {
            horizons: horizons.to_vec(),
            expected: affine_coefficients(&g, &d, horizons)?,
            expected_hat: affine_coefficients(&g_hat, &sol.p_hat.dynamics(p), horizons)?,
            price: affine_coefficients(&sol.sdf.product(&g), &d, horizons)?,
        })
    }

    /// Annualized `(y_t(x), ŷ_t(x))` at the `k`-th horizon.
    pub fn yields(&self, k: usize, x: [f64; 2]) -> (f64, f64) {
        let t = self.horizons[k];
        let price = self.price.log_expectation(k, x);
        let y = (self.expected.log_expectation(k, x) - price) / t;
        let y_hat = (self.expected_hat.log_expectation(k, x) - price) / t;
        (MONTHS * y, MONTHS * y_hat)
    }
}

/// Quartiles of the yield distribution across states at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldQuartiles {
    pub horizon: f64,
    /// 25th, 50th and 75th percentiles under the physical measure.
    pub physical: [f64; 3],
    /// Same, with expectations under the long-term risk-neutral measure.
    pub recovered: [f64; 3],
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Yield quartiles over a sample of current states.
pub fn yield_curves(
    p: &LrrParams,
    sol: &LrrSolution,
    cash_flow: LrrCashFlow,
    horizons: &[f64],
    states: &[[f64; 2]],
) -> Result<Vec<YieldQuartiles>> {
    if states.is_empty() {
        return Err(Error::InvalidInput("need at least one state".into()));
    }
    let coeffs = YieldCoefficients::new(p, sol, cash_flow, horizons)?;
    let quart = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        [quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75)]
    };
    Ok((0..horizons.len())
        .map(|k| {
            let (y, yh): (Vec<f64>, Vec<f64>) = states.iter().map(|&x| coeffs.yields(k, x)).unzip();
            YieldQuartiles {
                horizon: horizons[k],
                physical: quart(y),
                recovered: quart(yh),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }
}
