use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::ergodic::ergodicity_check;
use crate::markov::perron::{is_primitive, perron_frobenius_with, PowerIterationOptions};
use crate::markov::types::{
    GaussianAugmentedFunctional, MarkovPricingEconomy, PricingMatrix, StochasticMatrix,
};

/// A finite-state economy whose state is augmented by `k` i.i.d. standard
/// normal shocks `W_{t+1}`, independent of the chain.
///
/// The SDF increment is `s_ij · exp(a_i·W − ½|a_i|²)`, so chain-contingent
/// claims are priced by the base matrix `Q`. The additive processes `Y` have
/// increments given by `y` (one functional per component, read as logs).
#[derive(Debug, Clone)]
pub struct AugmentedEconomy {
    pub base: MarkovPricingEconomy,
    /// SDF loadings on the Gaussian block, n×k.
    pub sdf_gaussian: DMatrix<f64>,
    pub y: Vec<GaussianAugmentedFunctional>,
}

impl AugmentedEconomy {
    pub fn new(
        base: MarkovPricingEconomy,
        sdf_gaussian: DMatrix<f64>,
        y: Vec<GaussianAugmentedFunctional>,
    ) -> Result<Self> {
        let n = base.n();
        let k = sdf_gaussian.ncols();
        if sdf_gaussian.nrows() != n {
            return Err(Error::Dimension("SDF Gaussian loadings must have n rows".into()));
        }
        for f in &y {
            if f.n() != n || f.k() != k {
                return Err(Error::Dimension(format!(
                    "Y functional is {}-state with {} shocks, economy has {n} and {k}",
                    f.n(),
                    f.k()
                )));
            }
        }
        Ok(Self {
            base,
            sdf_gaussian,
            y,
        })
    }

    pub fn k(&self) -> usize {
        self.sdf_gaussian.ncols()
    }

    /// Prices of `exp(ζ·ΔY) f(X_{t+1})` claims:
    ///
    /// `q^ζ_ij = q_ij · exp(ζ·μ_{y,ij} + ζ'A_{y,i} a_i + ½ ζ'A_{y,i}A_{y,i}'ζ)`
    ///
    /// where `μ_{y,ij}` is the mean log increment of `Y` on the move `i → j`,
    /// `A_{y,i}` stacks the Gaussian loadings of the `Y` components and `a_i`
    /// is the SDF loading. The middle term is the covariance between the SDF
    /// and `ζ·ΔY`; the last is the Gaussian moment-generating correction.
    pub fn zeta_prices(&self, zeta: &[f64]) -> Result<DMatrix<f64>> {
        if zeta.len() != self.y.len() {
            return Err(Error::Dimension(format!(
                "zeta has {} entries for {} Y components",
                zeta.len(),
                self.y.len()
            )));
        }
        let n = self.base.n();
        let k = self.k();
        let p = self.base.transition();
        let means: Vec<DMatrix<f64>> = self
            .y
            .iter()
            .map(|f| f.pair_log_mean(p))
            .collect::<Result<_>>()?;
        let q = self.base.prices().matrix();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut loading = DVector::zeros(k);
            for (l, f) in self.y.iter().enumerate() {
                loading += f.gaussian_loading(i) * zeta[l];
            }
            let a = self.sdf_gaussian.row(i).transpose();
            let gauss = loading.dot(&a) + 0.5 * loading.norm_squared();
            for j in 0..n {
                if q[(i, j)] == 0.0 {
                    continue;
                }
                let drift: f64 = (0..zeta.len()).map(|l| zeta[l] * means[l][(i, j)]).sum();
                let e = drift + gauss;
                if e > 700.0 {
                    return Err(Error::InvalidInput(format!(
                        "moment-generating factor overflows at ({i},{j})"
                    )));
                }
                out[(i, j)] = q[(i, j)] * e.exp();
            }
        }
        Ok(out)
    }
}

/// Member of the ζ-indexed family of eigen-solutions.
#[derive(Debug, Clone)]
pub struct ZetaSolution {
    pub eta_zeta: f64,
    /// Chain part of the eigenfunction `exp(ζ·y) e_ζ(x)`, max entry one.
    pub e_zeta: DVector<f64>,
    /// Chain transition after absorbing `exp(ζ·ΔY)` and the eigenfunction.
    pub p_hat_zeta: StochasticMatrix,
    pub residual: f64,
}

/// Solves the eigenproblem for `S exp(ζ·Y)` and returns the induced chain
/// transition `exp(−η_ζ) q^ζ_ij e_ζ,j / e_ζ,i`.
pub fn extended_pf_family(economy: &AugmentedEconomy, zeta: &[f64]) -> Result<ZetaSolution> {
    let qz = economy.zeta_prices(zeta)?;
    solve_family_member(&qz)
}

fn solve_family_member(qz: &DMatrix<f64>) -> Result<ZetaSolution> {
    let n = qz.nrows();
    if !is_primitive(qz) {
        return Err(Error::NotPrimitive {
            bound: (n - 1) * (n - 1) + 1,
        });
    }
    let pf = perron_frobenius_with(qz, &PowerIterationOptions::default())?;
    let lam = (-pf.eta_hat).exp();
    let raw = DMatrix::from_fn(n, n, |i, j| lam * qz[(i, j)] * pf.e_hat[j] / pf.e_hat[i]);
    let p_hat_zeta = StochasticMatrix::from_unnormalized(raw)?;
    let report = ergodicity_check(&p_hat_zeta);
    if !report.passed() {
        return Err(Error::NotErgodic(report.describe()));
    }
    Ok(ZetaSolution {
        eta_zeta: pf.eta_hat,
        e_zeta: pf.e_hat,
        p_hat_zeta,
        residual: pf.residual,
    })
}

/// Residual `‖Q^ζ e − exp(η) e‖∞` of a trial eigenpair, with `e` scaled to
/// max entry one.
pub fn zeta_residual(economy: &AugmentedEconomy, zeta: &[f64], eta: f64, e: &DVector<f64>) -> Result<f64> {
    let qz = economy.zeta_prices(zeta)?;
    let e = e / e.amax();
    Ok((&qz * &e - &e * eta.exp()).amax())
}

/// Output of [`structured_recover`].
#[derive(Debug, Clone)]
pub struct StructuredRecovery {
    pub delta: f64,
    /// Positive function in the SDF `exp(−δ) (Yʳ ratio) m̃(X_{t+1})/m̃(X_t)`,
    /// scaled so its smallest entry is one.
    pub m_tilde: DVector<f64>,
    pub p_tilde: StochasticMatrix,
}

/// Recovery when the SDF is known to contain a prespecified functional `Yʳ`
/// with state-pair conditional increments `g_ij`: the Perron root of
/// `[q_ij / g_ij]` is `exp(−δ)` with eigenvector `1/m̃`.
pub fn structured_recover(prices: &PricingMatrix, g: &DMatrix<f64>) -> Result<StructuredRecovery> {
    let q = prices.matrix();
    let n = q.nrows();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::Dimension("increment matrix must be n×n".into()));
    }
    let mut reduced = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if q[(i, j)] > 0.0 {
                if !(g[(i, j)] > 0.0) || !g[(i, j)].is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "increment ({i},{j}) must be positive where the price is positive"
                    )));
                }
                reduced[(i, j)] = q[(i, j)] / g[(i, j)];
            }
        }
    }
    let sol = solve_family_member(&reduced)?;
    let m_tilde = sol.e_zeta.map(|e| 1.0 / e);
    Ok(StructuredRecovery {
        delta: -sol.eta_zeta,
        m_tilde,
        p_tilde: sol.p_hat_zeta,
    })
}
