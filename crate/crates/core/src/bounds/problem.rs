use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::markov::{martingale_increments, return_limit_from, MarkovPricingEconomy, RecoveredMeasure};
use crate::sim::{path_rng, Sum};

const WEIGHT_TOL: f64 = 1e-9;

/// Sample of payoffs, prices and long-bond returns on which the
/// unconditional bound is computed. Row `t` holds `Y_{t+1}`, `Q_t` and
/// `R∞_{t,t+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundProblem {
    pub payoffs: DMatrix<f64>,
    pub prices: DMatrix<f64>,
    pub long_bond_return: DVector<f64>,
    pub weights: DVector<f64>,
}

impl BoundProblem {
    /// Builds a problem with uniform weights.
    pub fn new(payoffs: DMatrix<f64>, prices: DMatrix<f64>, long_bond_return: DVector<f64>) -> Result<Self> {
        let t = payoffs.nrows();
        let w = DVector::from_element(t, 1.0 / t.max(1) as f64);
        Self::weighted(payoffs, prices, long_bond_return, w)
    }

    pub fn weighted(
        payoffs: DMatrix<f64>,
        prices: DMatrix<f64>,
        long_bond_return: DVector<f64>,
        weights: DVector<f64>,
    ) -> Result<Self> {
        let t = payoffs.nrows();
        if t == 0 {
            return Err(Error::InvalidInput("bound problem has no observations".into()));
        }
        if prices.shape() != payoffs.shape() || long_bond_return.len() != t || weights.len() != t {
            return Err(Error::Dimension(format!(
                "payoffs {:?}, prices {:?}, returns {}, weights {}",
                payoffs.shape(),
                prices.shape(),
                long_bond_return.len(),
                weights.len()
            )));
        }
        if payoffs.iter().chain(prices.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("payoffs and prices must be finite".into()));
        }
        if long_bond_return.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInput("long-bond returns must be positive".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.sum() - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput("weights must be nonnegative and sum to one".into()));
        }
        Ok(Self {
            payoffs,
            prices,
            long_bond_return,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.payoffs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_assets(&self) -> usize {
        self.payoffs.ncols()
    }

    /// Constraint instrument `z_t = (1, Y_{t+1}/R∞_t)`.
    pub fn instruments(&self) -> DMatrix<f64> {
        let m = self.n_assets();
        DMatrix::from_fn(self.len(), m + 1, |t, k| {
            if k == 0 {
                1.0
            } else {
                self.payoffs[(t, k - 1)] / self.long_bond_return[t]
            }
        })
    }

    /// Constraint targets `(1, Σ w_t Q_t)`.
    pub fn targets(&self) -> DVector<f64> {
        let m = self.n_assets();
        let mut b = DVector::zeros(m + 1);
        b[0] = 1.0;
        for k in 0..m {
            let mut s = Sum::default();
            for (w, q) in self.weights.iter().zip(self.prices.column(k).iter()) {
                s.add(w * q);
            }
            b[k + 1] = s.value();
        }
        b
    }

    /// Same problem restricted to the given row indices, reweighted uniformly.
    pub fn resample(&self, rows: &[usize]) -> Result<Self> {
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(rows.len(), m.ncols(), |t, k| m[(rows[t], k)]);
        Self::new(
            pick(&self.payoffs),
            pick(&self.prices),
            DVector::from_fn(rows.len(), |t, _| self.long_bond_return[rows[t]]),
        )
    }
}

/// Weighted pricing error `Σ w_t [Y_{t+1}/R∞_t − Q_t]` of each asset when the
/// martingale component is assumed absent.
pub fn kazemi_test(problem: &BoundProblem) -> DVector<f64> {
    let m = problem.n_assets();
    DVector::from_fn(m, |k, _| {
        (0..problem.len())
            .map(|t| {
                problem.weights[t]
                    * (problem.payoffs[(t, k)] / problem.long_bond_return[t] - problem.prices[(t, k)])
            })
            .sum()
    })
}

/// Test assets defined by their payoff on each transition `i → j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffMenu {
    /// The one-period discount bond.
    Bond,
    /// One claim per next-period state.
    Arrow,
    /// Bond plus one claim per next-period state.
    BondAndArrow,
    /// One claim per possible transition `(i, j)`, paying only when the
    /// current state is `i` and the next is `j`. Pins `J` on every transition.
    ManagedArrow,
    /// Explicit payoff matrices, one per asset.
    Custom(Vec<Vec<Vec<f64>>>),
}

impl PayoffMenu {
    /// Payoff matrices `Y^k_ij` for a chain with transition `p`.
    pub fn payoff_matrices(&self, p: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        let n = p.nrows();
        let arrow = |k: usize| DMatrix::from_fn(n, n, |_, j| if j == k { 1.0 } else { 0.0 });
        Ok(match self {
            PayoffMenu::Bond => vec![DMatrix::from_element(n, n, 1.0)],
            PayoffMenu::Arrow => (0..n).map(arrow).collect(),
            PayoffMenu::BondAndArrow => std::iter::once(DMatrix::from_element(n, n, 1.0))
                .chain((0..n).map(arrow))
                .collect(),
            PayoffMenu::ManagedArrow => {
                let mut out = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        if p[(a, b)] > 0.0 {
                            out.push(DMatrix::from_fn(n, n, |i, j| {
                                if i == a && j == b {
                                    1.0
                                } else {
                                    0.0
                                }
                            }));
                        }
                    }
                }
                out
            }
            PayoffMenu::Custom(mats) => {
                if mats.is_empty() {
                    return Err(Error::InvalidInput("custom payoff menu is empty".into()));
                }
                mats.iter()
                    .map(|rows| {
                        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                            return Err(Error::Dimension(format!("custom payoff must be {n}x{n}")));
                        }
                        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
                    })
                    .collect::<Result<_>>()?
            }
        })
    }
}

/// How the sample in a generated problem is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Every transition, weighted by stationary × transition probability.
    Population,
    /// One simulated path of the given length, started from the stationary law.
    Sampled { seed: u64 },
}

fn sample_index<R: Rng>(rng: &mut R, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, pr) in probs.enumerate() {
        if pr > 0.0 {
            last = k;
        }
        acc += pr;
        if u < acc {
            return k;
        }
    }
    last
}

fn martingale_matrix(economy: &MarkovPricingEconomy, rec: &RecoveredMeasure) -> DMatrix<f64> {
    rec.h_increments
        .clone()
        .unwrap_or_else(|| martingale_increments(economy.transition(), &rec.p_hat))
}

/// Synthetic bound problem from a finite-state economy.
pub fn generate_problem_from_chain(
    economy: &MarkovPricingEconomy,
    recovered: &RecoveredMeasure,
    menu: &PayoffMenu,
    horizon: usize,
    mode: SampleMode,
) -> Result<BoundProblem> {
    let n = economy.n();
    let p = economy.transition().matrix();
    let q = economy.prices().matrix();
    let r_inf = return_limit_from(recovered.eta_hat, &recovered.e_hat);
    let assets = menu.payoff_matrices(p)?;
    let m = assets.len();
    // Price of asset k in state i.
    let asset_prices = DMatrix::from_fn(n, m, |i, k| (0..n).map(|j| q[(i, j)] * assets[k][(i, j)]).sum());
    let pi = economy.transition().stationary()?;

    let (pairs, weights): (Vec<(usize, usize)>, Vec<f64>) = match mode {
        SampleMode::Population => (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| pi[i] * p[(i, j)] > 0.0)
            .map(|(i, j)| ((i, j), pi[i] * p[(i, j)]))
            .unzip(),
        SampleMode::Sampled { seed } => {
            if horizon == 0 {
                return Err(Error::InvalidInput("sampled problem needs a positive horizon".into()));
            }
            let mut rng = path_rng(seed, 0);
            let mut x = sample_index(&mut rng, pi.iter().copied());
            let mut pairs = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let y = sample_index(&mut rng, p.row(x).iter().copied());
                pairs.push((x, y));
                x = y;
            }
            let w = vec![1.0 / horizon as f64; horizon];
            (pairs, w)
        }
    };
    let total: f64 = weights.iter().sum();
    let t = pairs.len();
    BoundProblem::weighted(
        DMatrix::from_fn(t, m, |r, k| assets[k][pairs[r]]),
        DMatrix::from_fn(t, m, |r, k| asset_prices[(pairs[r].0, k)]),
        DVector::from_fn(t, |r, _| r_inf[pairs[r]]),
        DVector::from_iterator(t, weights.iter().map(|w| w / total)),
    )
}

/// Per-state discrepancy `Σ_j p_ij φ_θ(ĥ_ij)`.
pub fn conditional_discrepancy(
    economy: &MarkovPricingEconomy,
    recovered: &RecoveredMeasure,
    theta: f64,
) -> Result<DVector<f64>> {
    let spec = DivergenceSpec::new(theta)?;
    let p = economy.transition().matrix();
    let h = martingale_matrix(economy, recovered);
    let n = economy.n();
    let mut out = DVector::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                out[i] += p[(i, j)] * spec.phi(h[(i, j)])?;
            }
        }
    }
    Ok(out)
}

/// Stationary average of [`conditional_discrepancy`].
pub fn population_discrepancy(
    economy: &MarkovPricingEconomy,
    recovered: &RecoveredMeasure,
    theta: f64,
) -> Result<f64> {
    let pi = economy.transition().stationary()?;
    Ok(pi.dot(&conditional_discrepancy(economy, recovered, theta)?))
}
