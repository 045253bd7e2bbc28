use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::perron::is_primitive;

/// Row sums of a stochastic matrix must equal one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;

fn square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(m.nrows())
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension(format!("{what} has ragged rows")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Markov transition matrix, rows indexed by the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = square(&m, "transition matrix")?;
        for i in 0..n {
            if m.row(i).iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "transition row {i} has negative entries"
                )));
            }
            let s = m.row(i).sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "transition row {i} sums to {s}, not 1"
                )));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows, "transition matrix")?)
    }

    /// Divides each row by its sum. Used for matrices that are stochastic up
    /// to rounding, such as transitions built from an eigenvector.
    pub fn from_unnormalized(mut m: DMatrix<f64>) -> Result<Self> {
        square(&m, "transition matrix")?;
        for i in 0..m.nrows() {
            let s = m.row(i).sum();
            if !(s > 0.0) {
                return Err(Error::InvalidInput(format!("row {i} has zero mass")));
            }
            m.row_mut(i).unscale_mut(s);
        }
        Self::new(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// t-step transition matrix.
    pub fn power(&self, t: usize) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.n(), self.n());
        for _ in 0..t {
            out = &out * &self.0;
        }
        out
    }

    /// Stationary distribution `π P = π`, solved directly. Fails when the
    /// chain has more than one recurrent class.
    pub fn stationary(&self) -> Result<DVector<f64>> {
        let n = self.n();
        let mut a = self.0.transpose() - DMatrix::<f64>::identity(n, n);
        a.row_mut(n - 1).fill(1.0);
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NotErgodic("stationary distribution is not unique".into()))?;
        if pi.iter().any(|&x| !x.is_finite() || x < -1e-10) {
            return Err(Error::NotErgodic("stationary distribution is not unique".into()));
        }
        Ok(pi.map(|x| x.max(0.0)))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.0)
    }
}

/// State-pair discount factors `s_ij`. Entries paired with zero transition
/// probability carry no information and are stored as one.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfMatrix(DMatrix<f64>);

impl SdfMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        square(&m, "SDF matrix")?;
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows, "SDF matrix")?)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.0)
    }
}

/// One-period Arrow prices `q_ij`: nonnegative, primitive, with positive
/// one-period bond prices in every state.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingMatrix(DMatrix<f64>);

impl PricingMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = square(&m, "pricing matrix")?;
        if m.iter().any(|&q| q < 0.0) {
            return Err(Error::InvalidInput("pricing matrix has negative entries".into()));
        }
        for i in 0..n {
            if !(m.row(i).sum() > 0.0) {
                return Err(Error::ZeroBondPrice { state: i });
            }
        }
        if !is_primitive(&m) {
            return Err(Error::NotPrimitive {
                bound: (n - 1) * (n - 1) + 1,
            });
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows, "pricing matrix")?)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// One-period discount bond prices `q̄_i = Σ_j q_ij`.
    pub fn bond_prices(&self) -> DVector<f64> {
        DVector::from_fn(self.n(), |i, _| self.0.row(i).sum())
    }

    /// Arrow prices for t-period claims. A power of a primitive matrix is
    /// primitive, so this never fails on validity grounds.
    pub fn power(&self, t: usize) -> Result<PricingMatrix> {
        if t == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        let mut out = self.0.clone();
        for _ in 1..t {
            out = &out * &self.0;
        }
        PricingMatrix::new(out)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.0)
    }
}

/// A finite-state economy: transition `P`, discount factors `S` and the Arrow
/// prices `Q = S∘P` they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPricingEconomy {
    transition: StochasticMatrix,
    sdf: SdfMatrix,
    prices: PricingMatrix,
}

impl MarkovPricingEconomy {
    pub fn transition(&self) -> &StochasticMatrix {
        &self.transition
    }

    pub fn sdf(&self) -> &SdfMatrix {
        &self.sdf
    }

    pub fn prices(&self) -> &PricingMatrix {
        &self.prices
    }

    pub fn n(&self) -> usize {
        self.transition.n()
    }
}

/// Prices `q_ij = s_ij p_ij`. Discount factors on zero-probability cells are
/// replaced by one.
pub fn build_economy(transition: StochasticMatrix, sdf: SdfMatrix) -> Result<MarkovPricingEconomy> {
    let n = transition.n();
    if sdf.n() != n {
        return Err(Error::Dimension(format!(
            "transition is {n}x{n} but SDF is {0}x{0}",
            sdf.n()
        )));
    }
    let p = transition.matrix();
    let mut s = sdf.0;
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                if !(s[(i, j)] > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "SDF entry ({i},{j}) must be positive where the transition is positive"
                    )));
                }
            } else {
                s[(i, j)] = 1.0;
            }
        }
    }
    let q = p.component_mul(&s);
    let prices = PricingMatrix::new(q)?;
    Ok(MarkovPricingEconomy {
        transition,
        sdf: SdfMatrix(s),
        prices,
    })
}

/// Output of Perron–Frobenius recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredMeasure {
    /// Log of the dominant eigenvalue, per period.
    pub eta_hat: f64,
    /// Right eigenvector with max entry one.
    pub e_hat: DVector<f64>,
    /// Left eigenvector summing to one.
    pub e_star: DVector<f64>,
    pub p_hat: StochasticMatrix,
    /// `ĥ_ij = p̂_ij / p_ij`, one on zero-probability cells. Present only
    /// when the true transition is known.
    pub h_increments: Option<DMatrix<f64>>,
}

impl RecoveredMeasure {
    /// The Ross-form discount factors `ŝ_ij = exp(η̂) ê_i / ê_j`.
    pub fn s_hat(&self) -> DMatrix<f64> {
        let n = self.e_hat.len();
        DMatrix::from_fn(n, n, |i, j| self.eta_hat.exp() * self.e_hat[i] / self.e_hat[j])
    }
}

/// A multiplicative functional on a finite chain augmented by `k` standard
/// normal shocks:
///
/// `log M_{t+1} - log M_t = β̄_i + ᾱ_i · ΔW_{t+1}` in state `i`, where
/// `ΔW_{t+1}` stacks the chain innovation `X_{t+1} - E[X_{t+1} | X_t]`
/// (first `n` loadings) and the Gaussian block (last `k` loadings).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianAugmentedFunctional {
    pub beta_bar: DVector<f64>,
    pub alpha_bar: DMatrix<f64>,
}

impl GaussianAugmentedFunctional {
    pub fn new(beta_bar: DVector<f64>, alpha_bar: DMatrix<f64>) -> Result<Self> {
        let n = beta_bar.len();
        if alpha_bar.nrows() != n || alpha_bar.ncols() < n {
            return Err(Error::Dimension(format!(
                "loading matrix must be {n}x(n+k), got {}x{}",
                alpha_bar.nrows(),
                alpha_bar.ncols()
            )));
        }
        Ok(Self { beta_bar, alpha_bar })
    }

    /// Builds a functional with given log increments `f(i, j)` on chain
    /// transitions and Gaussian loadings `gaussian` (n×k). Any state-pair
    /// function fits the form: take `ᾱ_ij = f(i,j)`, `β̄_i = Σ_j p_ij f(i,j)`.
    pub fn from_pair_logs(
        pair_logs: &DMatrix<f64>,
        gaussian: &DMatrix<f64>,
        transition: &StochasticMatrix,
    ) -> Result<Self> {
        let n = transition.n();
        if pair_logs.nrows() != n || pair_logs.ncols() != n || gaussian.nrows() != n {
            return Err(Error::Dimension("pair logs must be n×n and loadings n×k".into()));
        }
        let k = gaussian.ncols();
        let p = transition.matrix();
        let beta = DVector::from_fn(n, |i, _| (0..n).map(|j| p[(i, j)] * pair_logs[(i, j)]).sum());
        let alpha = DMatrix::from_fn(n, n + k, |i, c| {
            if c < n {
                pair_logs[(i, c)]
            } else {
                gaussian[(i, c - n)]
            }
        });
        Self::new(beta, alpha)
    }

    pub fn n(&self) -> usize {
        self.beta_bar.len()
    }

    pub fn k(&self) -> usize {
        self.alpha_bar.ncols() - self.n()
    }

    /// Loadings on the Gaussian block in state `i`.
    pub fn gaussian_loading(&self, i: usize) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(self.k(), |c, _| self.alpha_bar[(i, n + c)])
    }

    /// Conditional mean of the log increment given the chain moves `i → j`.
    pub fn pair_log_mean(&self, transition: &StochasticMatrix) -> Result<DMatrix<f64>> {
        let n = self.n();
        if transition.n() != n {
            return Err(Error::Dimension("functional and chain sizes differ".into()));
        }
        let p = transition.matrix();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let drift: f64 = (0..n).map(|c| self.alpha_bar[(i, c)] * p[(i, c)]).sum();
            self.beta_bar[i] + self.alpha_bar[(i, j)] - drift
        }))
    }

    /// `E[M_{t+1}/M_t | X_t = i, X_{t+1} = j]`, integrating out the Gaussian block.
    pub fn conditional_increment(&self, transition: &StochasticMatrix) -> Result<DMatrix<f64>> {
        let mean = self.pair_log_mean(transition)?;
        let n = self.n();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let g = self.gaussian_loading(i);
            (mean[(i, j)] + 0.5 * g.norm_squared()).exp()
        }))
    }
}
