//! Python bindings. Matrices cross the boundary as lists of rows.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use recovery_lab::bounds::{
    generate_problem_from_chain, population_discrepancy, unconditional_bound, PayoffMenu, SampleMode,
};
use recovery_lab::diffusion::{eigen_candidates, select_ergodic, SquareRootModel};
use recovery_lab::io::parse_economy;
use recovery_lab::lrr::{solve_lrr, value_discriminant, LrrCashFlow, LrrParams, YieldCoefficients};
use recovery_lab::markov::{
    self, build_economy, forward_measure, log_return_bound_check, persistent_approximation,
    recover_prices, MarkovPricingEconomy, PersistentApproxConfig, PricingMatrix, SdfMatrix,
    StochasticMatrix,
};

fn py_err(e: recovery_lab::Error) -> PyErr {
    if e.is_model_error() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Result of Perron–Frobenius recovery.
#[pyclass(get_all, frozen)]
struct Recovery {
    eta_hat: f64,
    e_hat: Vec<f64>,
    e_star: Vec<f64>,
    p_hat: Vec<Vec<f64>>,
    /// Martingale increments `ĥ_ij`, when a transition matrix is known.
    h: Option<Vec<Vec<f64>>>,
}

impl From<markov::RecoveredMeasure> for Recovery {
    fn from(r: markov::RecoveredMeasure) -> Self {
        Self {
            eta_hat: r.eta_hat,
            e_hat: r.e_hat.iter().copied().collect(),
            e_star: r.e_star.iter().copied().collect(),
            p_hat: r.p_hat.to_rows(),
            h: r.h_increments.as_ref().map(rows),
        }
    }
}

#[pymethods]
impl Recovery {
    fn __repr__(&self) -> String {
        format!("Recovery(eta_hat={:.6e}, n={})", self.eta_hat, self.e_hat.len())
    }
}

/// Finite-state economy given by a transition matrix and SDF increments.
#[pyclass(frozen)]
struct Economy {
    inner: MarkovPricingEconomy,
}

#[pymethods]
impl Economy {
    #[new]
    fn new(transition: Vec<Vec<f64>>, sdf: Vec<Vec<f64>>) -> PyResult<Self> {
        let p = StochasticMatrix::from_rows(&transition).map_err(py_err)?;
        let s = SdfMatrix::from_rows(&sdf).map_err(py_err)?;
        Ok(Self {
            inner: build_economy(p, s).map_err(py_err)?,
        })
    }

    /// Builds an economy from the same JSON accepted by the command line.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let loaded = parse_economy(text).map_err(py_err)?;
        let inner = loaded
            .economy
            .ok_or_else(|| PyValueError::new_err("JSON holds prices only; use recover_prices"))?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn prices(&self) -> Vec<Vec<f64>> {
        self.inner.prices().to_rows()
    }

    #[getter]
    fn transition(&self) -> Vec<Vec<f64>> {
        self.inner.transition().to_rows()
    }

    fn recover(&self) -> PyResult<Recovery> {
        Ok(markov::recover(&self.inner).map_err(py_err)?.into())
    }

    fn forward_measure(&self, horizon: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(forward_measure(self.inner.prices(), horizon).map_err(py_err)?.to_rows())
    }

    /// Per-state slack of `E[log R∞ | x] ≤ E[−log s | x]`.
    fn log_bound_slack(&self) -> PyResult<Vec<f64>> {
        Ok(log_return_bound_check(&self.inner)
            .map_err(py_err)?
            .slack
            .iter()
            .copied()
            .collect())
    }

    /// `(bound, population discrepancy)` for the chosen asset menu.
    #[pyo3(signature = (theta, menu = "bond_and_arrow"))]
    fn discrepancy_bound(&self, theta: f64, menu: &str) -> PyResult<(f64, f64)> {
        let menu = match menu {
            "bond" => PayoffMenu::Bond,
            "arrow" => PayoffMenu::Arrow,
            "bond_and_arrow" => PayoffMenu::BondAndArrow,
            "managed_arrow" => PayoffMenu::ManagedArrow,
            other => return Err(PyValueError::new_err(format!("unknown menu '{other}'"))),
        };
        let rec = markov::recover(&self.inner).map_err(py_err)?;
        let prob = generate_problem_from_chain(&self.inner, &rec, &menu, 0, SampleMode::Population)
            .map_err(py_err)?;
        let r = unconditional_bound(&prob, theta).map_err(py_err)?;
        let pop = population_discrepancy(&self.inner, &rec, theta).map_err(py_err)?;
        Ok((r.lambda_bar, pop))
    }
}

/// Recovery from Arrow prices alone.
#[pyfunction]
fn recover_from_prices(prices: Vec<Vec<f64>>) -> PyResult<Recovery> {
    let q = PricingMatrix::from_rows(&prices).map_err(py_err)?;
    Ok(recover_prices(&q).map_err(py_err)?.into())
}

/// Selected `(υ, κ_new, η)` for the square-root model.
#[pyfunction]
#[pyo3(signature = (kappa, mu_bar, sigma_bar, alpha_bar, beta_bar = 0.0))]
fn square_root_selection(
    kappa: f64,
    mu_bar: f64,
    sigma_bar: f64,
    alpha_bar: f64,
    beta_bar: f64,
) -> PyResult<(f64, f64, f64)> {
    let m = SquareRootModel {
        kappa,
        mu_bar,
        sigma_bar,
        alpha_bar,
        beta_bar,
    };
    let c = select_ergodic(&eigen_candidates(&m).map_err(py_err)?).map_err(py_err)?;
    Ok((c.upsilon, c.kappa_new, c.eta))
}

/// Long-run-risk model solved at the given parameter overrides.
#[pyclass(get_all, frozen)]
struct LrrModel {
    discriminant: f64,
    eta_hat: f64,
    e1: f64,
    e2: f64,
    mu_hat_22: f64,
    iota_hat: [f64; 2],
}

#[pymethods]
impl LrrModel {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<std::collections::HashMap<String, f64>>) -> PyResult<Self> {
        let p = params(overrides)?;
        let sol = solve_lrr(&p).map_err(py_err)?;
        Ok(Self {
            discriminant: value_discriminant(&p),
            eta_hat: sol.pf.eta_hat,
            e1: sol.pf.e1,
            e2: sol.pf.e2,
            mu_hat_22: sol.p_hat.mu_hat_22,
            iota_hat: sol.p_hat.iota_hat,
        })
    }

    /// Annualized `(y, ŷ)` at state `x` for each horizon in months.
    #[staticmethod]
    #[pyo3(signature = (horizons, x, cash_flow = "consumption", **overrides))]
    fn yields(
        horizons: Vec<f64>,
        x: [f64; 2],
        cash_flow: &str,
        overrides: Option<std::collections::HashMap<String, f64>>,
    ) -> PyResult<Vec<(f64, f64)>> {
        let cf = match cash_flow {
            "consumption" => LrrCashFlow::Consumption,
            "bond" => LrrCashFlow::Bond,
            other => return Err(PyValueError::new_err(format!("unknown cash flow '{other}'"))),
        };
        let p = params(overrides)?;
        let sol = solve_lrr(&p).map_err(py_err)?;
        let c = YieldCoefficients::new(&p, &sol, cf, &horizons).map_err(py_err)?;
        Ok((0..horizons.len()).map(|k| c.yields(k, x)).collect())
    }
}

fn params(overrides: Option<std::collections::HashMap<String, f64>>) -> PyResult<LrrParams> {
    let mut p = LrrParams::default();
    let mut keys: Vec<(String, f64)> = overrides.unwrap_or_default().into_iter().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0));
    for (k, v) in keys {
        p.set(&k, v).map_err(py_err)?;
    }
    p.validate().map_err(py_err)?;
    Ok(p)
}

/// `(spectral gap, [(ζ, residual)])` for one reversion rate.
#[pyfunction]
#[pyo3(signature = (rho, seed = 0))]
fn demo_approx(rho: f64, seed: u64) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let cfg = PersistentApproxConfig {
        seed,
        ..Default::default()
    };
    let row = persistent_approximation(&cfg, rho).map_err(py_err)?;
    Ok((
        row.spectral_gap,
        row.trials.iter().map(|t| (t.zeta, t.residual)).collect(),
    ))
}

#[pymodule]
fn recovery_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Economy>()?;
    m.add_class::<Recovery>()?;
    m.add_class::<LrrModel>()?;
    m.add_function(wrap_pyfunction!(recover_from_prices, m)?)?;
    m.add_function(wrap_pyfunction!(square_root_selection, m)?)?;
    m.add_function(wrap_pyfunction!(demo_approx, m)?)?;
    Ok(())
}
