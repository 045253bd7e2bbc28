//! Structural SDFs for finite-state economies: power utility and recursive
//! utility with unit elasticity of substitution.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{SdfMatrix, StochasticMatrix};

fn check_consumption(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::InvalidInput("consumption vector is empty".into()));
    }
    if c.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput("state consumptions must be positive".into()));
    }
    Ok(())
}

/// Power utility with trend-stationary consumption `C_t = exp(g_c t) c(X_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerUtilitySpec {
    pub delta: f64,
    pub gamma: f64,
    pub g_c: f64,
    pub c: Vec<f64>,
}

impl PowerUtilitySpec {
    pub fn validate(&self) -> Result<()> {
        check_consumption(&self.c)?;
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidInput("delta must be nonnegative".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidInput("gamma must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `s_ij = exp(−δ − γ g_c) (c_j / c_i)^(−γ)`.
pub fn power_sdf(spec: &PowerUtilitySpec) -> Result<SdfMatrix> {
    spec.validate()?;
    let n = spec.c.len();
    let base = -spec.delta - spec.gamma * spec.g_c;
    let c = &spec.c;
    let s = DMatrix::from_fn(n, n, |i, j| (base - spec.gamma * (c[j].ln() - c[i].ln())).exp());
    SdfMatrix::new(s)
}

/// Kreps–Porteus preferences with unit EIS and risk aversion `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveUtilitySpec {
    pub delta: f64,
    pub gamma: f64,
    pub g_c: f64,
    pub c: Vec<f64>,
}

impl RecursiveUtilitySpec {
    pub fn validate(&self) -> Result<()> {
        check_consumption(&self.c)?;
        if !(self.delta > 0.0) {
            return Err(Error::InvalidInput(
                "delta must be positive for the recursion to contract".into(),
            ));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidInput("gamma must be positive".into()));
        }
        Ok(())
    }
}

/// Detrended continuation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    pub v: Vec<f64>,
    /// `exp((1−γ) v)`
    pub v_star: Vec<f64>,
    /// `‖T(v) − v‖∞` for the recursion map `T`.
    pub residual: f64,
    pub gamma: f64,
}

/// Stopping tolerance on the fixed-point update.
pub const VALUE_TOL: f64 = 1e-13;
pub const VALUE_MAX_ITER: usize = 10_000_000;

fn recursion_map(
    spec: &RecursiveUtilitySpec,
    p: &DMatrix<f64>,
    log_c: &[f64],
    v: &DVector<f64>,
) -> DVector<f64> {
    let n = v.len();
    let b = (-spec.delta).exp();
    let theta = 1.0 - spec.gamma;
    DVector::from_fn(n, |i, _| {
        let future = if theta == 0.0 {
            (0..n).map(|j| p[(i, j)] * v[j]).sum::<f64>()
        } else {
            // log Σ_j p_ij exp(θ v_j) / θ, shifted for stability.
            let top = (0..n)
                .filter(|&j| p[(i, j)] > 0.0)
                .map(|j| theta * v[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = (0..n)
                .filter(|&j| p[(i, j)] > 0.0)
                .map(|j| p[(i, j)] * (theta * v[j] - top).exp())
                .sum();
            (top + sum.ln()) / theta
        };
        (1.0 - b) * log_c[i] + b * future + b * spec.g_c
    })
}

/// Fixed point of `v_i = (1−e^{−δ}) log c_i + e^{−δ}/(1−γ) log P_i exp((1−γ)v) + e^{−δ} g_c`
/// by plain iteration; the map contracts with modulus `e^{−δ}`.
pub fn solve_continuation_value(
    spec: &RecursiveUtilitySpec,
    transition: &StochasticMatrix,
) -> Result<ValueFunction> {
    spec.validate()?;
    let n = spec.c.len();
    if transition.n() != n {
        return Err(Error::Dimension(format!(
            "{} consumption states but a {}-state chain",
            n,
            transition.n()
        )));
    }
    let p = transition.matrix();
    let log_c: Vec<f64> = spec.c.iter().map(|c| c.ln()).collect();
    let b = (-spec.delta).exp();
    // Start from the certainty-equivalent-free guess with the drift term solved.
    let mut v = DVector::from_fn(n, |i, _| log_c[i] + b * spec.g_c / (1.0 - b));
    let mut step = f64::INFINITY;
    for _ in 0..VALUE_MAX_ITER {
        let next = recursion_map(spec, p, &log_c, &v);
        step = (&next - &v).amax();
        v = next;
        if step <= VALUE_TOL * v.amax().max(1.0) {
            break;
        }
    }
    let residual = (recursion_map(spec, p, &log_c, &v) - &v).amax();
    if residual > 1e-12 * v.amax().max(1.0) {
        return Err(Error::NoConvergence {
            what: "continuation value recursion",
            iterations: VALUE_MAX_ITER,
            residual: residual.max(step),
        });
    }
    let theta = 1.0 - spec.gamma;
    Ok(ValueFunction {
        v_star: v.iter().map(|x| (theta * x).exp()).collect(),
        v: v.iter().copied().collect(),
        residual,
        gamma: spec.gamma,
    })
}

/// `v*_j / (P_i v*)`, computed from `v` so that large `|1−γ| v` cannot
/// overflow.
pub fn recursive_martingale(transition: &StochasticMatrix, value: &ValueFunction) -> Result<DMatrix<f64>> {
    let n = transition.n();
    if value.v.len() != n {
        return Err(Error::Dimension("value function length differs from chain".into()));
    }
    let theta = 1.0 - value.gamma;
    let top = value
        .v
        .iter()
        .map(|x| theta * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = value.v.iter().map(|x| (theta * x - top).exp()).collect();
    let p = transition.matrix();
    let mut h = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        let pw: f64 = (0..n).map(|j| p[(i, j)] * w[j]).sum();
        for j in 0..n {
            h[(i, j)] = w[j] / pw;
        }
    }
    Ok(h)
}

/// `s_ij = exp(−(δ + g_c)) (c_i / c_j) v*_j / (P_i v*)`.
pub fn recursive_sdf(
    spec: &RecursiveUtilitySpec,
    transition: &StochasticMatrix,
    value: &ValueFunction,
) -> Result<SdfMatrix> {
    spec.validate()?;
    let h = recursive_martingale(transition, value)?;
    let n = spec.c.len();
    let c = &spec.c;
    let scale = (-(spec.delta + spec.g_c)).exp();
    SdfMatrix::new(DMatrix::from_fn(n, n, |i, j| scale * c[i] / c[j] * h[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
    }

    #[test]
    fn power_sdf_example_entries() {
        let spec = PowerUtilitySpec {
            delta: 0.02,
            gamma: 2.0,
            g_c: 0.0,
            c: vec![1.0, 2.0],
        };
        let s = power_sdf(&spec).unwrap();
        let k = (-0.02f64).exp();
        assert!((s.get(0, 1) - 0.25 * k).abs() < 1e-15);
        assert!((s.get(1, 0) - 4.0 * k).abs() < 1e-15);
        assert!((s.get(0, 0) - k).abs() < 1e-15);
    }

    #[test]
    fn risk_neutral_preferences_give_constant_sdf() {
        let spec = PowerUtilitySpec {
            delta: 0.03,
            gamma: 0.0,
            g_c: 0.01,
            c: vec![1.0, 5.0, 2.0],
        };
        let s = power_sdf(&spec).unwrap();
        assert!(s.matrix().iter().all(|x| (x - (-0.03f64).exp()).abs() < 1e-15));
    }

    #[test]
    fn constant_consumption_values() {
        let spec = RecursiveUtilitySpec {
            delta: 0.05,
            gamma: 4.0,
            g_c: 0.01,
            c: vec![3.0, 3.0],
        };
        let v = solve_continuation_value(&spec, &chain()).unwrap();
        let b = (-0.05f64).exp();
        let expect = 3f64.ln() + b * 0.01 / (1.0 - b);
        for x in &v.v {
            assert!((x - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn martingale_rows_have_unit_mean() {
        let spec = RecursiveUtilitySpec {
            delta: 0.02,
            gamma: 10.0,
            g_c: 0.0,
            c: vec![1.0, 2.0],
        };
        let p = chain();
        let v = solve_continuation_value(&spec, &p).unwrap();
        let h = recursive_martingale(&p, &v).unwrap();
        for i in 0..2 {
            let m: f64 = (0..2).map(|j| p.get(i, j) * h[(i, j)]).sum();
            assert!((m - 1.0).abs() < 1e-15);
        }
        assert!(h.iter().any(|x| (x - 1.0).abs() > 1e-3));
    }

    #[test]
    fn rejects_zero_delta() {
        let spec = RecursiveUtilitySpec {
            delta: 0.0,
            gamma: 2.0,
            g_c: 0.0,
            c: vec![1.0, 2.0],
        };
        assert!(solve_continuation_value(&spec, &chain()).is_err());
    }
}
