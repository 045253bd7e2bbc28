//! Conditional expectations `E[M_t | X₀ = x] = exp(θ₀(t) + θ₁(t)x₁ + θ₂(t)x₂)`
//! of affine multiplicative functionals.
//!
//! Matching coefficients in the backward equation `∂_t f = 𝕄 f` gives
//!
//! `θ₁' = β₁₁ + μ₁₁θ₁`
//! `θ₂' = β₁₂ + ½|α|² + θ₁(μ₁₂ + σ₁·α) + θ₂(μ₂₂ + σ₂·α) + ½|θ₁σ₁ + θ₂σ₂|²`
//! `θ₀' = β₀ − β₁₁ι₁ − β₁₂ι₂ − θ₁(μ₁₁ι₁ + μ₁₂ι₂) − θ₂μ₂₂ι₂`
//!
//! with `θ(0) = 0`. The `θ₂` equation is Riccati and can explode in finite time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrr::params::{axpy, dot, norm2, AffineFunctional, StateDynamics};

pub const ODE_ATOL: f64 = 1e-12;
pub const ODE_RTOL: f64 = 1e-12;
const MAX_STEPS: usize = 2_000_000;
const EXPLODE: f64 = 1e8;

fn rhs(f: &AffineFunctional, d: &StateDynamics, th: &[f64; 3]) -> [f64; 3] {
    let (t1, t2) = (th[1], th[2]);
    let load = axpy(&[t1 * d.sigma_1[0], t1 * d.sigma_1[1], t1 * d.sigma_1[2]], t2, &d.sigma_2);
    let d1 = f.beta_11 + d.mu_11 * t1;
    let d2 = f.beta_12
        + 0.5 * norm2(&f.alpha)
        + t1 * (d.mu_12 + dot(&d.sigma_1, &f.alpha))
        + t2 * (d.mu_22 + dot(&d.sigma_2, &f.alpha))
        + 0.5 * norm2(&load);
    let d0 = f.beta_0 - f.beta_11 * d.iota[0] - f.beta_12 * d.iota[1]
        - t1 * (d.mu_11 * d.iota[0] + d.mu_12 * d.iota[1])
        - t2 * d.mu_22 * d.iota[1];
    [d0, d1, d2]
}

/// θ coefficients on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineExpectationCoeffs {
    /// Requested horizons, in input order.
    pub horizons: Vec<f64>,
    /// `(θ₀, θ₁, θ₂)` at each requested horizon.
    pub theta: Vec<[f64; 3]>,
    /// Every accepted integrator step, starting at `(0, [0; 3])`.
    pub grid: Vec<(f64, [f64; 3])>,
}

impl AffineExpectationCoeffs {
    /// `log E[M_t | x]` at the `k`-th requested horizon.
    pub fn log_expectation(&self, k: usize, x: [f64; 2]) -> f64 {
        let th = self.theta[k];
        th[0] + th[1] * x[0] + th[2] * x[1]
    }

    pub fn expectation(&self, k: usize, x: [f64; 2]) -> f64 {
        self.log_expectation(k, x).exp()
    }
}

// Dormand–Prince 5(4) tableau. The system is autonomous so stage times drop out.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step<F: Fn(&[f64; 3]) -> [f64; 3]>(f: &F, y: &[f64; 3], h: f64) -> ([f64; 3], f64) {
    let mut k = [[0.0; 3]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for c in 0..3 {
                ys[c] += h * A[s][j] * kj[c];
            }
        }
        k[s] = f(&ys);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for c in 0..3 {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for s in 0..7 {
            hi += B5[s] * k[s][c];
            lo += B4[s] * k[s][c];
        }
        y5[c] += h * hi;
        let scale = ODE_ATOL + ODE_RTOL * y[c].abs().max(y5[c].abs());
        err = err.max((h * (hi - lo)).abs() / scale);
    }
    (y5, err)
}

/// Integrates the θ system through each horizon (in months).
pub fn affine_coefficients(
    f: &AffineFunctional,
    d: &StateDynamics,
    horizons: &[f64],
) -> Result<AffineExpectationCoeffs> {
    if horizons.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput("horizons must be finite and nonnegative".into()));
    }
    let mut order: Vec<usize> = (0..horizons.len()).collect();
    order.sort_by(|&a, &b| horizons[a].total_cmp(&horizons[b]));
    let field = |y: &[f64; 3]| rhs(f, d, y);

    let mut theta = vec![[0.0; 3]; horizons.len()];
    let mut grid = vec![(0.0, [0.0; 3])];
    let mut t = 0.0f64;
    let mut y = [0.0f64; 3];
    let mut h = 0.1f64;
    let mut steps = 0usize;
    for &idx in &order {
        let target = horizons[idx];
        while t < target {
            if steps >= MAX_STEPS {
                return Err(Error::NoConvergence {
                    what: "affine ODE",
                    iterations: steps,
                    residual: h,
                });
            }
            steps += 1;
            let hh = h.min(target - t);
            let (y_new, err) = dp_step(&field, &y, hh);
            let finite = y_new.iter().all(|v| v.is_finite());
            if finite && err <= 1.0 {
                t = if hh == target - t { target } else { t + hh };
                y = y_new;
                grid.push((t, y));
                if y[2].abs() > EXPLODE || y[1].abs() > EXPLODE {
                    return Err(Error::BlowUp { time: t });
                }
            }
            let factor = if finite && err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else if finite {
                5.0
            } else {
                0.2
            };
            h = hh * factor;
            if h < 1e-12 * t.max(1.0) {
                return Err(Error::BlowUp { time: t });
            }
        }
        theta[idx] = y;
    }
    Ok(AffineExpectationCoeffs {
        horizons: horizons.to_vec(),
        theta,
        grid,
    })
}

/// `E[M_t | X₀ = x]` for one horizon.
pub fn affine_expectation(
    f: &AffineFunctional,
    d: &StateDynamics,
    horizon: f64,
    x: [f64; 2],
) -> Result<f64> {
    let c = affine_coefficients(f, d, &[horizon])?;
    Ok(c.expectation(0, x))
}
