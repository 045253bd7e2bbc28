use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Long-run-risk model at monthly frequency.
///
/// State `X = (X₁, X₂)` with growth-rate factor `X₁` and stochastic volatility
/// `X₂`:
///
/// `dX₁ = [μ₁₁(X₁ − ι₁) + μ₁₂(X₂ − ι₂)] dt + √X₂ σ₁·dW`
/// `dX₂ = μ₂₂(X₂ − ι₂) dt + √X₂ σ₂·dW`
/// `d log C = [β_c0 + β_c1(X₁ − ι₁) + β_c2(X₂ − ι₂)] dt + √X₂ α_c·dW`
///
/// with `W` a three-dimensional Brownian motion. Preferences are recursive
/// with unit EIS, discount rate `delta` and risk aversion `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrrParams {
    pub mu_11: f64,
    pub mu_12: f64,
    pub mu_22: f64,
    pub sigma_1: [f64; 3],
    pub sigma_2: [f64; 3],
    pub iota: [f64; 2],
    pub beta_c: [f64; 3],
    pub alpha_c: [f64; 3],
    pub delta: f64,
    pub gamma: f64,
}

impl Default for LrrParams {
    /// Monthly calibration with a persistent growth factor and slowly
    /// mean-reverting volatility.
    fn default() -> Self {
        Self {
            mu_11: -0.021,
            mu_12: 0.0,
            mu_22: -0.013,
            sigma_1: [0.0, 0.00034, 0.0],
            sigma_2: [0.0, 0.0, -0.038],
            iota: [0.0, 1.0],
            beta_c: [0.0015, 1.0, 0.0],
            alpha_c: [0.0078, 0.0, 0.0],
            delta: 0.002,
            gamma: 10.0,
        }
    }
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm2(a: &[f64; 3]) -> f64 {
    dot(a, a)
}

pub(crate) fn axpy(a: &[f64; 3], s: f64, b: &[f64; 3]) -> [f64; 3] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Names accepted by [`LrrParams::set`].
pub const PARAM_KEYS: &[&str] = &[
    "mu_11", "mu_12", "mu_22", "sigma_1_0", "sigma_1_1", "sigma_1_2", "sigma_2_0", "sigma_2_1",
    "sigma_2_2", "iota_1", "iota_2", "beta_c_0", "beta_c_1", "beta_c_2", "alpha_c_0", "alpha_c_1",
    "alpha_c_2", "delta", "gamma",
];

impl LrrParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mu_11, self.mu_12, self.mu_22, self.delta, self.gamma]
            .into_iter()
            .chain(self.sigma_1)
            .chain(self.sigma_2)
            .chain(self.iota)
            .chain(self.beta_c)
            .chain(self.alpha_c);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("parameters must be finite".into()));
        }
        if !(self.mu_11 < 0.0) || !(self.mu_22 < 0.0) {
            return Err(Error::InvalidInput("mu_11 and mu_22 must be negative".into()));
        }
        if !(self.iota[1] > 0.0) {
            return Err(Error::InvalidInput("iota_2 must be positive".into()));
        }
        if !(self.delta > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::InvalidInput("delta and gamma must be positive".into()));
        }
        Ok(())
    }

    /// Sets one named scalar, e.g. `gamma` or `sigma_2_2` (zero-based
    /// component of a vector, one-based for `iota`).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "mu_11" => &mut self.mu_11,
            "mu_12" => &mut self.mu_12,
            "mu_22" => &mut self.mu_22,
            "iota_1" => &mut self.iota[0],
            "iota_2" => &mut self.iota[1],
            "delta" => &mut self.delta,
            "gamma" => &mut self.gamma,
            _ => {
                let (name, idx) = key
                    .rsplit_once('_')
                    .and_then(|(n, i)| i.parse::<usize>().ok().map(|i| (n, i)))
                    .filter(|&(_, i)| i < 3)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown parameter '{key}'")))?;
                match name {
                    "sigma_1" => &mut self.sigma_1[idx],
                    "sigma_2" => &mut self.sigma_2[idx],
                    "beta_c" => &mut self.beta_c[idx],
                    "alpha_c" => &mut self.alpha_c[idx],
                    _ => return Err(Error::InvalidInput(format!("unknown parameter '{key}'"))),
                }
            }
        };
        *slot = value;
        Ok(())
    }

    /// Drift and volatility of the state under the data-generating measure.
    pub fn dynamics(&self) -> StateDynamics {
        StateDynamics {
            mu_11: self.mu_11,
            mu_12: self.mu_12,
            mu_22: self.mu_22,
            iota: self.iota,
            sigma_1: self.sigma_1,
            sigma_2: self.sigma_2,
        }
    }

    /// Log consumption as a multiplicative functional.
    pub fn consumption(&self) -> AffineFunctional {
        AffineFunctional {
            beta_0: self.beta_c[0],
            beta_11: self.beta_c[1],
            beta_12: self.beta_c[2],
            alpha: self.alpha_c,
        }
    }
}

/// State dynamics `dX = μ(X − ι) dt + √X₂ σ dW` with upper-triangular `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDynamics {
    pub mu_11: f64,
    pub mu_12: f64,
    pub mu_22: f64,
    pub iota: [f64; 2],
    pub sigma_1: [f64; 3],
    pub sigma_2: [f64; 3],
}

impl StateDynamics {
    pub fn is_stationary(&self) -> bool {
        self.mu_11 < 0.0 && self.mu_22 < 0.0 && self.iota[1] > 0.0
    }

    /// Dynamics after `W` picks up drift `√X₂ shift`: the intercepts are
    /// rewritten so the same centered form holds.
    pub fn shifted(&self, shift: &[f64; 3]) -> StateDynamics {
        let mu_12 = self.mu_12 + dot(&self.sigma_1, shift);
        let mu_22 = self.mu_22 + dot(&self.sigma_2, shift);
        let iota_2 = self.mu_22 * self.iota[1] / mu_22;
        let iota_1 = self.iota[0] + (self.mu_12 * self.iota[1] - mu_12 * iota_2) / self.mu_11;
        StateDynamics {
            mu_11: self.mu_11,
            mu_12,
            mu_22,
            iota: [iota_1, iota_2],
            sigma_1: self.sigma_1,
            sigma_2: self.sigma_2,
        }
    }

    /// Stationary mean and variance of `X₂`, a square-root process.
    pub fn x2_moments(&self) -> (f64, f64) {
        (self.iota[1], norm2(&self.sigma_2) * self.iota[1] / (-2.0 * self.mu_22))
    }
}

/// `d log M = [β₀ + β₁₁(X₁ − ι₁) + β₁₂(X₂ − ι₂)] dt + √X₂ α·dW`, centered at
/// the `ι` of the dynamics it is paired with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFunctional {
    pub beta_0: f64,
    pub beta_11: f64,
    pub beta_12: f64,
    pub alpha: [f64; 3],
}

impl AffineFunctional {
    pub fn zero() -> Self {
        Self {
            beta_0: 0.0,
            beta_11: 0.0,
            beta_12: 0.0,
            alpha: [0.0; 3],
        }
    }

    /// Drift at state `x` relative to centering `iota`.
    pub fn drift(&self, iota: &[f64; 2], x: [f64; 2]) -> f64 {
        self.beta_0 + self.beta_11 * (x[0] - iota[0]) + self.beta_12 * (x[1] - iota[1])
    }

    /// Coefficients of the same process written under the measure where
    /// `W` has drift `√X₂ shift`, centered at `new_iota`.
    pub fn under_shift(&self, old_iota: &[f64; 2], shift: &[f64; 3], new_iota: &[f64; 2]) -> Self {
        let cross = dot(&self.alpha, shift);
        Self {
            beta_0: self.beta_0
                + self.beta_11 * (new_iota[0] - old_iota[0])
                + self.beta_12 * (new_iota[1] - old_iota[1])
                + cross * new_iota[1],
            beta_11: self.beta_11,
            beta_12: self.beta_12 + cross,
            alpha: self.alpha,
        }
    }

    pub fn product(&self, other: &AffineFunctional) -> Self {
        Self {
            beta_0: self.beta_0 + other.beta_0,
            beta_11: self.beta_11 + other.beta_11,
            beta_12: self.beta_12 + other.beta_12,
            alpha: axpy(&self.alpha, 1.0, &other.alpha),
        }
    }

    /// The functional `M⁻¹`.
    pub fn inverse(&self) -> Self {
        Self {
            beta_0: -self.beta_0,
            beta_11: -self.beta_11,
            beta_12: -self.beta_12,
            alpha: [-self.alpha[0], -self.alpha[1], -self.alpha[2]],
        }
    }

    /// Exponential martingale `d log H = −½X₂|α|² dt + √X₂ α·dW` centered at `iota`.
    pub fn martingale(alpha: [f64; 3], iota: &[f64; 2]) -> Self {
        let half = 0.5 * norm2(&alpha);
        Self {
            beta_0: -half * iota[1],
            beta_11: 0.0,
            beta_12: -half,
            alpha,
        }
    }
}
