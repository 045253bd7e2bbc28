use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cressie–Read divergence `φ_θ(r) = (r^{1+θ} − 1)/(θ(1+θ))`, with
/// `r log r` at `θ = 0` and `−log r` at `θ = −1`.
///
/// The two limit branches differ from the normalized family
/// `[r^{1+θ} − 1 − (1+θ)(r − 1)]/(θ(1+θ))` only by a multiple of `r − 1`,
/// so expectations agree whenever `E r = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSpec {
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Power,
    Entropy,
    NegLog,
}

impl DivergenceSpec {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidInput(format!("theta must be finite, got {theta}")));
        }
        Ok(Self { theta })
    }

    fn branch(&self) -> Branch {
        if self.theta == 0.0 {
            Branch::Entropy
        } else if self.theta == -1.0 {
            Branch::NegLog
        } else {
            Branch::Power
        }
    }

    /// Whether `φ_θ(0)` is finite, so `J = 0` is admissible.
    pub fn allows_zero(&self) -> bool {
        self.theta > -1.0
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        let th = self.theta;
        if r < 0.0 || (r == 0.0 && !self.allows_zero()) || r.is_nan() {
            return Err(Error::InvalidInput(format!(
                "phi_{th} is undefined at r = {r}"
            )));
        }
        Ok(match self.branch() {
            Branch::Entropy => {
                if r == 0.0 {
                    0.0
                } else {
                    r * r.ln()
                }
            }
            Branch::NegLog => -r.ln(),
            Branch::Power => (r.powf(1.0 + th) - 1.0) / (th * (1.0 + th)),
        })
    }

    /// `φ'_θ(r)`.
    pub fn phi_prime(&self, r: f64) -> f64 {
        match self.branch() {
            Branch::Entropy => r.ln() + 1.0,
            Branch::NegLog => -1.0 / r,
            Branch::Power => r.powf(self.theta) / self.theta,
        }
    }

    /// Convex conjugate `φ*(u) = sup_{r ≥ 0} [ur − φ(r)]`, `None` where infinite.
    pub fn conjugate(&self, u: f64) -> Option<f64> {
        let th = self.theta;
        match self.branch() {
            Branch::Entropy => Some((u - 1.0).exp()),
            Branch::NegLog => (u < 0.0).then(|| -1.0 - (-u).ln()),
            Branch::Power => {
                let base = 1.0 / (th * (1.0 + th));
                if th > 0.0 {
                    let a = (th * u).max(0.0);
                    Some(a.powf((1.0 + th) / th) / (1.0 + th) + base)
                } else if u < 0.0 {
                    Some((th * u).powf((1.0 + th) / th) / (1.0 + th) + base)
                } else {
                    None
                }
            }
        }
    }

    /// Maximizer of `ur − φ(r)`, the primal `J` implied by a dual index `u`.
    pub fn conjugate_argmax(&self, u: f64) -> f64 {
        let th = self.theta;
        match self.branch() {
            Branch::Entropy => (u - 1.0).exp(),
            Branch::NegLog => -1.0 / u,
            Branch::Power => {
                let a = th * u;
                if a <= 0.0 {
                    0.0
                } else {
                    a.powf(1.0 / th)
                }
            }
        }
    }

    /// Derivative of [`conjugate_argmax`](Self::conjugate_argmax) in `u`.
    pub fn conjugate_curvature(&self, u: f64) -> f64 {
        let th = self.theta;
        match self.branch() {
            Branch::Entropy => (u - 1.0).exp(),
            Branch::NegLog => 1.0 / (u * u),
            Branch::Power => {
                let a = th * u;
                if a <= 0.0 {
                    0.0
                } else {
                    a.powf((1.0 - th) / th)
                }
            }
        }
    }
}
