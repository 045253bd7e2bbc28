use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrr::params::{axpy, dot, norm2, AffineFunctional, LrrParams, StateDynamics};

/// Continuation value `log V − log C = v₀ + v₁x₁ + v₂x₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueCoefficients {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub discriminant: f64,
}

/// Residuals of the three algebraic equations for the value coefficients.
pub fn value_residuals(p: &LrrParams, v: &ValueCoefficients) -> [f64; 3] {
    let a = axpy(&axpy(&p.alpha_c, v.v1, &p.sigma_1), v.v2, &p.sigma_2);
    [
        p.delta * v.v0
            - (p.beta_c[0]
                - p.iota[0] * (p.beta_c[1] + p.mu_11 * v.v1)
                - p.iota[1] * (p.beta_c[2] + p.mu_12 * v.v1 + p.mu_22 * v.v2)),
        p.delta * v.v1 - (p.beta_c[1] + p.mu_11 * v.v1),
        p.delta * v.v2
            - (p.beta_c[2] + p.mu_12 * v.v1 + p.mu_22 * v.v2 + 0.5 * (1.0 - p.gamma) * norm2(&a)),
    ]
}

/// Quadratic `A v₂² + B v₂ + C = 0` for the volatility loading of the value.
fn value_quadratic(p: &LrrParams, v1: f64) -> (f64, f64, f64) {
    let a = axpy(&p.alpha_c, v1, &p.sigma_1);
    let g = 1.0 - p.gamma;
    (
        0.5 * g * norm2(&p.sigma_2),
        p.mu_22 - p.delta + g * dot(&a, &p.sigma_2),
        p.beta_c[2] + p.mu_12 * v1 + 0.5 * g * norm2(&a),
    )
}

/// Discriminant of the value quadratic at risk aversion `gamma`.
pub fn value_discriminant(p: &LrrParams) -> f64 {
    let v1 = p.beta_c[1] / (p.delta - p.mu_11);
    let (a, b, c) = value_quadratic(p, v1);
    b * b - 4.0 * a * c
}

/// Solves for the value coefficients, taking the root of the quadratic that
/// stays bounded as `gamma → 1`.
pub fn solve_value_function(p: &LrrParams) -> Result<ValueCoefficients> {
    p.validate()?;
    let v1 = p.beta_c[1] / (p.delta - p.mu_11);
    let (a, b, c) = value_quadratic(p, v1);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::NoValueFunction {
            discriminant: disc,
            gamma: p.gamma,
        });
    }
    // (−B − √D)/(2A) rewritten without the cancellation; reduces to −C/B at A = 0.
    let v2 = if a == 0.0 {
        -c / b
    } else {
        let denom = -b + disc.sqrt();
        if denom != 0.0 {
            2.0 * c / denom
        } else {
            (-b - disc.sqrt()) / (2.0 * a)
        }
    };
    let v0 = (p.beta_c[0]
        - p.iota[0] * (p.beta_c[1] + p.mu_11 * v1)
        - p.iota[1] * (p.beta_c[2] + p.mu_12 * v1 + p.mu_22 * v2))
        / p.delta;
    let v = ValueCoefficients {
        v0,
        v1,
        v2,
        discriminant: disc,
    };
    check_residuals("value function", &value_residuals(p, &v))?;
    Ok(v)
}

fn check_residuals(what: &'static str, r: &[f64]) -> Result<()> {
    let worst = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if worst > 1e-12 {
        return Err(Error::NoConvergence {
            what,
            iterations: 0,
            residual: worst,
        });
    }
    Ok(())
}

/// Loading of the continuation-value martingale `H*`.
pub fn value_martingale_loading(p: &LrrParams, v: &ValueCoefficients) -> [f64; 3] {
    let a = axpy(&axpy(&p.alpha_c, v.v1, &p.sigma_1), v.v2, &p.sigma_2);
    [(1.0 - p.gamma) * a[0], (1.0 - p.gamma) * a[1], (1.0 - p.gamma) * a[2]]
}

/// SDF `d log S = −δ dt − d log C + d log H*` as an affine functional.
pub fn sdf_coefficients(p: &LrrParams, v: &ValueCoefficients) -> AffineFunctional {
    let h = AffineFunctional::martingale(value_martingale_loading(p, v), &p.iota);
    let mut s = p.consumption().inverse().product(&h);
    s.beta_0 -= p.delta;
    s
}

/// One root of the eigenfunction problem `ê(x) = exp(e₁x₁ + e₂x₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfRoot {
    pub eta: f64,
    pub e1: f64,
    pub e2: f64,
    /// Loading of the implied martingale.
    pub alpha_h: [f64; 3],
    /// `μ₂₂` under the implied measure.
    pub mu_22: f64,
}

/// Perron–Frobenius solution with the smaller eigenvalue, plus the other root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfSolution {
    pub eta_hat: f64,
    pub e1: f64,
    pub e2: f64,
    pub alpha_h: [f64; 3],
    pub rejected: PfRoot,
}

impl PfSolution {
    /// `log ê(x)`.
    pub fn log_eigenfunction(&self, x: [f64; 2]) -> f64 {
        self.e1 * x[0] + self.e2 * x[1]
    }
}

/// Residuals of the three eigen-equations for a functional `s` under `d`.
pub fn pf_residuals(d: &StateDynamics, s: &AffineFunctional, eta: f64, e1: f64, e2: f64) -> [f64; 3] {
    let iota = d.iota;
    [
        eta - (s.beta_0 - s.beta_11 * iota[0] - s.beta_12 * iota[1]
            - e1 * (d.mu_11 * iota[0] + d.mu_12 * iota[1])
            - e2 * d.mu_22 * iota[1]),
        s.beta_11 + d.mu_11 * e1,
        s.beta_12
            + 0.5 * norm2(&s.alpha)
            + e1 * (d.mu_12 + dot(&d.sigma_1, &s.alpha))
            + 0.5 * e1 * e1 * norm2(&d.sigma_1)
            + e2 * (d.mu_22 + dot(&d.sigma_2, &s.alpha) + e1 * dot(&d.sigma_1, &d.sigma_2))
            + 0.5 * e2 * e2 * norm2(&d.sigma_2),
    ]
}

/// Solves the eigenfunction problem for any affine functional under `d`.
pub fn solve_eigen(d: &StateDynamics, s: &AffineFunctional) -> Result<PfSolution> {
    let e1 = -s.beta_11 / d.mu_11;
    let qa = 0.5 * norm2(&d.sigma_2);
    let qb = d.mu_22 + dot(&d.sigma_2, &s.alpha) + e1 * dot(&d.sigma_1, &d.sigma_2);
    let qc = s.beta_12
        + 0.5 * norm2(&s.alpha)
        + e1 * (d.mu_12 + dot(&d.sigma_1, &s.alpha))
        + 0.5 * e1 * e1 * norm2(&d.sigma_1);
    let roots: Vec<f64> = if qa == 0.0 {
        if qb == 0.0 {
            return Err(Error::NoEigenRoot(0.0));
        }
        vec![-qc / qb]
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::NoEigenRoot(disc));
        }
        let sq = disc.sqrt();
        // Numerically stable pair of roots.
        let q = -0.5 * (qb + qb.signum() * sq);
        if q == 0.0 {
            vec![0.0, 0.0]
        } else {
            vec![q / qa, qc / q]
        }
    };
    let make = |e2: f64| {
        let eta = s.beta_0 - s.beta_11 * d.iota[0] - s.beta_12 * d.iota[1]
            - e1 * (d.mu_11 * d.iota[0] + d.mu_12 * d.iota[1])
            - e2 * d.mu_22 * d.iota[1];
        let alpha_h = axpy(&axpy(&s.alpha, e1, &d.sigma_1), e2, &d.sigma_2);
        PfRoot {
            eta,
            e1,
            e2,
            alpha_h,
            mu_22: d.mu_22 + dot(&d.sigma_2, &alpha_h),
        }
    };
    let mut cands: Vec<PfRoot> = roots.into_iter().map(make).collect();
    cands.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let best = cands[0];
    let rejected = *cands.last().unwrap();
    if !(best.mu_22 < 0.0) {
        return Err(Error::NoErgodicSelection(format!(
            "smallest-eigenvalue root gives volatility drift {} ≥ 0",
            best.mu_22
        )));
    }
    check_residuals("eigenfunction system", &pf_residuals(d, s, best.eta, best.e1, best.e2))?;
    Ok(PfSolution {
        eta_hat: best.eta,
        e1: best.e1,
        e2: best.e2,
        alpha_h: best.alpha_h,
        rejected,
    })
}

/// Perron–Frobenius solution for the SDF under the model dynamics.
pub fn solve_pf(p: &LrrParams, sdf: &AffineFunctional) -> Result<PfSolution> {
    solve_eigen(&p.dynamics(), sdf)
}

/// State drift parameters under a changed measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangedMeasureParams {
    pub mu_hat_11: f64,
    pub mu_hat_12: f64,
    pub mu_hat_22: f64,
    pub iota_hat: [f64; 2],
    /// Drift loading `W` picks up under the new measure.
    pub shift: [f64; 3],
}

impl ChangedMeasureParams {
    pub fn dynamics(&self, p: &LrrParams) -> StateDynamics {
        StateDynamics {
            mu_11: self.mu_hat_11,
            mu_12: self.mu_hat_12,
            mu_22: self.mu_hat_22,
            iota: self.iota_hat,
            sigma_1: p.sigma_1,
            sigma_2: p.sigma_2,
        }
    }

    /// Rewrites a functional centered at the model `ι` under this measure.
    pub fn transform(&self, p: &LrrParams, f: &AffineFunctional) -> AffineFunctional {
        f.under_shift(&p.iota, &self.shift, &self.iota_hat)
    }
}

fn change_measure(p: &LrrParams, shift: [f64; 3]) -> Result<ChangedMeasureParams> {
    let d = p.dynamics().shifted(&shift);
    if !(d.mu_22 < 0.0) {
        return Err(Error::NoErgodicSelection(format!(
            "volatility drift {} ≥ 0 under the changed measure",
            d.mu_22
        )));
    }
    Ok(ChangedMeasureParams {
        mu_hat_11: d.mu_11,
        mu_hat_12: d.mu_12,
        mu_hat_22: d.mu_22,
        iota_hat: d.iota,
        shift,
    })
}

/// Dynamics under the long-term risk-neutral measure.
pub fn changed_measure(p: &LrrParams, pf: &PfSolution) -> Result<ChangedMeasureParams> {
    change_measure(p, pf.alpha_h)
}

/// Dynamics under the instantaneous risk-neutral measure, which absorbs the
/// full Brownian loading of the SDF.
pub fn risk_neutral_measure(p: &LrrParams, sdf: &AffineFunctional) -> Result<ChangedMeasureParams> {
    change_measure(p, sdf.alpha)
}

/// Everything the downstream yield and density code needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrrSolution {
    pub value: ValueCoefficients,
    pub sdf: AffineFunctional,
    pub pf: PfSolution,
    pub p_hat: ChangedMeasureParams,
    pub risk_neutral: ChangedMeasureParams,
}

pub fn solve_lrr(p: &LrrParams) -> Result<LrrSolution> {
    let value = solve_value_function(p)?;
    let sdf = sdf_coefficients(p, &value);
    let pf = solve_pf(p, &sdf)?;
    let p_hat = changed_measure(p, &pf)?;
    let risk_neutral = risk_neutral_measure(p, &sdf)?;
    Ok(LrrSolution {
        value,
        sdf,
        pf,
        p_hat,
        risk_neutral,
    })
}
