//! Square-root state with a state-dependent risk price:
//!
//! `d log S = β̄ dt − ½ X ᾱ² dt + √X ᾱ dW`,
//! `dX = −κ (X − μ̄) dt + σ̄ √X dW`.
//!
//! Candidate eigenfunctions are `e(x) = exp(υ x)`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{path_rng, run_chunks, Moments};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareRootModel {
    pub kappa: f64,
    pub mu_bar: f64,
    pub sigma_bar: f64,
    pub alpha_bar: f64,
    pub beta_bar: f64,
}

impl SquareRootModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !(self.mu_bar > 0.0) || !(self.sigma_bar > 0.0) {
            return Err(Error::InvalidInput(
                "kappa, mu_bar and sigma_bar must be positive".into(),
            ));
        }
        if !self.alpha_bar.is_finite() || !(self.beta_bar < 0.0) {
            return Err(Error::InvalidInput("beta_bar must be negative".into()));
        }
        Ok(())
    }

    /// `2κμ̄ ≥ σ̄²`: the process stays away from zero. Violations are allowed
    /// but callers should warn.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.mu_bar >= self.sigma_bar * self.sigma_bar
    }

    /// Constant and `x` coefficients of the drift of
    /// `log[exp(−η t) S_t e(X_t)]` plus its Itô correction; both vanish for a
    /// valid eigenpair.
    pub fn drift_identity(&self, upsilon: f64, eta: f64) -> (f64, f64) {
        let (k, m, s, a) = (self.kappa, self.mu_bar, self.sigma_bar, self.alpha_bar);
        let constant = self.beta_bar + upsilon * k * m - eta;
        let slope = -0.5 * a * a - upsilon * k + 0.5 * (upsilon * s + a).powi(2);
        (constant, slope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenCandidate {
    pub upsilon: f64,
    pub eta: f64,
    /// Mean reversion of `X` under the measure the candidate induces.
    pub kappa_new: f64,
    pub ergodic: bool,
}

impl EigenCandidate {
    /// Long-run mean of `X` under the induced measure.
    pub fn long_run_mean(&self, model: &SquareRootModel) -> f64 {
        model.kappa * model.mu_bar / self.kappa_new
    }

    /// Loading of the induced martingale on `√X dW`.
    pub fn martingale_loading(&self, model: &SquareRootModel) -> f64 {
        model.alpha_bar + self.upsilon * model.sigma_bar
    }
}

/// Both roots of `υ(−κ + ½υσ̄² + σ̄ᾱ) = 0`, with `η` from the constant term
/// `β̄ + υκμ̄ − η = 0`.
pub fn eigen_candidates(model: &SquareRootModel) -> Result<[EigenCandidate; 2]> {
    model.validate()?;
    let (k, m, s, a) = (model.kappa, model.mu_bar, model.sigma_bar, model.alpha_bar);
    // Under the candidate measure W gains drift √X (ᾱ + υσ̄), so the two
    // roots induce κ − ᾱσ̄ and its negative.
    let kappa_n = k - a * s;
    let make = |upsilon: f64, kappa_new: f64| {
        EigenCandidate {
            upsilon,
            eta: model.beta_bar + upsilon * k * m,
            kappa_new,
            ergodic: kappa_new > 0.0,
        }
    };
    let root = (2.0 * k - 2.0 * a * s) / (s * s);
    Ok([make(0.0, kappa_n), make(root, -kappa_n)])
}

/// Mean reversion this close to zero counts as the degenerate case.
pub const KNIFE_EDGE_TOL: f64 = 1e-12;

/// The candidate whose induced square-root process mean-reverts.
pub fn select_ergodic(candidates: &[EigenCandidate]) -> Result<EigenCandidate> {
    if candidates.iter().any(|c| c.kappa_new.abs() <= KNIFE_EDGE_TOL) {
        return Err(Error::NoErgodicSelection(
            "knife-edge: a candidate has zero mean reversion".into(),
        ));
    }
    let good: Vec<&EigenCandidate> = candidates.iter().filter(|c| c.ergodic).collect();
    match good.as_slice() {
        [one] => Ok(**one),
        [] => Err(Error::NoErgodicSelection("no candidate mean-reverts".into())),
        _ => Err(Error::NoErgodicSelection(format!(
            "{} candidates mean-revert",
            good.len()
        ))),
    }
}

/// Measure under which paths are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMeasure {
    Physical,
    /// The measure induced by the candidate's martingale.
    Candidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub x0: f64,
}

impl SimConfig {
    pub fn new(horizon: f64, n_paths: usize, seed: u64, x0: f64) -> Self {
        Self {
            horizon,
            dt: 1.0 / 250.0,
            n_paths,
            seed,
            x0,
        }
    }
}

/// Ensemble statistics at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub mean_x: f64,
    pub var_x: f64,
    /// Physical: mean of `exp(−ηt) S_t e(X_t) / e(x₀)`.
    /// Candidate: mean of the inverse likelihood ratio, the same martingale
    /// seen from the other measure. Either way it should be one.
    pub martingale_mean: f64,
    pub martingale_se: f64,
    /// Zero-coupon bond price `E[S_t]`.
    pub bond_mean: f64,
    pub bond_se: f64,
    pub n_paths: usize,
}

/// Full-truncation Euler simulation of `X` jointly with the SDF (physical
/// measure) or with the inverse martingale (candidate measure).
pub fn simulate(
    model: &SquareRootModel,
    candidate: &EigenCandidate,
    measure: SimMeasure,
    cfg: &SimConfig,
) -> Result<SimStats> {
    model.validate()?;
    if !(cfg.dt > 0.0) || !(cfg.horizon >= 0.0) || cfg.n_paths < 2 || !(cfg.x0 >= 0.0) {
        return Err(Error::InvalidInput(
            "need dt > 0, horizon ≥ 0, x0 ≥ 0 and at least two paths".into(),
        ));
    }
    let steps = (cfg.horizon / cfg.dt).round().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { cfg.horizon / steps as f64 };
    let t = steps as f64 * dt;
    let sq = dt.sqrt();
    let (k, m, s, a) = (model.kappa, model.mu_bar, model.sigma_bar, model.alpha_bar);
    let up = candidate.upsilon;
    let loading = candidate.martingale_loading(model);
    let kappa_sim = match measure {
        SimMeasure::Physical => k,
        SimMeasure::Candidate => candidate.kappa_new,
    };

    type Acc = (Moments, Moments, Moments, usize);
    let chunks: Vec<Acc> = run_chunks(cfg.n_paths, |start, end| {
        let mut acc: Acc = Default::default();
        for path in start..end {
            let mut rng = path_rng(cfg.seed, path as u64);
            let mut x = cfg.x0;
            // log S (physical) or log of the inverse martingale (candidate).
            let mut log_w = 0.0;
            for _ in 0..steps {
                let xp = x.max(0.0);
                let z: f64 = StandardNormal.sample(&mut rng);
                let dw = sq * z;
                let vol = xp.sqrt();
                match measure {
                    SimMeasure::Physical => {
                        log_w += (model.beta_bar - 0.5 * xp * a * a) * dt + vol * a * dw;
                    }
                    SimMeasure::Candidate => {
                        log_w += -0.5 * xp * loading * loading * dt - vol * loading * dw;
                    }
                }
                x += (k * m - kappa_sim * xp) * dt + s * vol * dw;
            }
            let (mart, bond) = match measure {
                SimMeasure::Physical => {
                    let sdf = log_w.exp();
                    let mart = (-candidate.eta * t + log_w + up * (x - cfg.x0)).exp();
                    (mart, sdf)
                }
                SimMeasure::Candidate => {
                    let bond = (candidate.eta * t + up * (cfg.x0 - x)).exp();
                    (log_w.exp(), bond)
                }
            };
            if !(x.is_finite() && mart.is_finite() && bond.is_finite()) {
                acc.3 += 1;
                continue;
            }
            acc.0.push(x);
            acc.1.push(mart);
            acc.2.push(bond);
        }
        acc
    });
    let mut total: Acc = Default::default();
    for c in &chunks {
        total.0.merge(&c.0);
        total.1.merge(&c.1);
        total.2.merge(&c.2);
        total.3 += c.3;
    }
    if total.3 > 0 {
        return Err(Error::NanPaths { count: total.3 });
    }
    Ok(SimStats {
        mean_x: total.0.mean(),
        var_x: total.0.variance(),
        martingale_mean: total.1.mean(),
        martingale_se: total.1.std_error(),
        bond_mean: total.2.mean(),
        bond_se: total.2.std_error(),
        n_paths: total.0.count,
    })
}
