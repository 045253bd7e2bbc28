//! Finite-state economies where an additive process `Y` is replaced by a
//! slowly mean-reverting one, used to show how the ζ-indexed family of
//! eigenfunctions turns into near-solutions as the reversion rate vanishes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::perron::{power_iteration, PowerIterationOptions};
use crate::markov::types::{build_economy, MarkovPricingEconomy, SdfMatrix, StochasticMatrix};
use crate::sim::path_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistentApproxConfig {
    /// Number of states of the exogenous chain `X`.
    pub n_x: usize,
    /// The `Y` grid is `k · step` for `k = −half_width..=half_width`.
    pub half_width: usize,
    pub step: f64,
    pub delta: f64,
    /// Exponent of `Y` in the SDF's state function, `m̃(x, y) = m(x) exp(−ζ̃ y)`.
    pub zeta_true: f64,
    /// Trial values `ζ̃ + offset` to evaluate.
    pub zeta_offsets: Vec<f64>,
    pub seed: u64,
}

impl Default for PersistentApproxConfig {
    fn default() -> Self {
        Self {
            n_x: 2,
            half_width: 20,
            step: 0.1,
            delta: 0.01,
            zeta_true: 1.0,
            zeta_offsets: vec![-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0],
            seed: 0,
        }
    }
}

/// Eigen-residual of one trial member `exp(ζy) e_ζ(x)` of the limiting family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaTrial {
    pub zeta: f64,
    pub eta_zeta: f64,
    /// `max |(Qv)_s / (exp(η_ζ) v_s) − 1|` over interior grid states.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistentApproxRow {
    pub rho: f64,
    /// `1 − |λ₂| / λ₁` for the pricing matrix.
    pub spectral_gap: f64,
    pub eta_hat: f64,
    pub trials: Vec<ZetaTrial>,
}

/// Primitives drawn from the seed: `X` transition, `m(x)`, and the up and down
/// probabilities of `Y` in each `X` state.
struct Primitives {
    p_x: DMatrix<f64>,
    m: Vec<f64>,
    up: Vec<f64>,
    down: Vec<f64>,
}

fn primitives(cfg: &PersistentApproxConfig) -> Result<Primitives> {
    if cfg.n_x == 0 || cfg.half_width < 2 || !(cfg.step > 0.0) {
        return Err(Error::InvalidInput(
            "need n_x ≥ 1, half_width ≥ 2 and a positive step".into(),
        ));
    }
    let mut rng = path_rng(cfg.seed, 0);
    let n = cfg.n_x;
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.1..1.0));
    let p_x = StochasticMatrix::from_unnormalized(raw)?.into_inner();
    let m = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let up = (0..n).map(|_| rng.random_range(0.1..0.25)).collect();
    let down = (0..n).map(|_| rng.random_range(0.1..0.25)).collect();
    Ok(Primitives { p_x, m, up, down })
}

/// Probabilities of moving `Y` up and down one grid step from level `k`.
fn y_moves(pr: &Primitives, x: usize, k: i64, kmax: i64, rho: f64) -> (f64, f64) {
    let pull = rho * k as f64 / kmax as f64;
    let up = if k == kmax { 0.0 } else { pr.up[x] * (1.0 - pull) };
    let down = if k == -kmax { 0.0 } else { pr.down[x] * (1.0 + pull) };
    (up, down)
}

/// Builds the joint `(X, Y)` economy for reversion rate `ρ ∈ (0, 1]`. State
/// `s = x · (2K + 1) + (k + K)`. Also returns the `Y` value of each state.
pub fn persistent_economy(
    cfg: &PersistentApproxConfig,
    rho: f64,
) -> Result<(MarkovPricingEconomy, Vec<f64>)> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput(format!("reversion rate {rho} outside (0, 1]")));
    }
    let pr = primitives(cfg)?;
    build_joint(cfg, &pr, rho)
}

fn build_joint(
    cfg: &PersistentApproxConfig,
    pr: &Primitives,
    rho: f64,
) -> Result<(MarkovPricingEconomy, Vec<f64>)> {
    let kmax = cfg.half_width as i64;
    let m_y = 2 * cfg.half_width + 1;
    let n = cfg.n_x * m_y;
    let idx = |x: usize, k: i64| x * m_y + (k + kmax) as usize;
    let y_of = |s: usize| ((s % m_y) as i64 - kmax) as f64 * cfg.step;
    let m_tilde = |s: usize| pr.m[s / m_y] * (-cfg.zeta_true * y_of(s)).exp();

    let mut p = DMatrix::zeros(n, n);
    for x in 0..cfg.n_x {
        for k in -kmax..=kmax {
            let (up, down) = y_moves(pr, x, k, kmax, rho);
            let s = idx(x, k);
            for x2 in 0..cfg.n_x {
                let px = pr.p_x[(x, x2)];
                p[(s, idx(x2, k))] += px * (1.0 - up - down);
                if up > 0.0 {
                    p[(s, idx(x2, k + 1))] += px * up;
                }
                if down > 0.0 {
                    p[(s, idx(x2, k - 1))] += px * down;
                }
            }
        }
    }
    let sdf = DMatrix::from_fn(n, n, |s, s2| (-cfg.delta).exp() * m_tilde(s2) / m_tilde(s));
    let econ = build_economy(StochasticMatrix::new(p)?, SdfMatrix::new(sdf)?)?;
    Ok((econ, (0..n).map(y_of).collect()))
}

/// Limiting (`ρ = 0`, unbounded grid) eigenproblem for `exp(ζy) f(x)`:
/// `A_ζ(x, x') = e^{−δ} p(x, x') m(x')/m(x) · E[exp((ζ − ζ̃)ΔY) | x]`.
fn limit_member(cfg: &PersistentApproxConfig, pr: &Primitives, zeta: f64) -> Result<(f64, DVector<f64>)> {
    let a = zeta - cfg.zeta_true;
    let h = cfg.step;
    let n = cfg.n_x;
    let mgf: Vec<f64> = (0..n)
        .map(|x| pr.up[x] * (a * h).exp() + pr.down[x] * (-a * h).exp() + 1.0 - pr.up[x] - pr.down[x])
        .collect();
    let op = DMatrix::from_fn(n, n, |x, x2| {
        (-cfg.delta).exp() * pr.p_x[(x, x2)] * pr.m[x2] / pr.m[x] * mgf[x]
    });
    let sol = power_iteration(&op, &PowerIterationOptions::default())?;
    Ok((sol.eigenvalue.ln(), sol.vector))
}

fn spectral_gap(q: &DMatrix<f64>) -> f64 {
    let mut moduli: Vec<f64> = q.clone().complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    if moduli.len() < 2 || moduli[0] == 0.0 {
        return 1.0;
    }
    1.0 - moduli[1] / moduli[0]
}

/// Spectral gap and trial residuals for one reversion rate.
pub fn persistent_approximation(cfg: &PersistentApproxConfig, rho: f64) -> Result<PersistentApproxRow> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput(format!("reversion rate {rho} outside (0, 1]")));
    }
    let pr = primitives(cfg)?;
    let (econ, ys) = build_joint(cfg, &pr, rho)?;
    let q = econ.prices().matrix();
    let pf = power_iteration(q, &PowerIterationOptions::default())?;
    let m_y = 2 * cfg.half_width + 1;
    let interior = |s: usize| {
        let k = (s % m_y) as i64 - cfg.half_width as i64;
        k.unsigned_abs() as usize <= cfg.half_width / 2
    };
    let trials = cfg
        .zeta_offsets
        .iter()
        .map(|off| {
            let zeta = cfg.zeta_true + off;
            let (eta, e) = limit_member(cfg, &pr, zeta)?;
            let v = DVector::from_fn(q.nrows(), |s, _| (zeta * ys[s]).exp() * e[s / m_y]);
            let qv = q * &v;
            let lam = eta.exp();
            let residual = (0..q.nrows())
                .filter(|&s| interior(s))
                .map(|s| (qv[s] / (lam * v[s]) - 1.0).abs())
                .fold(0.0, f64::max);
            Ok(ZetaTrial {
                zeta,
                eta_zeta: eta,
                residual,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PersistentApproxRow {
        rho,
        spectral_gap: spectral_gap(q),
        eta_hat: pf.eigenvalue.ln(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_exponent_is_exact_at_every_rate() {
        let cfg = PersistentApproxConfig::default();
        for rho in [1.0, 1e-2, 1e-4] {
            let row = persistent_approximation(&cfg, rho).unwrap();
            let t = row.trials.iter().find(|t| t.zeta == cfg.zeta_true).unwrap();
            assert!(t.residual < 1e-12, "rho {rho}: {}", t.residual);
            assert!((row.eta_hat + cfg.delta).abs() < 1e-10);
            assert!((t.eta_zeta + cfg.delta).abs() < 1e-12);
        }
    }

    #[test]
    fn other_exponents_become_near_solutions() {
        let cfg = PersistentApproxConfig::default();
        let strong = persistent_approximation(&cfg, 1.0).unwrap();
        let weak = persistent_approximation(&cfg, 1e-4).unwrap();
        let off = |row: &PersistentApproxRow| {
            row.trials
                .iter()
                .filter(|t| t.zeta != cfg.zeta_true)
                .map(|t| t.residual)
                .fold(f64::INFINITY, f64::min)
        };
        assert!(off(&strong) > 1e-3);
        assert!(weak.trials.iter().filter(|t| t.residual < 1e-3).count() > 1);
        assert!(weak.spectral_gap < strong.spectral_gap);
    }

    #[test]
    fn rows_sum_to_one_and_rate_is_checked() {
        let cfg = PersistentApproxConfig::default();
        let (econ, ys) = persistent_economy(&cfg, 0.3).unwrap();
        assert_eq!(ys.len(), 2 * 41);
        for i in 0..econ.n() {
            assert!((econ.transition().matrix().row(i).sum() - 1.0).abs() < 1e-12);
        }
        assert!(persistent_economy(&cfg, 0.0).is_err());
        assert!(persistent_approximation(&cfg, 1.5).is_err());
    }
}
