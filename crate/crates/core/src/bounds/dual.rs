use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::divergence::DivergenceSpec;
use crate::bounds::problem::BoundProblem;
use crate::error::{Error, Result};
use crate::sim::{path_rng, Moments, Sum};

/// Newton settings for the dual problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    /// Stop once every constraint residual is below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Drop the `J ≥ 0` restriction. Only meaningful at `θ = 1`, where the
    /// bound becomes the quadratic variance bound.
    pub unconstrained: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iter: 500,
            unconstrained: false,
        }
    }
}

const UNBOUNDED: f64 = 1e12;

/// Solution of the unconditional bound problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub theta: f64,
    /// Optimal value `λ̄_θ`, taken from the dual objective.
    pub lambda_bar: f64,
    /// Dual multipliers on `(E J = 1, pricing constraints)`.
    pub multipliers: Vec<f64>,
    /// `Σ w J z − b` at the implied primal `J`.
    pub constraint_residuals: Vec<f64>,
    /// `Σ w φ_θ(J)` at the implied primal `J`.
    pub primal_value: f64,
    pub duality_gap: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Implied `J_t` for each observation.
    pub implied_j: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Conj {
    Spec(DivergenceSpec),
    Quadratic,
}

impl Conj {
    fn value(&self, u: f64) -> Option<f64> {
        match self {
            Conj::Spec(s) => s.conjugate(u),
            Conj::Quadratic => Some(0.5 * (u * u + 1.0)),
        }
    }

    fn argmax(&self, u: f64) -> f64 {
        match self {
            Conj::Spec(s) => s.conjugate_argmax(u),
            Conj::Quadratic => u,
        }
    }

    fn curvature(&self, u: f64) -> f64 {
        match self {
            Conj::Spec(s) => s.conjugate_curvature(u),
            Conj::Quadratic => 1.0,
        }
    }

    fn phi(&self, r: f64) -> Result<f64> {
        match self {
            Conj::Spec(s) => s.phi(r),
            Conj::Quadratic => Ok(0.5 * (r * r - 1.0)),
        }
    }

    /// Dual start that makes `J ≡ 1`.
    fn unit_index(&self) -> f64 {
        match self {
            Conj::Spec(s) => s.phi_prime(1.0),
            Conj::Quadratic => 1.0,
        }
    }
}

struct Dual<'a> {
    z: DMatrix<f64>,
    b: DVector<f64>,
    w: &'a DVector<f64>,
    conj: Conj,
}

impl Dual<'_> {
    /// `f(λ) = Σ w φ*(λ·z) − λ·b`, the negated dual objective.
    fn objective(&self, lam: &DVector<f64>) -> Option<f64> {
        let u = &self.z * lam;
        let mut total = Sum::default();
        total.add(-lam.dot(&self.b));
        for (t, &ut) in u.iter().enumerate() {
            if self.w[t] > 0.0 {
                total.add(self.w[t] * self.conj.value(ut)?);
            }
        }
        let v = total.value();
        v.is_finite().then_some(v)
    }

    fn gradient(&self, lam: &DVector<f64>) -> DVector<f64> {
        let u = &self.z * lam;
        let k = self.z.ncols();
        let mut sums = vec![Sum::default(); k];
        for (c, s) in sums.iter_mut().enumerate() {
            s.add(-self.b[c]);
        }
        for (t, &ut) in u.iter().enumerate() {
            let wj = self.w[t] * self.conj.argmax(ut);
            if wj != 0.0 {
                for (c, s) in sums.iter_mut().enumerate() {
                    s.add(wj * self.z[(t, c)]);
                }
            }
        }
        DVector::from_iterator(k, sums.iter().map(Sum::value))
    }

    fn hessian(&self, lam: &DVector<f64>) -> DMatrix<f64> {
        let u = &self.z * lam;
        let mut scaled = self.z.clone();
        for (t, mut row) in scaled.row_iter_mut().enumerate() {
            row *= self.w[t] * self.conj.curvature(u[t]);
        }
        let h = self.z.tr_mul(&scaled);
        (&h + h.transpose()) * 0.5
    }
}

/// Newton step from the pseudo-inverse of the symmetric Hessian, plus
/// steepest descent on its null space. The flag is set when that null space
/// is nontrivial.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> (DVector<f64>, bool) {
    let eig = h.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    if !(top > 0.0) {
        return (-g, true);
    }
    let tol = 1e-12 * top;
    let mut d = DVector::zeros(g.len());
    let mut g_null = g.clone();
    let mut singular = false;
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let c = col.dot(g);
        if ev > tol {
            d -= col * (c / ev);
            g_null -= col * c;
        } else {
            singular = true;
        }
    }
    if singular {
        d -= &g_null;
    }
    if d.iter().all(|v| v.is_finite()) && d.dot(g) < 0.0 {
        (d, singular)
    } else {
        (-g, false)
    }
}

/// `λ̄_θ` with default options.
pub fn unconditional_bound(problem: &BoundProblem, theta: f64) -> Result<BoundResult> {
    unconditional_bound_with(problem, theta, &BoundOptions::default())
}

/// Minimizes `Σ w φ_θ(J)` over `J ≥ 0` subject to `Σ w J = 1` and
/// `Σ w J Y/R∞ = Σ w Q` by damped Newton on the dual.
pub fn unconditional_bound_with(problem: &BoundProblem, theta: f64, opts: &BoundOptions) -> Result<BoundResult> {
    let conj = if opts.unconstrained {
        if theta != 1.0 {
            return Err(Error::InvalidInput(
                "dropping J >= 0 is only supported at theta = 1".into(),
            ));
        }
        Conj::Quadratic
    } else {
        Conj::Spec(DivergenceSpec::new(theta)?)
    };
    match solve_dual(problem, theta, conj, opts) {
        // Flat pieces of the conjugate can stall Newton on an empty
        // constraint set. The entropy dual is smooth, so use it to tell.
        Err(err @ Error::NoConvergence { .. }) if theta != 0.0 && !opts.unconstrained => {
            match solve_dual(problem, 0.0, Conj::Spec(DivergenceSpec::new(0.0)?), opts) {
                Err(inf @ Error::Infeasible { .. }) => Err(inf),
                _ => Err(err),
            }
        }
        other => other,
    }
}

fn solve_dual(problem: &BoundProblem, theta: f64, conj: Conj, opts: &BoundOptions) -> Result<BoundResult> {
    let dual = Dual {
        z: problem.instruments(),
        b: problem.targets(),
        w: &problem.weights,
        conj,
    };
    let k = dual.z.ncols();
    let mut lam = DVector::zeros(k);
    lam[0] = conj.unit_index();
    let start = lam.clone();
    let mut f = dual
        .objective(&lam)
        .ok_or_else(|| Error::InvalidInput("dual start outside the conjugate domain".into()))?;
    let mut g = dual.gradient(&lam);
    let mut iterations = 0;
    let mut converged = g.amax() <= opts.grad_tol;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let (d, singular) = newton_direction(&dual.hessian(&lam), &g);
        let slope = g.dot(&d);
        let mut s = 1.0;
        let mut accepted = None;
        while s > 1e-16 {
            let cand = &lam + &d * s;
            if let Some(fc) = dual.objective(&cand) {
                if fc <= f + 1e-4 * s * slope {
                    let mut best = (cand, fc, None);
                    // Along a flat Hessian direction the objective may be
                    // unbounded; keep doubling while it still falls.
                    if singular && s == 1.0 {
                        let mut t = 2.0;
                        while t < 1e15 {
                            let far = &lam + &d * t;
                            match dual.objective(&far) {
                                Some(ff) if ff <= best.1 + 1e-4 * (t / 2.0) * slope => best = (far, ff, None),
                                _ => break,
                            }
                            t *= 2.0;
                        }
                    }
                    accepted = Some(best);
                    break;
                }
                // Near the optimum f is flat to rounding; accept if the
                // gradient still shrinks.
                if fc <= f + 1e-13 * f.abs().max(1.0) {
                    let gc = dual.gradient(&cand);
                    if gc.amax() < g.amax() {
                        accepted = Some((cand, fc, Some(gc)));
                        break;
                    }
                }
            }
            s *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        lam = cand;
        f = fc;
        g = gc.unwrap_or_else(|| dual.gradient(&lam));
        if f < -UNBOUNDED || lam.amax() > UNBOUNDED {
            let dir = &lam - &start;
            let norm = dir.norm();
            return Err(Error::Infeasible {
                direction: dir.iter().map(|v| v / norm).collect(),
            });
        }
        converged = g.amax() <= opts.grad_tol;
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "dual bound Newton",
            iterations,
            residual: g.amax(),
        });
    }
    let u = &dual.z * &lam;
    let implied_j: Vec<f64> = u.iter().map(|&ut| conj.argmax(ut)).collect();
    let mut primal_value = 0.0;
    for (t, &j) in implied_j.iter().enumerate() {
        if problem.weights[t] > 0.0 {
            primal_value += problem.weights[t] * conj.phi(j)?;
        }
    }
    let lambda_bar = -f;
    Ok(BoundResult {
        theta,
        lambda_bar,
        multipliers: lam.iter().copied().collect(),
        constraint_residuals: g.iter().copied().collect(),
        primal_value,
        duality_gap: (primal_value - lambda_bar).abs(),
        converged,
        iterations,
        implied_j,
    })
}

/// Moving-block bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub replicas: usize,
    /// Block length; `None` picks `⌈T^{1/3}⌉`.
    pub block_len: Option<usize>,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            replicas: 100,
            block_len: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBound {
    pub estimate: BoundResult,
    pub std_error: f64,
    pub replicas: Vec<f64>,
}

/// Bound on a time-series sample with a moving-block bootstrap standard error.
/// Requires equal weights.
pub fn bootstrap_bound(problem: &BoundProblem, theta: f64, opts: &BootstrapOptions) -> Result<BootstrapBound> {
    let t = problem.len();
    let w0 = 1.0 / t as f64;
    if problem.weights.iter().any(|&w| (w - w0).abs() > 1e-15) {
        return Err(Error::InvalidInput("bootstrap needs a uniformly weighted sample".into()));
    }
    if opts.replicas < 2 {
        return Err(Error::InvalidInput("bootstrap needs at least two replicas".into()));
    }
    let estimate = unconditional_bound(problem, theta)?;
    let len = opts
        .block_len
        .unwrap_or_else(|| (t as f64).cbrt().ceil() as usize)
        .clamp(1, t);
    let mut replicas = Vec::with_capacity(opts.replicas);
    let mut mom = Moments::default();
    for r in 0..opts.replicas {
        let mut rng = path_rng(opts.seed, r as u64);
        let mut rows = Vec::with_capacity(t + len);
        while rows.len() < t {
            let s = rng.random_range(0..=t - len);
            rows.extend(s..s + len);
        }
        rows.truncate(t);
        let v = unconditional_bound(&problem.resample(&rows)?, theta)?.lambda_bar;
        mom.push(v);
        replicas.push(v);
    }
    Ok(BootstrapBound {
        estimate,
        std_error: mom.variance().sqrt(),
        replicas,
    })
}
