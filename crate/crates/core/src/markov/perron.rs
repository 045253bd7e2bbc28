use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Settings for [`power_iteration`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIterationOptions {
    /// Required bound on `‖M v − λ v‖∞` relative to `max(1, λ)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
        }
    }
}

/// Dominant eigenpair of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronSolution {
    pub eigenvalue: f64,
    /// Strictly positive, max entry one.
    pub vector: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Power iteration for the Perron root of a primitive nonnegative matrix.
///
/// The iterate stays positive and is rescaled to unit max norm every step.
/// The Collatz–Wielandt ratios `min_i (Mv)_i/v_i ≤ λ ≤ max_i (Mv)_i/v_i`
/// bracket the root; iteration stops once the bracket collapses to rounding
/// level or stops shrinking.
pub fn power_iteration(m: &DMatrix<f64>, opts: &PowerIterationOptions) -> Result<PerronSolution> {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0);
    let mut best_gap = f64::INFINITY;
    let mut stalled = 0usize;
    let mut iterations = 0;
    for k in 1..=opts.max_iter {
        iterations = k;
        let w = m * &v;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = w[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let top = w.max();
        if !(top > 0.0) || !top.is_finite() {
            return Err(Error::NoConvergence {
                what: "power iteration",
                iterations: k,
                residual: f64::NAN,
            });
        }
        v = w / top;
        if v.iter().any(|&x| x <= 0.0) {
            // A zero entry means the matrix is not primitive on this support.
            return Err(Error::NoConvergence {
                what: "power iteration",
                iterations: k,
                residual: f64::NAN,
            });
        }
        let gap = hi - lo;
        if gap <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if gap < best_gap * (1.0 - 1e-3) {
            best_gap = gap;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 500 {
                break;
            }
        }
    }
    let mv = m * &v;
    let eigenvalue = v.dot(&mv) / v.dot(&v);
    let residual = (&mv - &v * eigenvalue).amax();
    if residual > opts.tol * eigenvalue.max(1.0) {
        return Err(Error::NoConvergence {
            what: "power iteration",
            iterations,
            residual,
        });
    }
    Ok(PerronSolution {
        eigenvalue,
        vector: v,
        residual,
        iterations,
    })
}

/// Exact primitivity test on the zero pattern.
///
/// A nonnegative matrix is primitive iff its `(n−1)²+1` power is strictly
/// positive, and every larger power is then positive too, so repeated
/// squaring of the boolean pattern past that bound decides the question.
pub fn is_primitive(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let bound = (n - 1) * (n - 1) + 1;
    let mut b: Vec<bool> = (0..n * n).map(|k| m[(k / n, k % n)] > 0.0).collect();
    let mut power = 1usize;
    while power < bound {
        let mut next = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if b[i * n + k] {
                    for j in 0..n {
                        next[i * n + j] |= b[k * n + j];
                    }
                }
            }
        }
        b = next;
        power *= 2;
    }
    b.iter().all(|&x| x)
}

/// Dominant eigenvalue and right/left eigenvectors of a pricing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronFrobenius {
    pub eta_hat: f64,
    pub e_hat: DVector<f64>,
    pub e_star: DVector<f64>,
    pub residual: f64,
}

pub fn perron_frobenius(prices: &crate::PricingMatrix) -> Result<PerronFrobenius> {
    perron_frobenius_with(prices.matrix(), &PowerIterationOptions::default())
}

pub(crate) fn perron_frobenius_with(
    q: &DMatrix<f64>,
    opts: &PowerIterationOptions,
) -> Result<PerronFrobenius> {
    let right = power_iteration(q, opts)?;
    let left = power_iteration(&q.transpose(), opts)?;
    let e_star = &left.vector / left.vector.sum();
    Ok(PerronFrobenius {
        eta_hat: right.eigenvalue.ln(),
        e_hat: right.vector,
        e_star,
        residual: right.residual,
    })
}

/// A real eigenvector whose entries share one sign.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveEigenCandidate {
    pub eta: f64,
    /// Sign-corrected, max entry one.
    pub vector: DVector<f64>,
    /// Some entry is below `1e-10` in magnitude, so positivity is marginal.
    pub borderline: bool,
}

/// Every real eigenvalue whose eigenvector has a single sign, found by a full
/// dense eigendecomposition. For a primitive matrix the result has exactly
/// one element.
pub fn enumerate_positive_eigen(prices: &crate::PricingMatrix) -> Vec<PositiveEigenCandidate> {
    let q = prices.matrix();
    let n = q.nrows();
    let scale = q.amax().max(f64::MIN_POSITIVE);
    let mut reals: Vec<f64> = q
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * scale)
        .map(|z| z.re)
        .collect();
    reals.sort_by(|a, b| b.total_cmp(a));
    reals.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);

    let mut out = Vec::new();
    for lambda in reals {
        if lambda <= 0.0 {
            continue;
        }
        let shifted = q - DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let Some(v_t) = svd.v_t else { continue };
        let k = svd.singular_values.imin();
        let mut e: DVector<f64> = v_t.row(k).transpose();
        let big = e.amax();
        if big == 0.0 {
            continue;
        }
        e /= big;
        let borderline = e.iter().any(|x| x.abs() < 1e-10);
        let pos = e.iter().filter(|&&x| x >= 1e-10).count();
        let neg = e.iter().filter(|&&x| x <= -1e-10).count();
        if pos > 0 && neg > 0 {
            continue;
        }
        if neg > 0 {
            e = -e;
        }
        let e = &e / e.max();
        out.push(PositiveEigenCandidate {
            eta: lambda.ln(),
            vector: e,
            borderline,
        });
    }
    out
}
