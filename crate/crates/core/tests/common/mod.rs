#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recovery_lab::markov::{build_economy, MarkovPricingEconomy, SdfMatrix, StochasticMatrix};
use recovery_lab::preferences::{
    power_sdf, recursive_sdf, solve_continuation_value, PowerUtilitySpec, RecursiveUtilitySpec,
    ValueFunction,
};

pub fn two_state_p() -> StochasticMatrix {
    StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
}

pub fn power_spec() -> PowerUtilitySpec {
    PowerUtilitySpec {
        delta: 0.02,
        gamma: 2.0,
        g_c: 0.0,
        c: vec![1.0, 2.0],
    }
}

pub fn power_economy() -> MarkovPricingEconomy {
    build_economy(two_state_p(), power_sdf(&power_spec()).unwrap()).unwrap()
}

pub fn recursive_spec(gamma: f64) -> RecursiveUtilitySpec {
    RecursiveUtilitySpec {
        delta: 0.02,
        gamma,
        g_c: 0.0,
        c: vec![1.0, 2.0],
    }
}

pub fn recursive_economy(gamma: f64) -> (MarkovPricingEconomy, ValueFunction) {
    let p = two_state_p();
    let spec = recursive_spec(gamma);
    let v = solve_continuation_value(&spec, &p).unwrap();
    let s = recursive_sdf(&spec, &p, &v).unwrap();
    (build_economy(p, s).unwrap(), v)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random transition with entries bounded away from zero.
pub fn random_transition(rng: &mut impl Rng, n: usize) -> StochasticMatrix {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.05..1.0));
    StochasticMatrix::from_unnormalized(raw).unwrap()
}

/// Random positive SDF with log entries in ±spread around −0.02.
pub fn random_sdf(rng: &mut impl Rng, n: usize, spread: f64) -> SdfMatrix {
    SdfMatrix::new(DMatrix::from_fn(n, n, |_, _| {
        (-0.02 + rng.random_range(-spread..spread)).exp()
    }))
    .unwrap()
}

pub fn random_economy(rng: &mut impl Rng, n: usize) -> MarkovPricingEconomy {
    let p = random_transition(rng, n);
    let s = random_sdf(rng, n, 0.3);
    build_economy(p, s).unwrap()
}

/// Economy whose SDF has the Ross form `exp(−δ) m_j / m_i`.
pub fn ross_economy(rng: &mut impl Rng, n: usize) -> (MarkovPricingEconomy, f64, DVector<f64>) {
    let p = random_transition(rng, n);
    let delta: f64 = rng.random_range(0.0..0.1);
    let m = DVector::from_fn(n, |_, _| rng.random_range(0.2..5.0));
    let s = SdfMatrix::new(DMatrix::from_fn(n, n, |i, j| (-delta).exp() * m[j] / m[i])).unwrap();
    (build_economy(p, s).unwrap(), delta, m)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Dominant eigenvalue by the dense complex spectrum.
pub fn spectral_radius(q: &DMatrix<f64>) -> f64 {
    q.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Dominant right eigenvector by repeated squaring of `q / ρ`, max entry one.
pub fn squaring_eigenvector(q: &DMatrix<f64>) -> DVector<f64> {
    let rho = spectral_radius(q);
    let mut m = q / rho;
    for _ in 0..12 {
        m = &m * &m;
        m /= m.amax();
    }
    let v = m * DVector::from_element(q.nrows(), 1.0);
    &v / v.amax()
}
