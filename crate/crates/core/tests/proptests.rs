mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use recovery_lab::bounds::*;
use recovery_lab::lrr::{affine_coefficients, AffineFunctional, LrrParams};
use recovery_lab::markov::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn ross_economies_are_recovered(seed in any::<u64>(), n in 2usize..8) {
        let mut g = rng(seed);
        let (econ, delta, m) = ross_economy(&mut g, n);
        let rec = recover(&econ).unwrap();
        prop_assert!(max_abs_diff(rec.p_hat.matrix(), econ.transition().matrix()) <= 1e-10);
        prop_assert!((rec.eta_hat + delta).abs() < 1e-10);
        let ratio = rec.e_hat[0] * m[0];
        for i in 0..n {
            prop_assert!((rec.e_hat[i] * m[i] / ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn recovered_measure_is_a_martingale_change(seed in any::<u64>(), n in 2usize..8) {
        let mut g = rng(seed);
        let econ = random_economy(&mut g, n);
        let rec = recover(&econ).unwrap();
        let p = econ.transition().matrix();
        let h = rec.h_increments.unwrap();
        for i in 0..n {
            prop_assert!((rec.p_hat.matrix().row(i).sum() - 1.0).abs() < 1e-12);
            let m: f64 = (0..n).map(|j| p[(i, j)] * h[(i, j)]).sum();
            prop_assert!((m - 1.0).abs() < 1e-12);
        }
        prop_assert!(rec.e_hat.iter().all(|e| *e > 0.0));
        let q = econ.prices().matrix();
        prop_assert!((q * &rec.e_hat - &rec.e_hat * rec.eta_hat.exp()).amax() <= 1e-10);
    }

    #[test]
    fn decomposition_multiplies_back(seed in any::<u64>(), n in 2usize..6, len in 1usize..30) {
        let mut g = rng(seed);
        let econ = random_economy(&mut g, n);
        let path: Vec<usize> = (0..=len).map(|_| g.random_range(0..n)).collect();
        let d = sdf_decomposition(&econ, &path).unwrap();
        prop_assert!((d.product() / d.sdf - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_return_bound_holds(seed in any::<u64>(), n in 2usize..8) {
        let mut g = rng(seed);
        let econ = random_economy(&mut g, n);
        let chk = log_return_bound_check(&econ).unwrap();
        prop_assert!(chk.slack.iter().all(|s| *s >= -1e-12));
    }

    #[test]
    fn one_positive_eigenvector(seed in any::<u64>(), n in 2usize..8) {
        let mut g = rng(seed);
        let econ = random_economy(&mut g, n);
        let cands = enumerate_positive_eigen(econ.prices());
        prop_assert_eq!(cands.len(), 1);
        let sol = power_iteration(econ.prices().matrix(), &PowerIterationOptions::default()).unwrap();
        prop_assert!((cands[0].eta - sol.eigenvalue.ln()).abs() < 1e-9);
    }

    #[test]
    fn recovery_is_horizon_invariant(seed in any::<u64>(), n in 2usize..6, t in 2usize..8) {
        let mut g = rng(seed);
        let econ = random_economy(&mut g, n);
        let rec = recover(&econ).unwrap();
        let qt = econ.prices().power(t).unwrap();
        let rec_t = recover_prices(&qt).unwrap();
        prop_assert!(max_abs_diff(rec_t.p_hat.matrix(), &rec.p_hat.power(t)) < 1e-10);
        prop_assert!((rec_t.eta_hat - t as f64 * rec.eta_hat).abs() < 1e-10);
    }

    #[test]
    fn conjugate_dominates_linear_minus_phi(theta in -3.0f64..3.0, r in 0.01f64..5.0, u in -5.0f64..5.0) {
        let d = DivergenceSpec::new(theta).unwrap();
        if let Some(c) = d.conjugate(u) {
            prop_assert!(c + 1e-9 >= u * r - d.phi(r).unwrap());
        }
    }

    #[test]
    fn divergence_of_unit_mean_is_nonnegative(theta in -2.0f64..2.0, js in prop::collection::vec(0.05f64..4.0, 2..12)) {
        let mean = js.iter().sum::<f64>() / js.len() as f64;
        let d = DivergenceSpec::new(theta).unwrap();
        let e: f64 = js.iter().map(|j| d.phi(j / mean).unwrap()).sum::<f64>() / js.len() as f64;
        prop_assert!(e >= -1e-12);
    }

    #[test]
    fn value_martingales_have_unit_expectation(a in prop::array::uniform3(-0.5f64..0.5), t in 0.5f64..240.0) {
        let d = LrrParams::default().dynamics();
        let h = AffineFunctional::martingale(a, &d.iota);
        let c = affine_coefficients(&h, &d, &[t]).unwrap();
        prop_assert!(c.theta[0].iter().all(|x| x.abs() < 1e-9));
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn bounds_are_ordered(seed in any::<u64>(), n in 2usize..5, theta in prop::sample::select(vec![-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])) {
        let mut g = rng(seed);
        let p = random_transition(&mut g, n);
        let s = random_sdf(&mut g, n, 0.2);
        let econ = build_economy(p, s).unwrap();
        let rec = recover(&econ).unwrap();
        let pop = population_discrepancy(&econ, &rec, theta).unwrap();
        let mut last = 0.0;
        for menu in [PayoffMenu::Bond, PayoffMenu::BondAndArrow, PayoffMenu::ManagedArrow] {
            let prob = generate_problem_from_chain(&econ, &rec, &menu, 0, SampleMode::Population).unwrap();
            let r = unconditional_bound(&prob, theta).unwrap();
            prop_assert!(r.lambda_bar >= -1e-12);
            prop_assert!(r.lambda_bar >= last - 1e-10);
            prop_assert!(r.lambda_bar <= pop + 1e-10);
            prop_assert!(r.duality_gap <= 1e-8);
            last = r.lambda_bar;
        }
        prop_assert!((last - pop).abs() <= 1e-9 * pop.max(1.0));
    }

    #[test]
    fn kazemi_vanishes_without_martingale(seed in any::<u64>(), n in 2usize..7) {
        let mut g = rng(seed);
        let (econ, _, _) = ross_economy(&mut g, n);
        let rec = recover(&econ).unwrap();
        let prob = generate_problem_from_chain(&econ, &rec, &PayoffMenu::BondAndArrow, 0, SampleMode::Population).unwrap();
        prop_assert!(kazemi_test(&prob).amax() < 1e-12);
    }

    #[test]
    fn forward_measures_converge(seed in any::<u64>(), n in 2usize..6) {
        let mut g = rng(seed);
        let econ = random_economy(&mut g, n);
        let rec = recover(&econ).unwrap();
        let f = forward_one_period_limit(econ.prices(), 200).unwrap();
        prop_assert!(max_abs_diff(f.matrix(), rec.p_hat.matrix()) <= 1e-8);
    }

    #[test]
    fn change_of_measure_keeps_prices(seed in any::<u64>(), n in 2usize..6) {
        let mut g = rng(seed);
        let econ = random_economy(&mut g, n);
        let rec = recover(&econ).unwrap();
        let alt = change_of_measure(&econ, &rec.h_increments.unwrap()).unwrap();
        prop_assert!(max_abs_diff(alt.prices().matrix(), econ.prices().matrix()) < 1e-14);
        prop_assert!(max_abs_diff(alt.transition().matrix(), rec.p_hat.matrix()) < 1e-12);
        let ones = DMatrix::from_element(n, n, 1.0);
        prop_assert!(max_abs_diff(&recover(&alt).unwrap().h_increments.unwrap(), &ones) < 1e-10);
    }
}
