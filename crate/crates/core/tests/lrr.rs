use recovery_lab::lrr::*;
use recovery_lab::Error;

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn with(overrides: &[(&str, f64)]) -> LrrParams {
    let mut p = LrrParams::default();
    for (k, v) in overrides {
        p.set(k, *v).unwrap();
    }
    p
}

#[test]
fn growth_loading_of_value() {
    let p = LrrParams::default();
    let v = solve_value_function(&p).unwrap();
    assert!((v.v1 - 1.0 / 0.023).abs() < 1e-10);
    assert!((v.v1 - 43.4783).abs() < 1e-4);
    assert!(v.discriminant > 0.0);
    assert!(value_residuals(&p, &v).iter().all(|r| r.abs() <= 1e-12));
}

#[test]
fn log_utility_value_is_linear() {
    let p = with(&[("gamma", 1.0), ("mu_12", 0.0004), ("beta_c_2", -0.0002)]);
    let v = solve_value_function(&p).unwrap();
    let v1 = p.beta_c[1] / (p.delta - p.mu_11);
    let v2 = -(p.beta_c[2] + p.mu_12 * v1) / (p.mu_22 - p.delta);
    assert!((v.v2 - v2).abs() < 1e-14);
    assert_eq!(value_martingale_loading(&p, &v), [0.0; 3]);
    let s = sdf_coefficients(&p, &v);
    assert_eq!(s.alpha, [-p.alpha_c[0], -p.alpha_c[1], -p.alpha_c[2]]);
    assert!((s.beta_0 + p.delta + p.beta_c[0]).abs() < 1e-15);
}

#[test]
fn value_root_is_continuous_near_log_utility() {
    let v_at = |g: f64| solve_value_function(&with(&[("gamma", g), ("beta_c_2", -0.0002)])).unwrap().v2;
    let v1 = v_at(1.0);
    assert!((v_at(1.0 + 1e-9) - v1).abs() < 1e-6);
    assert!((v_at(1.0 - 1e-9) - v1).abs() < 1e-6);
}

#[test]
fn existence_boundary_in_risk_aversion() {
    let disc = |g: f64| value_discriminant(&with(&[("gamma", g)]));
    let mut hi = 10.0;
    while disc(hi) >= 0.0 {
        hi *= 2.0;
        assert!(hi < 1e7, "no boundary found");
    }
    let mut lo = 10.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if disc(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    assert!(disc(lo).abs() < 1e-8, "D = {}", disc(lo));
    match solve_value_function(&with(&[("gamma", hi * 1.01)])) {
        Err(Error::NoValueFunction { discriminant, gamma }) => {
            assert!(discriminant < 0.0);
            assert!((gamma - hi * 1.01).abs() < 1e-9);
        }
        other => panic!("{other:?}"),
    }
    assert!(solve_value_function(&with(&[("gamma", lo * 0.99)])).is_ok());
}

#[test]
fn sdf_loadings_by_hand() {
    let p = LrrParams::default();
    let v = solve_value_function(&p).unwrap();
    let s = sdf_coefficients(&p, &v);
    let g = 1.0 - p.gamma;
    let mut a_star = [0.0; 3];
    for i in 0..3 {
        a_star[i] = g * (p.alpha_c[i] + p.sigma_1[i] * v.v1 + p.sigma_2[i] * v.v2);
        let expect = -p.alpha_c[i] + a_star[i];
        assert!((s.alpha[i] - expect).abs() < 1e-15);
    }
    let half = 0.5 * dot(&a_star, &a_star);
    assert!((s.beta_11 + p.beta_c[1]).abs() < 1e-15);
    assert!((s.beta_12 + p.beta_c[2] + half).abs() < 1e-15);
    assert!((s.beta_0 + p.delta + p.beta_c[0] + half * p.iota[1]).abs() < 1e-15);
}

/// Both roots of the eigen-quadratic, recomputed from the raw parameters.
fn eigen_roots(p: &LrrParams, s: &AffineFunctional) -> (f64, [f64; 2]) {
    let e1 = -s.beta_11 / p.mu_11;
    let a = 0.5 * dot(&p.sigma_2, &p.sigma_2);
    let b = p.mu_22 + dot(&p.sigma_2, &s.alpha) + e1 * dot(&p.sigma_1, &p.sigma_2);
    let c = s.beta_12 + 0.5 * dot(&s.alpha, &s.alpha) + e1 * (p.mu_12 + dot(&p.sigma_1, &s.alpha))
        + 0.5 * e1 * e1 * dot(&p.sigma_1, &p.sigma_1);
    let d = (b * b - 4.0 * a * c).sqrt();
    (e1, [(-b - d) / (2.0 * a), (-b + d) / (2.0 * a)])
}

#[test]
fn eigen_solution_picks_smaller_eigenvalue() {
    let p = LrrParams::default();
    let sol = solve_lrr(&p).unwrap();
    let (e1, roots) = eigen_roots(&p, &sol.sdf);
    assert!((sol.pf.e1 - e1).abs() < 1e-12 * e1.abs());
    assert!((e1 + 47.619).abs() < 1e-3);
    let eta = |e2: f64| {
        let s = &sol.sdf;
        s.beta_0 - s.beta_11 * p.iota[0] - s.beta_12 * p.iota[1]
            - e1 * (p.mu_11 * p.iota[0] + p.mu_12 * p.iota[1])
            - e2 * p.mu_22 * p.iota[1]
    };
    let (lo, hi) = if eta(roots[0]) < eta(roots[1]) {
        (roots[0], roots[1])
    } else {
        (roots[1], roots[0])
    };
    assert!((sol.pf.e2 - lo).abs() < 1e-9 * lo.abs().max(1.0));
    assert!((sol.pf.rejected.e2 - hi).abs() < 1e-9 * hi.abs().max(1.0));
    assert!((sol.pf.eta_hat - eta(lo)).abs() < 1e-14);
    assert!(sol.pf.eta_hat < sol.pf.rejected.eta);
    assert!(sol.p_hat.mu_hat_22 < 0.0);
    assert!(sol.pf.rejected.mu_22 > 0.0);
    let r = pf_residuals(&p.dynamics(), &sol.sdf, sol.pf.eta_hat, sol.pf.e1, sol.pf.e2);
    assert!(r.iter().all(|x| x.abs() <= 1e-12));
    for i in 0..3 {
        let expect = sol.sdf.alpha[i] + p.sigma_1[i] * e1 + p.sigma_2[i] * sol.pf.e2;
        assert!((sol.pf.alpha_h[i] - expect).abs() < 1e-14);
    }
}

#[test]
fn state_independent_sdf_has_flat_eigenfunction() {
    let p = LrrParams::default();
    let s = AffineFunctional {
        beta_0: -0.003,
        ..AffineFunctional::zero()
    };
    let pf = solve_pf(&p, &s).unwrap();
    assert_eq!((pf.e1, pf.e2), (0.0, 0.0));
    assert!((pf.eta_hat + 0.003).abs() < 1e-15);
    let cm = changed_measure(&p, &pf).unwrap();
    assert_eq!(cm.dynamics(&p), p.dynamics());
}

#[test]
fn recovered_measure_raises_volatility() {
    let p = LrrParams::default();
    let sol = solve_lrr(&p).unwrap();
    let cm = &sol.p_hat;
    assert_eq!(cm.mu_hat_11, p.mu_11);
    assert!((cm.mu_hat_12 - (p.mu_12 + dot(&p.sigma_1, &sol.pf.alpha_h))).abs() < 1e-16);
    assert!((cm.mu_hat_22 - (p.mu_22 + dot(&p.sigma_2, &sol.pf.alpha_h))).abs() < 1e-16);
    let iota2 = p.mu_22 / cm.mu_hat_22 * p.iota[1];
    assert!((cm.iota_hat[1] - iota2).abs() < 1e-14);
    assert!(cm.iota_hat[1] > 1.0);
    // ι̂₁ keeps the X₁ drift centered: μ₁₁(x₁ − ι₁) + μ₁₂(x₂ − ι₂) matches
    // μ̂₁₁(x₁ − ι̂₁) + μ̂₁₂(x₂ − ι̂₂) + σ₁·α̂ x₂ for every x.
    for x in [[0.0, 1.0], [0.01, 0.5], [-0.003, 2.0]] {
        let old = p.mu_11 * (x[0] - p.iota[0]) + p.mu_12 * (x[1] - p.iota[1])
            + dot(&p.sigma_1, &sol.pf.alpha_h) * x[1];
        let new = cm.mu_hat_11 * (x[0] - cm.iota_hat[0]) + cm.mu_hat_12 * (x[1] - cm.iota_hat[1]);
        assert!((old - new).abs() < 1e-15);
    }
    assert!(cm.iota_hat[0] < 0.0);
    assert!(sol.risk_neutral.iota_hat[1] > 1.0);
}

#[test]
fn deterministic_submodel_closed_form() {
    let d = StateDynamics {
        mu_11: -0.05,
        mu_12: 0.002,
        mu_22: -0.02,
        iota: [0.001, 1.2],
        sigma_1: [0.0; 3],
        sigma_2: [0.0; 3],
    };
    let f = AffineFunctional {
        beta_0: 0.003,
        beta_11: 0.8,
        beta_12: -0.01,
        alpha: [0.0; 3],
    };
    let horizons = [1.0, 12.0, 120.0, 600.0];
    let c = affine_coefficients(&f, &d, &horizons).unwrap();
    let e = |mu: f64, t: f64| ((mu * t).exp() - 1.0) / mu;
    let a = f.beta_11 / d.mu_11;
    let c1 = (f.beta_12 - d.mu_12 * a) / d.mu_22;
    let c2 = d.mu_12 * a / (d.mu_11 - d.mu_22);
    let k0 = f.beta_0 - f.beta_11 * d.iota[0] - f.beta_12 * d.iota[1];
    let k1 = d.mu_11 * d.iota[0] + d.mu_12 * d.iota[1];
    let k2 = d.mu_22 * d.iota[1];
    for (k, &t) in horizons.iter().enumerate() {
        let th1 = a * ((d.mu_11 * t).exp() - 1.0);
        let th2 = c1 * ((d.mu_22 * t).exp() - 1.0) + c2 * ((d.mu_11 * t).exp() - (d.mu_22 * t).exp());
        let int1 = a * (e(d.mu_11, t) - t);
        let int2 = c1 * (e(d.mu_22, t) - t) + c2 * (e(d.mu_11, t) - e(d.mu_22, t));
        let th0 = k0 * t - k1 * int1 - k2 * int2;
        let got = c.theta[k];
        assert!((got[1] - th1).abs() < 1e-10, "t={t}");
        assert!((got[2] - th2).abs() < 1e-10, "t={t}");
        assert!((got[0] - th0).abs() < 1e-10, "t={t}: {} vs {th0}", got[0]);
    }
}

#[test]
fn affine_expectations_match_simulation() {
    let p = LrrParams::default();
    let sol = solve_lrr(&p).unwrap();
    let d = p.dynamics();
    let h_star = AffineFunctional::martingale(value_martingale_loading(&p, &sol.value), &p.iota);
    let fs = [sol.sdf, p.consumption(), h_star];
    let checkpoints = [1.0, 12.0];
    let cfg = LrrSimConfig {
        dt: 0.1,
        n_paths: 20_000,
        burn_in: 0.0,
        seed: 11,
    };
    let x0 = [0.0015, 1.1];
    let ens = simulate_paths(&d, &fs, x0, &checkpoints, &cfg).unwrap();
    for (k, f) in fs.iter().enumerate() {
        let coeffs = affine_coefficients(f, &d, &checkpoints).unwrap();
        for c in 0..checkpoints.len() {
            let m = &ens.moments[c][k];
            let z = (m.mean() - coeffs.expectation(c, x0)) / m.std_error();
            assert!(z.abs() < 3.0, "functional {k}, t = {}: z = {z}", checkpoints[c]);
        }
    }
    // The value martingale has unit expectation.
    let m = &ens.moments[1][2];
    assert!(((m.mean() - 1.0) / m.std_error()).abs() < 3.0);
}

#[test]
fn decomposition_holds_pathwise() {
    let p = LrrParams::default();
    let sol = solve_lrr(&p).unwrap();
    let h_hat = AffineFunctional::martingale(sol.pf.alpha_h, &p.iota);
    let cfg = LrrSimConfig {
        dt: 0.1,
        n_paths: 200,
        burn_in: 0.0,
        seed: 4,
    };
    let x0 = [0.0, 1.0];
    let t = 120.0;
    let ens = simulate_paths(&p.dynamics(), &[sol.sdf, h_hat], x0, &[t], &cfg).unwrap();
    for path in 0..cfg.n_paths {
        let x = ens.x[path];
        let rhs = sol.pf.eta_hat * t + sol.pf.log_eigenfunction(x0) - sol.pf.log_eigenfunction(x)
            + ens.log_m[1][path];
        assert!((ens.log_m[0][path] - rhs).abs() < 1e-9, "path {path}");
    }
}

#[test]
fn flat_sdf_gives_identical_curves() {
    let p = LrrParams::default();
    let sdf = AffineFunctional {
        beta_0: -0.002,
        ..AffineFunctional::zero()
    };
    let pf = solve_pf(&p, &sdf).unwrap();
    let sol = LrrSolution {
        value: solve_value_function(&p).unwrap(),
        sdf,
        pf,
        p_hat: changed_measure(&p, &pf).unwrap(),
        risk_neutral: risk_neutral_measure(&p, &sdf).unwrap(),
    };
    let states = [[0.0, 1.0], [0.001, 0.8], [-0.002, 1.3]];
    for cf in [LrrCashFlow::Consumption, LrrCashFlow::Bond] {
        for q in yield_curves(&p, &sol, cf, &[1.0, 60.0, 600.0], &states).unwrap() {
            for k in 0..3 {
                assert!((q.physical[k] - q.recovered[k]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn recovered_consumption_yields_are_lower() {
    let p = LrrParams::default();
    let sol = solve_lrr(&p).unwrap();
    let states = [[0.0, 1.0], [0.001, 0.8], [-0.001, 1.2], [0.002, 1.4], [-0.0015, 0.7]];
    let horizons: Vec<f64> = (1..=10).map(|k| 120.0 * k as f64).chain([1.0, 12.0]).collect();
    for q in yield_curves(&p, &sol, LrrCashFlow::Consumption, &horizons, &states).unwrap() {
        assert!(q.recovered[1] <= q.physical[1], "t = {}", q.horizon);
    }
    // A unit payoff has the same expectation under either measure.
    for q in yield_curves(&p, &sol, LrrCashFlow::Bond, &horizons, &states).unwrap() {
        assert_eq!(q.physical, q.recovered);
    }
}

#[test]
fn bond_yield_offset_decays_like_one_over_t() {
    let p = LrrParams::default();
    let sol = solve_lrr(&p).unwrap();
    let x = [0.0, 1.0];
    let horizons = [1200.0, 2400.0, 4800.0];
    let c = YieldCoefficients::new(&p, &sol, LrrCashFlow::Bond, &horizons).unwrap();
    let gaps: Vec<f64> = (0..3).map(|k| c.yields(k, x).0 + MONTHS * sol.pf.eta_hat).collect();
    assert!((gaps[0] / gaps[1] - 2.0).abs() < 0.01, "{gaps:?}");
    assert!((gaps[1] / gaps[2] - 2.0).abs() < 0.01, "{gaps:?}");
}

#[test]
fn stationary_density_moments() {
    let p = LrrParams::default();
    let sol = solve_lrr(&p).unwrap();
    let cfg = LrrSimConfig {
        n_paths: 4_000,
        ..Default::default()
    };
    let phys = stationary_density(&p.dynamics(), &cfg).unwrap();
    let (m2, v2) = p.dynamics().x2_moments();
    assert!((v2 - 0.038f64.powi(2) / 0.026).abs() < 1e-15);
    assert!((phys.mean[1] - m2).abs() < 3.0 * phys.mean_se[1]);
    assert!((phys.covariance[1][1] - v2).abs() < 3.0 * phys.var_x2_se);
    let total: f64 = phys.histogram.mass.iter().flatten().sum();
    assert!(total > 0.99 && total <= 1.0 + 1e-12);

    let hat = stationary_density(&sol.p_hat.dynamics(&p), &cfg).unwrap();
    assert!((hat.mean[1] - sol.p_hat.iota_hat[1]).abs() < 3.0 * hat.mean_se[1]);
    assert!(hat.mean[0] < phys.mean[0]);
    assert!(hat.mean[1] > phys.mean[1]);
    assert!(hat.correlation < 0.0);
}

#[test]
fn explosive_dynamics_are_rejected() {
    let mut d = LrrParams::default().dynamics();
    d.mu_22 = 0.01;
    assert!(stationary_density(&d, &LrrSimConfig::default()).is_err());
    assert!(solve_lrr(&with(&[("mu_22", 0.01)])).is_err());
}
