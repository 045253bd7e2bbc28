use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use recovery_lab::bounds::{
    bootstrap_bound, generate_problem_from_chain, population_discrepancy, unconditional_bound,
    BootstrapBound, BootstrapOptions, BoundProblem, BoundResult, PayoffMenu, SampleMode,
};
use recovery_lab::io::{load_economy, load_lrr_params, load_problem_csv, write_json, write_problem_csv, RecoveryReport};
use recovery_lab::lrr::{
    simulate_paths, solve_lrr, stationary_density, yield_curves, LrrCashFlow, LrrParams, LrrSimConfig,
    LrrSolution, StationaryDensity, Histogram2d,
};
use recovery_lab::markov::{
    ergodicity_check, forward_measure, forward_one_period_limit, persistent_approximation, recover,
    recover_prices, yield_curve_with, CashFlow, PersistentApproxConfig, PersistentApproxRow, YieldMeasure,
};

#[derive(Parser)]
#[command(name = "recovery-lab", version, about = "Recover long-term risk-neutral probabilities from Arrow prices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Perron–Frobenius recovery of a finite-state economy.
    Recover {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Forward measures and their one-period limits across horizons.
    Forward {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Horizon grid `a:b:step` in periods.
        #[arg(long, default_value = "1:20:1")]
        horizons: String,
    },
    /// Unit-payoff yields per state under the physical and recovered measures.
    Yields {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "1:120:1")]
        horizons: String,
    },
    /// Long-run-risk pipeline: stationary densities and yield quartiles.
    Lrr {
        /// Parameter JSON; built-in defaults when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parameter patch `key=value`, repeatable.
        #[arg(long = "override", value_name = "K=V")]
        overrides: Vec<String>,
        /// Yield horizons `a:b:step` in months.
        #[arg(long, default_value = "12:1200:12")]
        horizons: String,
        /// Paths per stationary density.
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Stationary draws used as current states for yields.
        #[arg(long, default_value_t = 4_000)]
        states: usize,
    },
    /// Martingale discrepancy bounds from a CSV problem or an economy JSON.
    Bounds {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Divergence index, repeatable.
        #[arg(long, allow_negative_numbers = true, default_values_t = [-1.0, 0.0, 1.0])]
        theta: Vec<f64>,
        /// Test assets when generating from an economy.
        #[arg(long, value_enum, default_value_t = Menu::BondAndArrow)]
        menu: Menu,
        /// Simulate a path of this length instead of using population weights.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Moving-block bootstrap replicas for sampled problems.
        #[arg(long, default_value_t = 0)]
        bootstrap: usize,
    },
    /// Persistent stationary approximations of an additive process.
    DemoApprox {
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reversion rates, repeatable.
        #[arg(long, default_values_t = [1.0, 1e-1, 1e-2, 1e-3, 1e-4])]
        rho: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Menu {
    Bond,
    Arrow,
    BondAndArrow,
    ManagedArrow,
}

impl From<Menu> for PayoffMenu {
    fn from(m: Menu) -> Self {
        match m {
            Menu::Bond => PayoffMenu::Bond,
            Menu::Arrow => PayoffMenu::Arrow,
            Menu::BondAndArrow => PayoffMenu::BondAndArrow,
            Menu::ManagedArrow => PayoffMenu::ManagedArrow,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let model = e
                .chain()
                .find_map(|c| c.downcast_ref::<recovery_lab::Error>())
                .is_some_and(|le| le.is_model_error());
            ExitCode::from(if model { 2 } else { 1 })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Recover { input, out } => cmd_recover(&input, &out),
        Command::Forward { input, out, horizons } => cmd_forward(&input, &out, &int_grid(&horizons)?),
        Command::Yields { input, out, horizons } => cmd_yields(&input, &out, &int_grid(&horizons)?),
        Command::Lrr {
            input,
            out,
            seed,
            overrides,
            horizons,
            paths,
            states,
        } => {
            let mut params = match input {
                Some(path) => load_lrr_params(&path).with_context(|| format!("reading {}", path.display()))?,
                None => LrrParams::default(),
            };
            for o in &overrides {
                let (k, v) = o
                    .split_once('=')
                    .ok_or_else(|| anyhow!("override '{o}' is not key=value"))?;
                let v: f64 = v.trim().parse().with_context(|| format!("override value in '{o}'"))?;
                params.set(k.trim(), v)?;
            }
            params.validate()?;
            cmd_lrr(&params, &out, seed, &grid(&horizons)?, paths, states)
        }
        Command::Bounds {
            input,
            out,
            theta,
            menu,
            sample,
            seed,
            bootstrap,
        } => cmd_bounds(&input, &out, &theta, menu.into(), sample, seed, bootstrap),
        Command::DemoApprox { out, seed, rho } => cmd_demo(&out, seed, &rho),
    }
}

/// Parses `a:b:step` into `a, a + step, …` up to `b` inclusive.
fn grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("horizons '{spec}' must be a:b:step"))?;
    let [a, b, step] = parts[..] else {
        bail!("horizons '{spec}' must be a:b:step");
    };
    if !(step > 0.0) || !(b >= a) || !(a > 0.0) {
        bail!("horizons '{spec}' need 0 < a ≤ b and step > 0");
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

fn int_grid(spec: &str) -> Result<Vec<usize>> {
    grid(spec)?
        .into_iter()
        .map(|t| {
            if t.fract() == 0.0 {
                Ok(t as usize)
            } else {
                Err(anyhow!("horizon {t} is not a whole number of periods"))
            }
        })
        .collect()
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

#[derive(Serialize)]
struct RecoverOutput {
    #[serde(flatten)]
    recovery: RecoveryReport,
    /// Only present when a transition matrix was supplied.
    ergodic: Option<bool>,
    /// True when the martingale component is trivial.
    recovers_physical: Option<bool>,
}

fn cmd_recover(input: &Path, out: &Path) -> Result<()> {
    let loaded = load_economy(input).with_context(|| format!("reading {}", input.display()))?;
    prepare_out(out)?;
    let rec = match &loaded.economy {
        Some(e) => recover(e)?,
        None => recover_prices(&loaded.prices)?,
    };
    let report = RecoverOutput {
        recovery: RecoveryReport::from(&rec),
        ergodic: loaded.economy.as_ref().map(|e| ergodicity_check(e.transition()).passed()),
        recovers_physical: rec
            .h_increments
            .as_ref()
            .map(|h| h.iter().all(|x| (x - 1.0).abs() < 1e-10)),
    };
    write_json(&out.join("recovery.json"), &report)?;

    let q = loaded.prices.matrix();
    let n = q.nrows();
    let mut w = csv_writer(&out.join("decomposition.csv"))?;
    w.write_record(["from", "to", "price", "p_hat", "growth_factor", "eigen_ratio", "h"])?;
    for i in 0..n {
        for j in 0..n {
            if q[(i, j)] == 0.0 {
                continue;
            }
            // s_ij = exp(η̂) · ê_i/ê_j · ĥ_ij
            let h = rec.h_increments.as_ref().map(|h| h[(i, j)].to_string()).unwrap_or_default();
            w.write_record([
                i.to_string(),
                j.to_string(),
                q[(i, j)].to_string(),
                rec.p_hat.get(i, j).to_string(),
                rec.eta_hat.exp().to_string(),
                (rec.e_hat[i] / rec.e_hat[j]).to_string(),
                h,
            ])?;
        }
    }
    w.flush()?;
    println!("eta_hat = {:.10}", rec.eta_hat);
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.6}", rec.p_hat.get(i, j))).collect();
        println!("p_hat[{i}] = [{}]", row.join(", "));
    }
    if let Some(r) = report.recovers_physical {
        println!("recovered measure equals physical: {r}");
    }
    Ok(())
}

fn cmd_forward(input: &Path, out: &Path, horizons: &[usize]) -> Result<()> {
    let loaded = load_economy(input).with_context(|| format!("reading {}", input.display()))?;
    prepare_out(out)?;
    let rec = recover_prices(&loaded.prices)?;
    let n = loaded.prices.n();
    let mut w = csv_writer(&out.join("forward.csv"))?;
    w.write_record(["horizon", "from", "to", "forward", "one_period_forward", "p_hat"])?;
    let mut s = csv_writer(&out.join("forward_distance.csv"))?;
    s.write_record(["horizon", "sup_distance_to_p_hat"])?;
    for &t in horizons {
        let f = forward_measure(&loaded.prices, t)?;
        // The one-period transition inside a forward measure needs maturity ≥ 2.
        let lim = if t >= 2 { Some(forward_one_period_limit(&loaded.prices, t)?) } else { None };
        for i in 0..n {
            for j in 0..n {
                w.write_record([
                    t.to_string(),
                    i.to_string(),
                    j.to_string(),
                    f.get(i, j).to_string(),
                    lim.as_ref().map(|l| l.get(i, j).to_string()).unwrap_or_default(),
                    rec.p_hat.get(i, j).to_string(),
                ])?;
            }
        }
        if let Some(lim) = &lim {
            let dist = (lim.matrix() - rec.p_hat.matrix()).amax();
            s.write_record([t.to_string(), dist.to_string()])?;
            println!("horizon {t:>5}: sup |F - P_hat| = {dist:.3e}");
        }
    }
    w.flush()?;
    s.flush()?;
    Ok(())
}

fn cmd_yields(input: &Path, out: &Path, horizons: &[usize]) -> Result<()> {
    let loaded = load_economy(input).with_context(|| format!("reading {}", input.display()))?;
    let econ = loaded
        .economy
        .ok_or_else(|| anyhow!("yields need a transition matrix, not prices alone"))?;
    prepare_out(out)?;
    let rec = recover(&econ)?;
    let cf = CashFlow::unit(econ.n());
    let mut w = csv_writer(&out.join("yields.csv"))?;
    w.write_record(["horizon", "state", "measure", "yield"])?;
    for (measure, name) in [
        (YieldMeasure::Physical, "physical"),
        (YieldMeasure::LongTermRiskNeutral, "recovered"),
    ] {
        for pt in yield_curve_with(&econ, &rec, &cf, horizons, measure)? {
            for (x, y) in pt.yields.iter().enumerate() {
                w.write_record([pt.horizon.to_string(), x.to_string(), name.to_string(), y.to_string()])?;
            }
        }
    }
    w.flush()?;
    println!("limit yield -eta_hat = {:.8}", -rec.eta_hat);
    Ok(())
}

fn write_density(path: &Path, name: &str, d: &StationaryDensity) -> Result<()> {
    let h = &d.histogram;
    let mut w = csv_writer(path)?;
    w.write_record(["x1_bin", "x2_bin", "mass", "measure"])?;
    for (i, row) in h.mass.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            w.write_record([
                Histogram2d::bin_center(&h.x1_edges, i).to_string(),
                Histogram2d::bin_center(&h.x2_edges, j).to_string(),
                m.to_string(),
                name.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LrrOutput<'a> {
    params: &'a LrrParams,
    solution: &'a LrrSolution,
    /// Annualized `−η̂`, the long-horizon bond yield.
    limit_yield: f64,
    densities: [(&'static str, &'a StationaryDensity); 3],
}

fn cmd_lrr(p: &LrrParams, out: &Path, seed: u64, horizons: &[f64], paths: usize, states: usize) -> Result<()> {
    let sol = solve_lrr(p)?;
    prepare_out(out)?;
    let cfg = LrrSimConfig {
        n_paths: paths,
        seed,
        ..Default::default()
    };
    let phys = stationary_density(&p.dynamics(), &cfg)?;
    let hat = stationary_density(&sol.p_hat.dynamics(p), &LrrSimConfig { seed: seed + 1, ..cfg })?;
    let rn = stationary_density(&sol.risk_neutral.dynamics(p), &LrrSimConfig { seed: seed + 2, ..cfg })?;
    write_density(&out.join("density_physical.csv"), "physical", &phys)?;
    write_density(&out.join("density_recovered.csv"), "recovered", &hat)?;
    write_density(&out.join("density_risk_neutral.csv"), "risk_neutral", &rn)?;

    // Yields are evaluated at current states drawn from the physical stationary law.
    let d = p.dynamics();
    let draw_cfg = LrrSimConfig {
        n_paths: states.max(2),
        seed: seed + 3,
        ..cfg
    };
    let xs = simulate_paths(&d, &[], d.iota, &[cfg.burn_in], &draw_cfg)?.x;
    for (cf, file) in [
        (LrrCashFlow::Consumption, "yields_consumption.csv"),
        (LrrCashFlow::Bond, "yields_bond.csv"),
    ] {
        let mut w = csv_writer(&out.join(file))?;
        w.write_record(["horizon", "quartile", "measure", "yield"])?;
        for q in yield_curves(p, &sol, cf, horizons, &xs)? {
            for (measure, vals) in [("physical", q.physical), ("recovered", q.recovered)] {
                for (k, v) in [0.25, 0.5, 0.75].iter().zip(vals) {
                    w.write_record([q.horizon.to_string(), k.to_string(), measure.to_string(), v.to_string()])?;
                }
            }
        }
        w.flush()?;
    }
    let limit = -12.0 * sol.pf.eta_hat;
    write_json(
        &out.join("lrr_solution.json"),
        &LrrOutput {
            params: p,
            solution: &sol,
            limit_yield: limit,
            densities: [("physical", &phys), ("recovered", &hat), ("risk_neutral", &rn)],
        },
    )?;
    println!("eta_hat = {:.6e} per month, limit yield {limit:.6} per year", sol.pf.eta_hat);
    println!(
        "mean X2: physical {:.4}, recovered {:.4}, risk neutral {:.4}",
        phys.mean[1], hat.mean[1], rn.mean[1]
    );
    Ok(())
}

#[derive(Serialize)]
struct BoundsOutput {
    observations: usize,
    assets: usize,
    population_discrepancy: Vec<(f64, f64)>,
    results: Vec<BoundResult>,
    bootstrap: Vec<BootstrapBound>,
}

fn cmd_bounds(
    input: &Path,
    out: &Path,
    thetas: &[f64],
    menu: PayoffMenu,
    sample: Option<usize>,
    seed: u64,
    replicas: usize,
) -> Result<()> {
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut pop = Vec::new();
    let problem: BoundProblem = if is_csv {
        load_problem_csv(input).with_context(|| format!("reading {}", input.display()))?
    } else {
        let loaded = load_economy(input).with_context(|| format!("reading {}", input.display()))?;
        let econ = loaded
            .economy
            .ok_or_else(|| anyhow!("bounds need a transition matrix, not prices alone"))?;
        let rec = recover(&econ)?;
        for &th in thetas {
            pop.push((th, population_discrepancy(&econ, &rec, th)?));
        }
        let (mode, horizon) = match sample {
            Some(t) => (SampleMode::Sampled { seed }, t),
            None => (SampleMode::Population, 0),
        };
        generate_problem_from_chain(&econ, &rec, &menu, horizon, mode)?
    };
    prepare_out(out)?;
    if !is_csv {
        write_problem_csv(&problem, fs::File::create(out.join("problem.csv"))?)?;
    }
    let mut results = Vec::new();
    let mut boot = Vec::new();
    for &th in thetas {
        let r = unconditional_bound(&problem, th)?;
        println!("theta {th:>5}: bound {:.8e} (gap {:.1e})", r.lambda_bar, r.duality_gap);
        results.push(r);
        if replicas > 0 {
            let opts = BootstrapOptions {
                replicas,
                seed,
                ..Default::default()
            };
            let b = bootstrap_bound(&problem, th, &opts)?;
            println!("             bootstrap s.e. {:.3e}", b.std_error);
            boot.push(b);
        }
    }
    for (th, v) in &pop {
        println!("theta {th:>5}: population discrepancy {v:.8e}");
    }
    write_json(
        &out.join("bounds.json"),
        &BoundsOutput {
            observations: problem.len(),
            assets: problem.n_assets(),
            population_discrepancy: pop,
            results,
            bootstrap: boot,
        },
    )?;
    Ok(())
}

fn cmd_demo(out: &Path, seed: u64, rhos: &[f64]) -> Result<()> {
    let cfg = PersistentApproxConfig {
        seed,
        ..Default::default()
    };
    let rows: Vec<PersistentApproxRow> = rhos
        .iter()
        .map(|&r| persistent_approximation(&cfg, r))
        .collect::<recovery_lab::Result<_>>()?;
    prepare_out(out)?;
    let mut w = csv_writer(&out.join("demo_approx.csv"))?;
    w.write_record(["rho", "spectral_gap", "zeta", "eta_zeta", "residual"])?;
    for row in &rows {
        println!("rho {:>8.1e}  spectral gap {:.3e}", row.rho, row.spectral_gap);
        for t in &row.trials {
            println!("    zeta {:>5.2}  residual {:.3e}", t.zeta, t.residual);
            w.write_record([
                row.rho.to_string(),
                row.spectral_gap.to_string(),
                t.zeta.to_string(),
                t.eta_zeta.to_string(),
                t.residual.to_string(),
            ])?;
        }
    }
    w.flush()?;
    write_json(&out.join("demo_approx.json"), &(&cfg, &rows))?;
    Ok(())
}
