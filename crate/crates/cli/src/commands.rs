//! Subcommand drivers. Each returns its artifacts in memory so output is
//! deterministic and testable; `write_outputs` persists them.

use std::f64::consts::E;
use std::path::Path;

use agelab::diagnostics::{
    classify_initial, comparison_delta_minus, dissipativity_bound, dissipativity_check, eventual_positivity_time,
    fisher_goh_gap, lyapunov_max_increase, lyapunov_series, persistence_floor, positive_equilibrium, tail_amplitude,
    Subdomain,
};
use agelab::spectral::{char_residual, dominant_eigenvalue, hopf_locus, hopf_point, linearization_coefficient};
use agelab::{
    solve_renewal, solve_with_law, total_population, AgeProfile, BirthKernel, BirthLaw, ModelParams, SimConfig,
    Trajectory,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Files produced by a subcommand plus a short stdout summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub files: Vec<(String, String)>,
    pub summary: String,
    pub failed_checks: usize,
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn write_outputs(dir: &Path, out: &Output) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, contents) in &out.files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

struct Run {
    kernel: BirthKernel,
    u0: AgeProfile,
    traj: Trajectory,
}

fn simulate_alpha(cfg: &RunConfig, kernel: &BirthKernel, alpha: f64) -> Result<Run> {
    let u0 = cfg.build_initial(alpha, kernel)?;
    let sim = SimConfig::new(cfg.dt, cfg.horizon, cfg.simulation_age(kernel, &u0))?;
    let params = ModelParams::new(alpha, kernel.clone())?;
    let traj = solve_renewal(&params, &u0, &sim)?;
    Ok(Run {
        kernel: kernel.clone(),
        u0,
        traj,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Output> {
    let alpha = cfg.alpha()?;
    let kernel = cfg.build_kernel()?;
    let run = simulate_alpha(cfg, &kernel, alpha)?;
    let traj = &run.traj;
    let lyap = if alpha > 1.0 {
        lyapunov_series(traj, &run.kernel, alpha.ln())?
    } else {
        vec![None; traj.len()]
    };
    let pop = traj.population()?;
    let rows = (0..traj.len()).map(|i| {
        vec![
            fmt(traj.times[i]),
            fmt(traj.birth[i]),
            fmt(pop[i]),
            lyap[i].map(fmt).unwrap_or_default(),
        ]
    });
    let csv = csv_text(&["t", "b", "U", "V"], rows);
    let summary = json(&serde_json::json!({
        "alpha": alpha,
        "steps": traj.len() - 1,
        "b_final": traj.birth[traj.len() - 1],
        "U_final": pop[pop.len() - 1],
        "subdomain": classify_initial(&run.u0, &kernel).tag,
    }));
    Ok(Output {
        files: vec![("simulate.csv".into(), csv)],
        summary,
        failed_checks: 0,
    })
}

pub fn equilibrium(cfg: &RunConfig) -> Result<Output> {
    let alpha = cfg.alpha()?;
    let kernel = cfg.build_kernel()?;
    let max_age = cfg.max_age.unwrap_or_else(|| {
        let a = 30.0 / cfg.mu;
        let a_star = kernel.reproductive_horizon();
        if a_star.is_finite() {
            a.max(a_star)
        } else {
            a
        }
    });
    let eq = positive_equilibrium(alpha, cfg.mu, cfg.dt, max_age)?;
    let rows = eq
        .profile
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![fmt(eq.profile.age(i)), fmt(*v)]);
    let csv = csv_text(&["a", "u"], rows);
    let summary = json(&serde_json::json!({
        "alpha": alpha,
        "mu": cfg.mu,
        "u_bar0": eq.u_bar0,
        "total_population": total_population(&eq.profile),
        "linearization_coefficient": linearization_coefficient(alpha),
        "global_stability_regime": RunConfig::in_gas_regime(alpha),
    }));
    Ok(Output {
        files: vec![("equilibrium.csv".into(), csv), ("equilibrium.json".into(), summary.clone())],
        summary,
        failed_checks: 0,
    })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Output> {
    let kernel = cfg.build_kernel()?;
    let roots = cfg
        .spectrum_m
        .iter()
        .map(|m| dominant_eigenvalue(*m, &kernel))
        .collect::<agelab::Result<Vec<_>>>()?;
    let csv = csv_text(
        &["m", "lambda"],
        roots.iter().map(|r| vec![fmt(r.multiplier), fmt(r.lambda)]),
    );
    Ok(Output {
        files: vec![("spectrum.csv".into(), csv.clone())],
        summary: csv,
        failed_checks: 0,
    })
}

pub fn hopf(cfg: &RunConfig) -> Result<Output> {
    let shape = cfg.gamma_shape()?;
    let locus = hopf_locus(cfg.hopf_k_max, shape, cfg.mu)?;
    let text = json(&locus);
    let csv = csv_text(
        &["k", "omega", "alpha", "transversality_re"],
        locus.iter().map(|h| {
            vec![
                h.k.to_string(),
                fmt(h.omega),
                fmt(h.alpha),
                fmt(h.transversality_re),
            ]
        }),
    );
    Ok(Output {
        files: vec![("hopf.json".into(), text.clone()), ("hopf.csv".into(), csv)],
        summary: text,
        failed_checks: 0,
    })
}

/// Per-alpha sweep statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub final_error: f64,
    pub tail_amplitude: f64,
    pub persistence_floor: f64,
}

fn sweep_one(cfg: &RunConfig, kernel: &BirthKernel, alpha: f64) -> Result<SweepRow> {
    let run = simulate_alpha(cfg, kernel, alpha)?;
    let target = alpha.ln().max(0.0);
    let fraction = cfg.tol.amplitude_fraction;
    Ok(SweepRow {
        final_error: (run.traj.birth[run.traj.len() - 1] - target).abs(),
        tail_amplitude: tail_amplitude(&run.traj, fraction),
        persistence_floor: persistence_floor(&run.traj, fraction * run.traj.horizon())?,
    })
}

pub fn sweep(cfg: &RunConfig) -> Result<Output> {
    let spec = cfg
        .sweep
        .ok_or_else(|| CliError::validation("sweep.lo", "sweep needs sweep.lo, sweep.hi and sweep.steps"))?;
    let kernel = cfg.build_kernel()?;
    let alphas = spec.values();
    // Runs are independent; collect() keeps sweep order.
    let results: Vec<Result<SweepRow>> = alphas.par_iter().map(|a| sweep_one(cfg, &kernel, *a)).collect();
    let rows = alphas.iter().zip(&results).map(|(a, r)| match r {
        Ok(s) => vec![
            fmt(*a),
            fmt(s.final_error),
            fmt(s.tail_amplitude),
            fmt(s.persistence_floor),
            "ok".into(),
        ],
        Err(e) => vec![fmt(*a), String::new(), String::new(), String::new(), format!("error: {e}")],
    });
    let csv = csv_text(
        &["alpha", "final_error", "tail_amplitude", "persistence_floor", "status"],
        rows,
    );
    let failed = results.iter().filter(|r| r.is_err()).count();
    Ok(Output {
        files: vec![("sweep.csv".into(), csv)],
        summary: format!("{} rows, {failed} failed\n", alphas.len()),
        failed_checks: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check_name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
}

fn at_most(name: &str, measured: f64, threshold: f64) -> Check {
    Check {
        check_name: name.into(),
        pass: measured <= threshold,
        measured,
        threshold,
    }
}

fn at_least(name: &str, measured: f64, threshold: f64) -> Check {
    Check {
        check_name: name.into(),
        pass: measured >= threshold,
        measured,
        threshold,
    }
}

/// Diagnostic battery for the configured run.
pub fn verify_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let alpha = cfg.alpha()?;
    let kernel = cfg.build_kernel()?;
    let run = simulate_alpha(cfg, &kernel, alpha)?;
    let traj = &run.traj;
    let mut checks = Vec::new();

    let weights = kernel.discretize(cfg.dt)?;
    let wsum: f64 = weights.weights().iter().sum();
    checks.push(at_most("kernel_normalization", (wsum - 1.0).abs(), 1e-6));

    let bmax = traj.birth.iter().copied().fold(0.0, f64::max);
    checks.push(at_most("ricker_bound", bmax - alpha / E, 1e-12 * alpha));

    let mass = total_population(&run.u0);
    let cap = dissipativity_bound(alpha, cfg.mu);
    let viol = dissipativity_check(traj, mass, alpha, cfg.mu)?;
    checks.push(at_most("dissipativity", viol / (mass + cap), cfg.tol.dissipativity));

    let sandwich_t = cfg.horizon.min(20.0);
    let sim = SimConfig::new(cfg.dt, sandwich_t, cfg.simulation_age(&kernel, &run.u0))?;
    let delta = comparison_delta_minus(&kernel, alpha, mass);
    let lower = solve_with_law(&kernel, BirthLaw::Linear { multiplier: alpha * delta }, &run.u0, &sim)?;
    let upper = solve_with_law(&kernel, BirthLaw::Linear { multiplier: alpha }, &run.u0, &sim)?;
    let gap = (0..lower.len())
        .map(|i| (lower.birth[i] - traj.birth[i]).max(traj.birth[i] - upper.birth[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(at_most("comparison_sandwich", gap, cfg.tol.sandwich));

    let class = classify_initial(&run.u0, &kernel);
    match class.tag {
        Subdomain::Boundary => {
            checks.push(at_most("boundary_no_births", bmax, 0.0));
            let pop = traj.population()?;
            let drift = traj
                .times
                .iter()
                .zip(pop)
                .map(|(t, u)| {
                    let s = (-cfg.mu * t).exp();
                    if mass > 0.0 {
                        (u / mass - s).abs() / s
                    } else {
                        u.abs()
                    }
                })
                .fold(0.0, f64::max);
            checks.push(at_most("boundary_exponential_decay", drift, 1e-8));
        }
        Subdomain::Interior => {
            let t0 = eventual_positivity_time(traj, 0.0).unwrap_or(f64::INFINITY);
            checks.push(at_most("eventual_positivity_time", t0, traj.horizon()));
        }
    }

    if alpha > 1.0 {
        let eq = alpha.ln();
        checks.push(at_most(
            "equilibrium_fixed_point",
            (alpha * eq * (-eq).exp() - eq).abs(),
            1e-14,
        ));
    }
    if RunConfig::in_gas_regime(alpha) {
        let eq = alpha.ln();
        let grid = 10_000;
        let min_gap = (0..grid)
            .map(|i| fisher_goh_gap(alpha, 10.0 * eq * i as f64 / (grid - 1) as f64))
            .collect::<agelab::Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        checks.push(at_least("fisher_goh_gap_min", min_gap, 0.0));
        if class.tag == Subdomain::Interior {
            let series = lyapunov_series(traj, &kernel, eq)?;
            if let Some(inc) = lyapunov_max_increase(&series, cfg.tol.lyapunov_slack) {
                checks.push(at_most("lyapunov_non_increasing", inc, 0.0));
            }
            let err = (traj.birth[traj.len() - 1] - eq).abs();
            checks.push(at_most("final_birth_error", err, cfg.tol.final_error));
        }
    }
    if let Ok(shape) = cfg.gamma_shape() {
        let hp = hopf_point(0, shape, cfg.mu)?;
        let res = char_residual(Complex64::new(0.0, hp.omega), hp.alpha, &kernel)?.norm();
        checks.push(at_most("hopf0_residual", res, 1e-8));
        checks.push(at_least("hopf0_transversality", hp.transversality_re, f64::MIN_POSITIVE));
    }
    Ok(checks)
}

pub fn verify(cfg: &RunConfig) -> Result<Output> {
    let checks = verify_checks(cfg)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let text = json(&checks);
    let summary: String = checks
        .iter()
        .map(|c| {
            format!(
                "{} {:<28} measured={:.3e} threshold={:.3e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.check_name,
                c.measured,
                c.threshold
            )
        })
        .collect();
    Ok(Output {
        files: vec![("verify.json".into(), text)],
        summary,
        failed_checks: failed,
    })
}
