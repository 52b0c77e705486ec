//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::{E, PI};

use agelab::diagnostics::{
    dissipativity_bound, dissipativity_check, fisher_goh_gap, lyapunov_max_increase, lyapunov_series,
    positive_equilibrium, tail_amplitude,
};
use agelab::renewal::ricker_orbit;
use agelab::roots::bisect;
use agelab::spectral::{
    adjoint_moment, char_residual, dominant_eigenvalue, hopf_locus, hopf_phase_residual, hopf_point,
    linearization_coefficient,
};
use agelab::{
    make_shifted_gamma, solve_renewal, solve_with_law, total_population, AgeProfile, BirthKernel, BirthLaw,
    GammaShape, ModelParams, SimConfig, Trajectory,
};
use num_complex::Complex64;

const OMEGA0_ORACLE: f64 = 2.028757838110434;
const ALPHA0_ORACLE: f64 = 26.097155771399833;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(id: &str, name: &str, run: impl FnOnce() -> Outcome, failures: &mut Vec<String>) {
    let o = run();
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id} {name}: {}", o.detail);
    if !o.pass {
        failures.push(id.to_string());
    }
}

fn bump(a: f64, height: f64) -> f64 {
    let z = (a - 2.0) / 1.5;
    if z.abs() < 1.0 {
        height * (1.0 - z * z).powi(2)
    } else {
        0.0
    }
}

fn initial(kind: &str, alpha: f64, mu: f64, dt: f64, max_age: f64) -> AgeProfile {
    let eq = alpha.ln();
    match kind {
        "0.5ubar" => AgeProfile::from_fn(dt, max_age, |a| 0.5 * eq * (-mu * a).exp()),
        "2ubar" => AgeProfile::from_fn(dt, max_age, |a| 2.0 * eq * (-mu * a).exp()),
        "1.05ubar" => AgeProfile::from_fn(dt, max_age, |a| 1.05 * eq * (-mu * a).exp()),
        _ => AgeProfile::from_fn(dt, max_age, |a| bump(a, 2.0 * eq)),
    }
    .unwrap()
}

fn run(alpha: f64, kernel: &BirthKernel, u0: &AgeProfile, dt: f64, horizon: f64) -> Trajectory {
    let params = ModelParams::new(alpha, kernel.clone()).unwrap();
    let config = SimConfig::with_default_age(dt, horizon, kernel, u0).unwrap();
    solve_renewal(&params, u0, &config).unwrap()
}

struct GasCase {
    label: String,
    alpha: f64,
    kernel: BirthKernel,
    u0: AgeProfile,
    traj: Trajectory,
}

fn gas_cases() -> Vec<GasCase> {
    let mut out = Vec::new();
    for alpha in [1.5, E, 0.99 * E * E] {
        for (tau, kappa, n) in [(1.0, 1.0, 2), (0.5, 2.0, 0)] {
            let kernel = make_shifted_gamma(tau, kappa, n, 1.0).unwrap();
            for kind in ["0.5ubar", "2ubar", "bump"] {
                let u0 = initial(kind, alpha, 1.0, 0.01, 30.0);
                let traj = run(alpha, &kernel, &u0, 0.01, 200.0);
                out.push(GasCase {
                    label: format!("alpha={alpha:.4} kernel=({tau},{kappa},{n}) u0={kind}"),
                    alpha,
                    kernel: kernel.clone(),
                    u0,
                    traj,
                });
            }
        }
    }
    out
}

fn c1() -> Outcome {
    let mut worst_eq = 0.0f64;
    let mut worst_fix = 0.0f64;
    for alpha in [1.5, E, E * E, 5.0] {
        let eq = positive_equilibrium(alpha, 1.0, 0.01, 10.0).unwrap();
        worst_eq = worst_eq.max((eq.u_bar0 - alpha.ln()).abs());
        let u = eq.profile.values[0];
        worst_fix = worst_fix.max((alpha * u * (-u).exp() - u).abs());
    }
    outcome(
        worst_eq == 0.0 && worst_fix < 1e-14,
        format!("max|ubar0-ln a|={worst_eq:.1e} (==0), max|a f(ubar0)-ubar0|={worst_fix:.2e} (<1e-14)"),
    )
}

fn c2(cases: &[GasCase]) -> Outcome {
    let mut worst_b = 0.0f64;
    let mut worst_v = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for c in cases {
        let eq = c.alpha.ln();
        let err = (c.traj.birth.last().unwrap() - eq).abs();
        let series = lyapunov_series(&c.traj, &c.kernel, eq).unwrap();
        let inc = lyapunov_max_increase(&series, 1e-6).unwrap();
        worst_b = worst_b.max(err);
        worst_v = worst_v.max(inc);
        if !(err < 1e-3 && inc <= 0.0) {
            bad.push(c.label.clone());
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} runs, max|b(T)-ln a|={worst_b:.2e} (<1e-3), max[dV - 1e-6(1+V)]={worst_v:.2e} (<=0){}",
            cases.len(),
            if bad.is_empty() { String::new() } else { format!(", failing: {bad:?}") }
        ),
    )
}

fn c3() -> Outcome {
    let npts = 10_000;
    let mut min_gap = f64::INFINITY;
    let mut min_off = f64::INFINITY;
    for alpha in [1.5, E, E * E] {
        let eq = alpha.ln();
        let h = 10.0 * eq / (npts - 1) as f64;
        for i in 0..npts {
            let u = i as f64 * h;
            let gap = fisher_goh_gap(alpha, u).unwrap();
            min_gap = min_gap.min(gap);
            if u > 2.0 * h && (u - eq).abs() > 2.0 * h {
                min_off = min_off.min(gap);
            }
        }
    }
    outcome(
        min_gap >= 0.0 && min_off > 1e-12,
        format!("min gap={min_gap:.2e} (>=0), min gap off {{0, ln a}}={min_off:.2e} (>1e-12)"),
    )
}

fn c4(cases: &[GasCase]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for c in cases {
        let mass = total_population(&c.u0);
        let viol = dissipativity_check(&c.traj, mass, c.alpha, 1.0).unwrap();
        let scale = mass + dissipativity_bound(c.alpha, 1.0);
        worst = worst.max(viol / scale);
    }
    outcome(worst < 1e-6, format!("max violation/(U0+Lambda)={worst:.2e} (<1e-6)"))
}

fn c5() -> Outcome {
    let mu = 0.5;
    let step = 0.01;
    let values: Vec<f64> = (0..=500)
        .map(|j| {
            let a = j as f64 * step;
            if a < 5.0 {
                (PI * a / 5.0).sin().powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let kernel = BirthKernel::tabulated(step, values, Some(5.0), mu).unwrap();
    let a_star = kernel.reproductive_horizon();
    let u0 = AgeProfile::from_fn(step, 12.0, |a| if (6.0..=10.0).contains(&a) { 1.0 } else { 0.0 }).unwrap();
    let traj = run(3.0, &kernel, &u0, step, 20.0);
    let max_b = traj.birth.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let mass0 = total_population(&u0);
    let mut worst = 0.0f64;
    for (t, u) in traj.times.iter().zip(traj.population().unwrap()) {
        let rel = (u / mass0 - (-mu * t).exp()).abs() / (-mu * t).exp();
        worst = worst.max(rel);
    }
    let mut worst_profile = 0.0f64;
    for t in [0.0, 0.5, 1.0, 2.5, 4.0, 7.5, 10.0, 20.0] {
        let prof = agelab::reconstruct_profile(&u0, &traj, mu, t).unwrap();
        let rel = (total_population(&prof) / mass0 - (-mu * t).exp()).abs() / (-mu * t).exp();
        worst_profile = worst_profile.max(rel);
    }
    outcome(
        a_star == 5.0 && max_b == 0.0 && worst < 1e-8 && worst_profile < 1e-8,
        format!(
            "a*={a_star}, max|b|={max_b:.1e} (==0), max rel err U(t) vs e^-mu t={worst:.2e}, \
             reconstructed profiles={worst_profile:.2e} (<1e-8)"
        ),
    )
}

fn c6() -> Outcome {
    let dt = 0.005;
    let kernel = make_shifted_gamma(1.0, 1.0, 2, 1.0).unwrap();
    let u0 = AgeProfile::from_fn(dt, 30.0, |a| bump(a, 1.0)).unwrap();
    let mut worst = 0.0f64;
    let mut per_m = Vec::new();
    for m in [0.5, 1.0, E * E] {
        let root = dominant_eigenvalue(m, &kernel).unwrap();
        let config = SimConfig::with_default_age(dt, 20.0, &kernel, &u0).unwrap();
        let traj = solve_with_law(&kernel, BirthLaw::Linear { multiplier: m }, &u0, &config).unwrap();
        let q0 = adjoint_moment(&kernel, &root, &u0, &traj, 0.0).unwrap();
        let mut dev = 0.0f64;
        for i in 0..=80 {
            let t = i as f64 * 0.25;
            let q = adjoint_moment(&kernel, &root, &u0, &traj, t).unwrap() * (-root.lambda * t).exp();
            dev = dev.max((q / q0 - 1.0).abs());
        }
        per_m.push(format!("m={m:.3}: {dev:.2e}"));
        worst = worst.max(dev);
    }
    outcome(worst < 1e-4, format!("max rel drift [{}] (<1e-4)", per_m.join(", ")))
}

fn c7() -> Outcome {
    let shape = GammaShape::new(1.0, 0.0, 0);
    let mu = 1.0;
    let locus = hopf_locus(5, shape, mu).unwrap();
    let kernel = BirthKernel::shifted_gamma(shape, mu).unwrap();
    let mut max_phase = 0.0f64;
    let mut max_delta = 0.0f64;
    let mut min_trans = f64::INFINITY;
    let mut increasing = true;
    for (i, hp) in locus.iter().enumerate() {
        max_phase = max_phase.max(hopf_phase_residual(hp.k, hp.omega, shape, mu).abs());
        let d = char_residual(Complex64::new(0.0, hp.omega), hp.alpha, &kernel).unwrap();
        max_delta = max_delta.max(d.norm());
        min_trans = min_trans.min(hp.transversality_re);
        if i > 0 && hp.alpha <= locus[i - 1].alpha {
            increasing = false;
        }
    }
    // Independent oracle: plain bisection of ω + atan(ω) = π on (0, π).
    let omega_bis = bisect(|w| w + w.atan() - PI, 1e-9, PI, 1e-15, 0.0).unwrap();
    let alpha_bis = (1.0 + (1.0 + omega_bis * omega_bis).sqrt()).exp();
    let d_omega = (locus[0].omega - OMEGA0_ORACLE).abs().max((locus[0].omega - omega_bis).abs());
    let d_alpha = ((locus[0].alpha - ALPHA0_ORACLE).abs() / ALPHA0_ORACLE)
        .max((locus[0].alpha - alpha_bis).abs() / alpha_bis);
    outcome(
        locus.len() == 6
            && max_phase < 1e-10
            && max_delta < 1e-8
            && min_trans > 0.0
            && increasing
            && d_omega < 1e-8
            && d_alpha < 1e-8,
        format!(
            "k=0..5: max phase residual={max_phase:.1e} (<1e-10), max|Delta|={max_delta:.1e} (<1e-8), \
             min transversality={min_trans:.3e} (>0), alpha_k increasing={increasing}, \
             omega0={:.12} |d|={d_omega:.1e}, alpha0={:.10} rel d={d_alpha:.1e} (<1e-8)",
            locus[0].omega, locus[0].alpha
        ),
    )
}

fn c8() -> Outcome {
    let mu = 1.0;
    let pts: Vec<_> = (0..=50)
        .map(|n| hopf_point(0, GammaShape::new(1.0, 1.0, n), mu).unwrap())
        .collect();
    let omega_dec = pts.windows(2).all(|w| w[1].omega < w[0].omega);
    let alpha_dec = pts.windows(2).all(|w| w[1].alpha < w[0].alpha);
    let rises: Vec<usize> = (1..pts.len()).filter(|&n| pts[n].alpha >= pts[n - 1].alpha).collect();
    let tail_dec = pts[2..].windows(2).all(|w| w[1].alpha < w[0].alpha);
    let above = pts.iter().all(|p| p.alpha > E * E);
    let c = mu + 1.0;
    let asym = (pts[50].omega * 51.0 - PI * c).abs() / (PI * c);
    outcome(
        omega_dec && alpha_dec && above && asym < 0.1,
        format!(
            "omega0 decreasing={omega_dec}, alpha0 decreasing={alpha_dec} (rises at n={rises:?}; \
             alpha0(0..3)=[{:.4}, {:.4}, {:.4}, {:.4}]; decreasing for n>=2: {tail_dec}), > e^2={above}, \
             alpha0(50)-e^2={:.3e}, |omega0(50)*51 - pi c|/(pi c)={asym:.3e} (<0.1)",
            pts[0].alpha,
            pts[1].alpha,
            pts[2].alpha,
            pts[3].alpha,
            pts[50].alpha - E * E
        ),
    )
}

fn c9() -> Outcome {
    let kernel = make_shifted_gamma(1.0, 0.0, 0, 1.0).unwrap();
    let alpha0 = hopf_point(0, GammaShape::new(1.0, 0.0, 0), 1.0).unwrap().alpha;
    let amp = |alpha: f64| {
        let u0 = initial("1.05ubar", alpha, 1.0, 0.01, 30.0);
        tail_amplitude(&run(alpha, &kernel, &u0, 0.01, 400.0), 0.2)
    };
    let below = amp(0.9 * alpha0);
    let above = amp(1.1 * alpha0);
    outcome(
        below < 1e-2 && above > 1e-1,
        format!("amplitude at 0.9 alpha0={below:.2e} (<1e-2), at 1.1 alpha0={above:.3} (>1e-1)"),
    )
}

fn c10() -> Outcome {
    let alpha = 1.5;
    let kernel = make_shifted_gamma(1.0, 1.0, 2, 1.0).unwrap();
    let coarse = 0.04;
    let trajs: Vec<Trajectory> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            let u0 = initial("0.5ubar", alpha, 1.0, dt, 30.0);
            run(alpha, &kernel, &u0, dt, 200.0)
        })
        .collect();
    let n = trajs[0].len();
    let on_coarse = |tr: &Trajectory, i: usize| {
        let stride = (coarse / tr.dt).round() as usize;
        tr.birth[i * stride]
    };
    let diff = |a: &Trajectory, b: &Trajectory| {
        (0..n)
            .map(|i| (on_coarse(a, i) - on_coarse(b, i)).abs())
            .fold(0.0, f64::max)
    };
    let d1 = diff(&trajs[0], &trajs[1]);
    let d2 = diff(&trajs[1], &trajs[2]);
    let ratio = d1 / d2;
    outcome(
        (3.4..=4.6).contains(&ratio),
        format!("max diffs {d1:.3e}, {d2:.3e}, ratio={ratio:.3} (in [3.4, 4.6])"),
    )
}

fn c11() -> Outcome {
    let n = 10_000;
    let mut worst_interior = 0.0f64;
    for alpha in [1.05, 1.5, 2.0, E, 4.0, 5.0, 6.0, 7.0, 0.99 * E * E] {
        for x0 in [0.01, 0.5, 1.0, 3.0, 10.0] {
            let orbit = ricker_orbit(alpha, x0, n).unwrap();
            worst_interior = worst_interior.max((orbit[n] - alpha.ln()).abs());
        }
    }
    let chaotic = ricker_orbit(9.0, 1.0, n).unwrap();
    let tail = &chaotic[n - 1000..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    let bounded = hi <= 9.0 / E + 1e-12 && lo > 0.0;
    let spread = hi - lo;
    outcome(
        worst_interior < 1e-8 && bounded && spread > 1e-3,
        format!(
            "alpha in (1, 0.99e^2]: max|x_N - ln a|={worst_interior:.2e} (<1e-8); \
             alpha=9: orbit in [{lo:.3}, {hi:.3}] (<= 9/e), spread={spread:.3} (>1e-3)"
        ),
    )
}

fn c11_endpoint() -> Outcome {
    let n = 10_000;
    let alpha = E * E;
    let mut worst = 0.0f64;
    for x0 in [0.5, 1.0, 3.0] {
        let orbit = ricker_orbit(alpha, x0, n).unwrap();
        worst = worst.max((orbit[n] - alpha.ln()).abs());
    }
    outcome(
        worst < 1e-8,
        format!(
            "alpha=e^2 (multiplier -1, algebraic decay ~N^-1/2): max|x_N - 2|={worst:.2e} (<1e-8)"
        ),
    )
}

fn main() {
    // Sanity of the linear coefficient used throughout the spectral checks.
    assert!((linearization_coefficient(E * E) + 1.0).abs() < 1e-15);

    let mut failures = Vec::new();
    report("C1", "equilibrium identities", c1, &mut failures);
    let cases = gas_cases();
    report("C2", "global stability regime", || c2(&cases), &mut failures);
    report("C3", "Fisher-Goh inequality", c3, &mut failures);
    report("C4", "dissipativity", || c4(&cases), &mut failures);
    report("C5", "boundary extinction", c5, &mut failures);
    report("C6", "adjoint conservation", c6, &mut failures);
    report("C7", "Hopf locus", c7, &mut failures);
    report("C8", "Hopf limit alpha_k(n) -> e^2", c8, &mut failures);
    report("C9", "Hopf onset dynamics", c9, &mut failures);
    report("C10", "solver order", c10, &mut failures);
    report("C11", "Ricker limit, alpha < e^2 and alpha = 9", c11, &mut failures);
    report("C11b", "Ricker limit, endpoint alpha = e^2", c11_endpoint, &mut failures);

    if failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failures.len(), failures.join(", "));
        std::process::exit(1);
    }
}
