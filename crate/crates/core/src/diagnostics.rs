//! Stability diagnostics evaluated on simulated trajectories.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::BirthKernel;
use crate::renewal::{total_population, AgeProfile, Trajectory};

/// Relative mass below which an initial profile counts as boundary data.
pub const SUBDOMAIN_THRESHOLD: f64 = 1e-14;

/// `ū(a) = ln(alpha) e^{-mu a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProfile {
    pub u_bar0: f64,
    pub mu: f64,
    pub profile: AgeProfile,
}

pub fn positive_equilibrium(alpha: f64, mu: f64, da: f64, max_age: f64) -> Result<EquilibriumProfile> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::NoPositiveEquilibrium(alpha));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid("mu", format!("must be positive, got {mu}")));
    }
    let u_bar0 = alpha.ln();
    let profile = AgeProfile::from_fn(da, max_age, |a| u_bar0 * (-mu * a).exp())?;
    Ok(EquilibriumProfile { u_bar0, mu, profile })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subdomain {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubdomainClass {
    pub tag: Subdomain,
    /// `∫_0^{a*} u0(a) da`.
    pub mass_below_horizon: f64,
}

/// Interior iff the initial population has individuals younger than `a*`.
pub fn classify_initial(u0: &AgeProfile, kernel: &BirthKernel) -> SubdomainClass {
    let a_star = kernel.reproductive_horizon();
    let total = total_population(u0);
    let mass = if a_star.is_finite() {
        let full_cells = ((a_star / u0.da).floor() as usize).min(u0.values.len() - 1);
        let mut m = 0.0;
        for i in 0..full_cells {
            m += 0.5 * u0.da * (u0.values[i] + u0.values[i + 1]);
        }
        let a_cut = full_cells as f64 * u0.da;
        if a_cut < a_star && full_cells + 1 < u0.values.len() {
            m += 0.5 * (a_star - a_cut) * (u0.values[full_cells] + u0.value_at(a_star));
        }
        m
    } else {
        total
    };
    let tag = if mass > SUBDOMAIN_THRESHOLD * total && mass > 0.0 {
        Subdomain::Interior
    } else {
        Subdomain::Boundary
    };
    SubdomainClass {
        tag,
        mass_below_horizon: mass,
    }
}

/// `|u - ln alpha| - |alpha f(u) - ln alpha|`; non-negative for `1 < alpha <= e^2`.
pub fn fisher_goh_gap(alpha: f64, u: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= E * E) {
        return Err(Error::OutOfRegime(alpha));
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("u must be >= 0, got {u}")));
    }
    let eq = alpha.ln();
    let image = alpha * u * (-u).exp();
    Ok((u - eq).abs() - (image - eq).abs())
}

/// `Λ = (alpha / mu) sup f = alpha / (mu e)`.
pub fn dissipativity_bound(alpha: f64, mu: f64) -> f64 {
    alpha / (mu * E)
}

/// `max_t [U(t) - e^{-mu t} U0 - (1 - e^{-mu t}) Λ]`.
pub fn dissipativity_check(traj: &Trajectory, u0_mass: f64, alpha: f64, mu: f64) -> Result<f64> {
    let pop = traj.population()?;
    let cap = dissipativity_bound(alpha, mu);
    Ok(traj
        .times
        .iter()
        .zip(pop)
        .map(|(t, u)| {
            let s = (-mu * t).exp();
            u - (s * u0_mass + (1.0 - s) * cap)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `delta_- = exp(-‖beta‖_∞ max(U0, Λ))`, the lower comparison factor.
pub fn comparison_delta_minus(kernel: &BirthKernel, alpha: f64, u0_mass: f64) -> f64 {
    let cap = dissipativity_bound(alpha, kernel.mu());
    (-kernel.sup_norm() * u0_mass.max(cap)).exp()
}

/// Discrete Lyapunov weights for a time step: `V_n = dt Σ_{k<J} w_k g(b_{n-k} / ū(0))`.
///
/// The weights `w_k = Σ_{i > k} p_i` are tails of the solver's own
/// convolution weights, so that `V_{n+1} - V_n = dt [g(b_{n+1}) - Σ p_j g(b_{n+1-j})]`
/// exactly once the initial forcing has died out.
#[derive(Debug, Clone)]
pub struct LyapunovWeights {
    dt: f64,
    weights: Vec<f64>,
}

impl LyapunovWeights {
    pub fn new(kernel: &BirthKernel, dt: f64) -> Result<Self> {
        let dk = kernel.discretize(dt)?;
        let tails = dk.tails();
        Ok(Self {
            dt,
            weights: tails[1..].to_vec(),
        })
    }

    /// History needed before `V` is defined: `H = J dt`.
    pub fn history(&self) -> f64 {
        self.weights.len() as f64 * self.dt
    }

    fn value_at(&self, birth: &[f64], n: usize, u_bar0: f64) -> f64 {
        let sum: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let r = birth[n - k] / u_bar0 - 1.0;
                w * r * r
            })
            .sum();
        self.dt * sum
    }
}

fn check_ubar(u_bar0: f64) -> Result<()> {
    if !(u_bar0 > 0.0) || !u_bar0.is_finite() {
        return Err(Error::UndefinedRatio(u_bar0));
    }
    Ok(())
}

/// `V(t) = ∫_0^H gamma(a) (b(t - a) / ū(0) - 1)^2 da` on the trajectory grid.
pub fn lyapunov_value(traj: &Trajectory, kernel: &BirthKernel, u_bar0: f64, t: f64) -> Result<f64> {
    check_ubar(u_bar0)?;
    let n = traj.index_of(t)?;
    let lw = LyapunovWeights::new(kernel, traj.dt)?;
    if n < lw.weights.len() {
        return Err(Error::InsufficientHistory {
            t,
            horizon: lw.history(),
        });
    }
    Ok(lw.value_at(&traj.birth, n, u_bar0))
}

/// `V` at every grid time; `None` until `t >= H`.
pub fn lyapunov_series(traj: &Trajectory, kernel: &BirthKernel, u_bar0: f64) -> Result<Vec<Option<f64>>> {
    check_ubar(u_bar0)?;
    let lw = LyapunovWeights::new(kernel, traj.dt)?;
    let start = lw.weights.len();
    Ok((0..traj.len())
        .map(|n| (n >= start).then(|| lw.value_at(&traj.birth, n, u_bar0)))
        .collect())
}

/// Largest `V(t + dt) - V(t) - slack (1 + V(t))` over the defined part of
/// the series; non-positive when `V` is non-increasing within the slack.
pub fn lyapunov_max_increase(series: &[Option<f64>], slack: f64) -> Option<f64> {
    series
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            (Some(v0), Some(v1)) => Some(v1 - v0 - slack * (1.0 + v0)),
            _ => None,
        })
        .reduce(f64::max)
}

/// Smallest grid time after which `b` stays above `tol`.
pub fn eventual_positivity_time(traj: &Trajectory, tol: f64) -> Option<f64> {
    let last_bad = traj.birth.iter().rposition(|b| *b <= tol);
    match last_bad {
        None => traj.times.first().copied(),
        Some(i) if i + 1 < traj.len() => Some(traj.times[i + 1]),
        Some(_) => None,
    }
}

/// `min U(t)` over the trailing window, a proxy for `liminf ‖u(t)‖₁`.
pub fn persistence_floor(traj: &Trajectory, window: f64) -> Result<f64> {
    let pop = traj.population()?;
    if !(window > 0.0) || traj.horizon() < 2.0 * window {
        return Err(invalid(
            "window",
            format!("horizon {} must be at least twice the window {window}", traj.horizon()),
        ));
    }
    let start = traj.horizon() - window;
    Ok(traj
        .times
        .iter()
        .zip(pop)
        .filter(|(t, _)| **t >= start - 1e-12)
        .map(|(_, u)| *u)
        .fold(f64::INFINITY, f64::min))
}

/// `max b - min b` over the trailing `fraction` of the horizon.
pub fn tail_amplitude(traj: &Trajectory, fraction: f64) -> f64 {
    let start = traj.horizon() * (1.0 - fraction);
    let (lo, hi) = traj
        .times
        .iter()
        .zip(&traj.birth)
        .filter(|(t, _)| **t >= start - 1e-12)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, b)| (lo.min(*b), hi.max(*b)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_shifted_gamma;
    use crate::renewal::{solve_renewal, ModelParams, SimConfig};

    fn traj_from(birth: Vec<f64>, dt: f64) -> Trajectory {
        Trajectory {
            dt,
            times: (0..birth.len()).map(|n| n as f64 * dt).collect(),
            population: Some(vec![1.0; birth.len()]),
            birth,
            lyapunov: None,
        }
    }

    #[test]
    fn equilibrium_examples() {
        assert_eq!(positive_equilibrium(E, 1.0, 0.1, 10.0).unwrap().u_bar0, 1.0);
        assert_eq!(positive_equilibrium(E * E, 1.0, 0.1, 10.0).unwrap().u_bar0, 2.0);
        assert!(matches!(
            positive_equilibrium(1.0, 1.0, 0.1, 10.0),
            Err(Error::NoPositiveEquilibrium(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let k = make_shifted_gamma(1.0, 1.0, 2, 1.0).unwrap();
        let eq = positive_equilibrium(3.0, 1.0, 0.01, 30.0).unwrap();
        assert_eq!(classify_initial(&eq.profile, &k).tag, Subdomain::Interior);
        let zero = AgeProfile::zeros(0.01, 30.0).unwrap();
        assert_eq!(classify_initial(&zero, &k).tag, Subdomain::Boundary);

        let table = BirthKernel::tabulated(0.01, vec![1.0; 500], Some(5.0), 1.0).unwrap();
        let old = AgeProfile::from_fn(0.01, 12.0, |a| if (6.0..=10.0).contains(&a) { 1.0 } else { 0.0 }).unwrap();
        let c = classify_initial(&old, &table);
        assert_eq!(c.tag, Subdomain::Boundary);
        assert_eq!(c.mass_below_horizon, 0.0);
        let young = AgeProfile::from_fn(0.01, 12.0, |a| if (4.0..=10.0).contains(&a) { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(classify_initial(&young, &table).tag, Subdomain::Interior);
    }

    #[test]
    fn fisher_goh_examples() {
        assert!(fisher_goh_gap(3.0, 3f64.ln()).unwrap().abs() < 1e-15);
        assert!((fisher_goh_gap(E * E, 1.0).unwrap() - 0.281_718_171_540_954_8).abs() < 1e-15);
        assert!(fisher_goh_gap(2.0, 0.0).unwrap().abs() < 1e-15);
        assert!(fisher_goh_gap(1.0, 0.5).is_err());
        assert!(fisher_goh_gap(8.0, 0.5).is_err());
    }

    #[test]
    fn lyapunov_of_constant_histories() {
        let k = make_shifted_gamma(1.0, 0.0, 0, 1.0).unwrap();
        let dt = 0.01;
        let lw = LyapunovWeights::new(&k, dt).unwrap();
        let len = (lw.history() / dt) as usize + 10;
        let t = (len - 1) as f64 * dt;

        let at_eq = traj_from(vec![2.0; len], dt);
        assert_eq!(lyapunov_value(&at_eq, &k, 2.0, t).unwrap(), 0.0);

        // g(2) = 1 so V = ∫ gamma = mean age = tau + 1 / (mu + kappa) = 2
        let doubled = traj_from(vec![4.0; len], dt);
        let v = lyapunov_value(&doubled, &k, 2.0, t).unwrap();
        assert!((v - k.mean_age()).abs() < 1e-4, "V = {v}");
        assert!((k.mean_age() - 2.0).abs() < 1e-15);

        assert!(matches!(
            lyapunov_value(&doubled, &k, 2.0, 1.0),
            Err(Error::InsufficientHistory { .. })
        ));
        assert!(matches!(lyapunov_value(&doubled, &k, 0.0, t), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn lyapunov_decreases_along_stable_run() {
        let alpha = 6.0f64;
        let k = make_shifted_gamma(1.0, 1.0, 2, 1.0).unwrap();
        let params = ModelParams::new(alpha, k.clone()).unwrap();
        let u0 = positive_equilibrium(alpha, 1.0, 0.02, 30.0).unwrap().profile.scaled(2.0).unwrap();
        let cfg = SimConfig::new(0.02, 80.0, 30.0).unwrap();
        let traj = solve_renewal(&params, &u0, &cfg).unwrap();
        let series = lyapunov_series(&traj, &k, alpha.ln()).unwrap();
        assert!(series.iter().any(Option::is_some));
        assert!(lyapunov_max_increase(&series, 1e-6).unwrap() <= 0.0);
        let last = series.last().unwrap().unwrap();
        let first = series.iter().flatten().next().unwrap();
        assert!(last < 1e-3 * first);
    }

    #[test]
    fn dissipativity_for_empty_population() {
        let traj = Trajectory {
            dt: 0.1,
            times: vec![0.0, 0.1, 0.2],
            birth: vec![0.0; 3],
            population: Some(vec![0.0; 3]),
            lyapunov: None,
        };
        assert!(dissipativity_check(&traj, 0.0, 5.0, 1.0).unwrap() <= 0.0);
    }

    #[test]
    fn positivity_time_and_floor() {
        let traj = traj_from(vec![0.0, 0.0, 0.3, 0.0, 0.5, 0.6, 0.7], 1.0);
        assert_eq!(eventual_positivity_time(&traj, 0.0), Some(4.0));
        let all_pos = traj_from(vec![0.1; 5], 1.0);
        assert_eq!(eventual_positivity_time(&all_pos, 0.0), Some(0.0));
        let dead = traj_from(vec![0.0; 5], 1.0);
        assert_eq!(eventual_positivity_time(&dead, 0.0), None);

        assert_eq!(persistence_floor(&all_pos, 2.0).unwrap(), 1.0);
        assert!(persistence_floor(&all_pos, 3.0).is_err());
    }

    #[test]
    fn tail_amplitude_of_oscillation() {
        let birth: Vec<f64> = (0..=1000).map(|n| (n as f64 * 0.1).sin()).collect();
        let traj = traj_from(birth, 0.1);
        let amp = tail_amplitude(&traj, 0.2);
        assert!((amp - 2.0).abs() < 1e-3);
        let flat = traj_from(vec![3.0; 100], 0.1);
        assert_eq!(tail_amplitude(&flat, 0.2), 0.0);
    }
}
