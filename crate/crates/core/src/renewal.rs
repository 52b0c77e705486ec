//! Birth-rate renewal solver and reconstruction along characteristics.
//!
//! The birth rate `b(t) = u(t, 0)` satisfies
//!
//! ```text
//! b(t) = law( F(t) + ∫_0^t g(a) b(t - a) da ),   g(a) = beta(a) e^{-mu a}
//! F(t) = e^{-mu t} ∫_0^∞ beta(s + t) u0(s) ds
//! ```
//!
//! where `law` is the Ricker nonlinearity `alpha x e^{-x}` for the full model
//! or `m x` for a linear comparison system. The convolution is discretized
//! with the composite trapezoid rule on the grid `t_n = n dt` and the
//! kernel is sampled on the same grid (see [`crate::kernel::DiscreteKernel`]).

use crate::error::{invalid, Error, Result};
use crate::kernel::BirthKernel;
use crate::roots::safeguarded_newton;

/// Tolerance on the residual of the per-step implicit equation.
pub const STEP_RESIDUAL_TOL: f64 = 1e-12;

/// `alpha x e^{-x}`.
pub fn ricker(alpha: f64, x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::Domain(format!("Ricker argument must be >= 0, got {x}")));
    }
    Ok(ricker_unchecked(alpha, x))
}

#[inline]
fn ricker_unchecked(alpha: f64, x: f64) -> f64 {
    alpha * x * (-x).exp()
}

/// Iterates the scalar map `x -> alpha x e^{-x}`, returning `x_0..=x_iterations`.
pub fn ricker_orbit(alpha: f64, x0: f64, iterations: usize) -> Result<Vec<f64>> {
    let mut orbit = Vec::with_capacity(iterations + 1);
    let mut x = x0;
    orbit.push(x);
    for _ in 0..iterations {
        x = ricker(alpha, x)?;
        orbit.push(x);
    }
    Ok(orbit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub mu: f64,
    pub kernel: BirthKernel,
}

impl ModelParams {
    pub fn new(alpha: f64, kernel: BirthKernel) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        Ok(Self {
            alpha,
            mu: kernel.mu(),
            kernel,
        })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.mu != self.kernel.mu() {
            return Err(invalid(
                "mu",
                format!(
                    "kernel was normalized for mu = {}, model uses {}",
                    self.kernel.mu(),
                    self.mu
                ),
            ));
        }
        Ok(())
    }
}

/// Time step, horizon and age truncation of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub max_age: f64,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, max_age: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            horizon,
            max_age,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Uses the default truncation `max(support(u0), 30 / mu, a*)`.
    pub fn with_default_age(dt: f64, horizon: f64, kernel: &BirthKernel, u0: &AgeProfile) -> Result<Self> {
        Self::new(dt, horizon, default_max_age(kernel, u0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(invalid("T", format!("must be at least dt, got {}", self.horizon)));
        }
        if !(self.max_age.is_finite() && self.max_age > 0.0) {
            return Err(invalid("A_max", format!("must be positive, got {}", self.max_age)));
        }
        Ok(())
    }

    /// Number of steps; the grid is `0, dt, ..., steps * dt`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt * (1.0 + 1e-12)).floor() as usize
    }
}

pub fn default_max_age(kernel: &BirthKernel, u0: &AgeProfile) -> f64 {
    let mut a = (30.0 / kernel.mu()).max(u0.support_end());
    let a_star = kernel.reproductive_horizon();
    if a_star.is_finite() {
        a = a.max(a_star);
    }
    a
}

/// An age density sampled on `a_i = i da`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeProfile {
    pub da: f64,
    pub values: Vec<f64>,
}

impl AgeProfile {
    pub fn new(da: f64, values: Vec<f64>) -> Result<Self> {
        if !(da.is_finite() && da > 0.0) {
            return Err(invalid("da", format!("must be positive, got {da}")));
        }
        if values.is_empty() {
            return Err(invalid("u0", "profile has no samples"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid(
                "u0",
                format!("density must be finite and non-negative (index {i})"),
            ));
        }
        Ok(Self { da, values })
    }

    /// Samples `f` on `[0, max_age]`.
    pub fn from_fn(da: f64, max_age: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(max_age.is_finite() && max_age >= 0.0) {
            return Err(invalid("A_max", format!("must be non-negative, got {max_age}")));
        }
        let n = (max_age / da * (1.0 + 1e-12)).floor() as usize;
        Self::new(da, (0..=n).map(|i| f(i as f64 * da)).collect())
    }

    pub fn zeros(da: f64, max_age: f64) -> Result<Self> {
        Self::from_fn(da, max_age, |_| 0.0)
    }

    pub fn max_age(&self) -> f64 {
        self.da * (self.values.len() - 1) as f64
    }

    pub fn age(&self, i: usize) -> f64 {
        self.da * i as f64
    }

    /// Largest grid age with a positive density (zero for the empty population).
    pub fn support_end(&self) -> f64 {
        self.values
            .iter()
            .rposition(|v| *v > 0.0)
            .map_or(0.0, |i| self.age((i + 1).min(self.values.len() - 1)))
    }

    /// Piecewise-linear value at age `a`; zero beyond the grid.
    pub fn value_at(&self, a: f64) -> f64 {
        if a < 0.0 {
            return 0.0;
        }
        let x = a / self.da;
        let i = x.floor() as usize;
        if i >= self.values.len() - 1 {
            return if i == self.values.len() - 1 && x == i as f64 {
                self.values[i]
            } else {
                0.0
            };
        }
        let frac = x - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.da, self.values.iter().map(|v| v * factor).collect())
    }

    /// Linear interpolation onto a new grid spacing, keeping the covered ages.
    pub fn resample(&self, da: f64) -> Result<Self> {
        if (da - self.da).abs() <= 1e-12 * self.da {
            return Ok(self.clone());
        }
        Self::from_fn(da, self.max_age(), |a| self.value_at(a))
    }

    /// Profile restricted to `[0, max_age]`.
    pub fn truncated(&self, max_age: f64) -> Self {
        let keep = ((max_age / self.da * (1.0 + 1e-12)).floor() as usize + 1).min(self.values.len());
        Self {
            da: self.da,
            values: self.values[..keep.max(1)].to_vec(),
        }
    }
}

/// Trapezoid mass `∫ u(a) da` of a profile.
pub fn total_population(profile: &AgeProfile) -> f64 {
    trapezoid(profile.da, &profile.values)
}

fn trapezoid(h: f64, values: &[f64]) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Sampled solution of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `b(t_n)`.
    pub birth: Vec<f64>,
    /// `U(t_n)`; absent for the difference-equation limit.
    pub population: Option<Vec<f64>>,
    /// `V(t_n)`, defined once enough history is available.
    pub lyapunov: Option<Vec<Option<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Grid index of `t`; errors unless `t` is a grid time within the horizon.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.dt;
        let n = x.round();
        if n < 0.0 || (x - n).abs() > 1e-9 * n.max(1.0) || n as usize >= self.len() {
            return Err(Error::OffGrid(t));
        }
        Ok(n as usize)
    }

    pub fn population(&self) -> Result<&[f64]> {
        self.population.as_deref().ok_or(Error::MissingPopulation)
    }
}

/// Birth law at the boundary `a = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BirthLaw {
    /// `alpha x e^{-x}`.
    Ricker { alpha: f64 },
    /// `m x`, the linear comparison system.
    Linear { multiplier: f64 },
}

impl BirthLaw {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            BirthLaw::Ricker { alpha } => ricker_unchecked(alpha, x),
            BirthLaw::Linear { multiplier } => multiplier * x,
        }
    }

    /// Solves `b = law(x + w b)` for `b >= 0`.
    fn solve_implicit(&self, x: f64, w: f64, step: usize) -> Result<f64> {
        if w == 0.0 {
            return Ok(self.apply(x));
        }
        match *self {
            BirthLaw::Linear { multiplier } => {
                let denom = 1.0 - multiplier * w;
                if denom <= 0.0 {
                    return Err(Error::Nonconvergence { step });
                }
                Ok(multiplier * x / denom)
            }
            BirthLaw::Ricker { alpha } => {
                if x == 0.0 {
                    return Ok(0.0);
                }
                let phi = |b: f64| {
                    let z = x + w * b;
                    let e = (-z).exp();
                    (b - alpha * z * e, 1.0 - alpha * w * (1.0 - z) * e)
                };
                let hi = alpha / std::f64::consts::E;
                safeguarded_newton(phi, 0.0, hi, STEP_RESIDUAL_TOL)
                    .map_err(|_| Error::Nonconvergence { step })
            }
        }
    }
}

/// `F(t) = e^{-mu t} ∫ beta(s + t) u0(s) ds` by trapezoid over the grid of `u0`.
pub fn forcing(u0: &AgeProfile, kernel: &BirthKernel, t: f64) -> f64 {
    let mu = kernel.mu();
    let last = u0.values.len() - 1;
    let sum: f64 = u0
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            let (left, right) = kernel.beta_one_sided(u0.age(i) + t);
            w * 0.5 * (left + right) * v
        })
        .sum();
    (-mu * t).exp() * u0.da * sum
}

/// Integrates the renewal equation with Ricker births.
pub fn solve_renewal(params: &ModelParams, u0: &AgeProfile, config: &SimConfig) -> Result<Trajectory> {
    params.validate()?;
    solve_with_law(
        &params.kernel,
        BirthLaw::Ricker {
            alpha: params.alpha,
        },
        u0,
        config,
    )
}

/// Integrates the renewal equation for an arbitrary birth law.
///
/// `u0` is resampled onto the time step when its spacing differs and is
/// truncated at `config.max_age`.
pub fn solve_with_law(kernel: &BirthKernel, law: BirthLaw, u0: &AgeProfile, config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let dt = config.dt;
    let mu = kernel.mu();
    let dk = kernel.discretize(dt)?;
    let u0 = u0.resample(dt)?.truncated(config.max_age);
    let steps = config.steps();
    let horizon = dk.horizon();

    let p = dk.weights();
    let beta = dk.beta();
    let forcing_at = |n: usize| -> f64 {
        if n >= horizon {
            return 0.0;
        }
        let last = u0.values.len() - 1;
        let upper = (horizon - n).min(u0.values.len());
        let mut acc = 0.0;
        for i in 0..upper {
            let v = u0.values[i];
            if v == 0.0 {
                continue;
            }
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            acc += w * beta[i + n] * v;
        }
        (-mu * n as f64 * dt).exp() * dt * acc
    };

    // exact integral of e^{-mu (t_{n+1} - s)} against the linear interpolant of b
    let decay = (-mu * dt).exp();
    let i0 = -(-mu * dt).exp_m1() / mu;
    let i1 = (1.0 - decay * (1.0 + mu * dt)) / (mu * mu);
    let w_old = i1 / dt;
    let w_new = i0 - w_old;

    let initial_mass = total_population(&u0);
    let mut birth = Vec::with_capacity(steps + 1);
    let mut population = Vec::with_capacity(steps + 1);
    let mut newborn_mass = 0.0;

    for n in 0..=steps {
        let mut x = forcing_at(n);
        let full_upper = if n < horizon { n } else { horizon + 1 };
        for j in 1..full_upper {
            x += p[j] * birth[n - j];
        }
        if n >= 1 && n < horizon {
            // trapezoid end weight at j = n
            x += 0.5 * p[n] * birth[0];
        }
        let b = law.solve_implicit(x, p[0], n)?;
        if !b.is_finite() || b < 0.0 {
            return Err(Error::Nonconvergence { step: n });
        }
        if n > 0 {
            newborn_mass = decay * newborn_mass + w_old * birth[n - 1] + w_new * b;
        }
        birth.push(b);
        let t = n as f64 * dt;
        population.push((-mu * t).exp() * initial_mass + newborn_mass);
    }

    Ok(Trajectory {
        dt,
        times: (0..=steps).map(|n| n as f64 * dt).collect(),
        birth,
        population: Some(population),
        lyapunov: None,
    })
}

/// `u(t, a)` on the grid `a_i = i dt`: `e^{-mu a} b(t - a)` for `a < t` and
/// `e^{-mu t} u0(a - t)` for `a >= t`.
pub fn reconstruct_profile(u0: &AgeProfile, traj: &Trajectory, mu: f64, t: f64) -> Result<AgeProfile> {
    let n = traj.index_of(t)?;
    let dt = traj.dt;
    let u0 = u0.resample(dt)?;
    let survival = (-mu * n as f64 * dt).exp();
    let values = (0..n)
        .map(|i| (-mu * i as f64 * dt).exp() * traj.birth[n - i])
        .chain(u0.values.iter().map(|v| survival * v))
        .collect();
    AgeProfile::new(dt, values)
}

/// `b(t) = alpha f(b(t - tau))` on the grid `n dt`, with `b` on `[-tau, 0)`
/// given by `history`.
pub fn simulate_difference_limit(
    alpha: f64,
    tau: f64,
    history: impl Fn(f64) -> f64,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid("tau", format!("must be positive, got {tau}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let ratio = tau / dt;
    let lag = ratio.round();
    if lag < 1.0 || (ratio - lag).abs() > 1e-9 * ratio {
        return Err(invalid("dt", format!("dt = {dt} does not divide tau = {tau}")));
    }
    let lag = lag as usize;
    let steps = (horizon / dt * (1.0 + 1e-12)).floor() as usize;
    let mut birth: Vec<f64> = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let past = if n < lag {
            history((n as f64 - lag as f64) * dt)
        } else {
            birth[n - lag]
        };
        birth.push(ricker(alpha, past)?);
    }
    Ok(Trajectory {
        dt,
        times: (0..=steps).map(|n| n as f64 * dt).collect(),
        birth,
        population: None,
        lyapunov: None,
    })
}
