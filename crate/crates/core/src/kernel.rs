//! Birth kernels `beta(a)`, their survival-weighted tails and Laplace transforms.
//!
//! Every kernel is normalized so that `∫ beta(a) e^{-mu a} da = 1` for the
//! mortality rate it was built with. Two families are supported: the
//! shifted Gamma kernel `C0 (a - tau)^n e^{-kappa (a - tau)}` on `[tau, ∞)`
//! and a tabulated kernel given on a uniform age grid and interpolated
//! linearly between nodes.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Survival-weighted tails below this value are treated as zero when a
/// kernel is truncated for time stepping.
pub const TAIL_CUTOFF: f64 = 1e-14;

/// Shape of a shifted Gamma kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaShape {
    pub tau: f64,
    pub kappa: f64,
    pub n: u32,
}

impl GammaShape {
    pub fn new(tau: f64, kappa: f64, n: u32) -> Self {
        Self { tau, kappa, n }
    }

    pub(crate) fn validate(&self, mu: f64) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(invalid("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid("mu", format!("must be positive, got {mu}")));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(invalid(
                "kappa",
                format!("must be non-negative, got {}", self.kappa),
            ));
        }
        if self.kappa == 0.0 && self.n > 0 {
            return Err(invalid("n", "kappa = 0 requires n = 0"));
        }
        Ok(())
    }

    /// `mu + kappa`, the decay rate of `beta(a) e^{-mu a}` past the delay.
    pub fn decay(&self, mu: f64) -> f64 {
        mu + self.kappa
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    ShiftedGamma {
        c0: f64,
        shape: GammaShape,
    },
    /// `values[j]` is beta at age `j * step`; beta is zero at and beyond
    /// `support_end`.
    Tabulated {
        step: f64,
        values: Vec<f64>,
        support_end: f64,
    },
}

/// An immutable, normalized maternity function.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthKernel {
    form: KernelForm,
    mu: f64,
    /// Tabulated only: `tail[j] = ∫_{a_j}^∞ beta e^{-mu a}` by trapezoid.
    tail: Vec<f64>,
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `e^{-y} Σ_{k=0}^{n} y^k / k!`, the regularized upper incomplete Gamma
/// function `Q(n + 1, y)`.
fn erlang_tail(n: u32, y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=n {
        term *= y / k as f64;
        sum += term;
    }
    (-y).exp() * sum
}

/// Builds the shifted Gamma kernel with `C0 = e^{mu tau} (mu + kappa)^{n+1} / n!`.
pub fn make_shifted_gamma(tau: f64, kappa: f64, n: u32, mu: f64) -> Result<BirthKernel> {
    BirthKernel::shifted_gamma(GammaShape::new(tau, kappa, n), mu)
}

impl BirthKernel {
    pub fn shifted_gamma(shape: GammaShape, mu: f64) -> Result<Self> {
        shape.validate(mu)?;
        let c = shape.decay(mu);
        let ln_c0 = mu * shape.tau + (shape.n as f64 + 1.0) * c.ln() - ln_factorial(shape.n);
        let c0 = ln_c0.exp();
        if !c0.is_finite() {
            return Err(invalid("n", "normalization constant overflows"));
        }
        Ok(Self {
            form: KernelForm::ShiftedGamma { c0, shape },
            mu,
            tail: Vec::new(),
        })
    }

    /// Tabulated kernel on the uniform grid `0, step, 2 step, ...`.
    ///
    /// Values are rescaled so that the trapezoid rule on the table grid gives
    /// `∫ beta e^{-mu a} da = 1` exactly. If `support_end` is omitted it is
    /// the first age after which all values vanish; a table whose last value
    /// is positive is closed by an implicit zero node one step further.
    pub fn tabulated(step: f64, values: Vec<f64>, support_end: Option<f64>, mu: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid("step", format!("must be positive, got {step}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid("mu", format!("must be positive, got {mu}")));
        }
        if values.is_empty() {
            return Err(invalid("values", "table is empty"));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid(
                "values",
                format!("beta must be finite and non-negative (index {j})"),
            ));
        }
        let mut values = values;
        let last_positive = values
            .iter()
            .rposition(|v| *v > 0.0)
            .ok_or_else(|| invalid("values", "kernel is identically zero"))?;
        values.truncate(last_positive + 1);
        values.push(0.0);
        let natural_end = step * last_positive as f64 + step;
        let support_end = match support_end {
            None => natural_end,
            Some(end) => {
                if !(end.is_finite() && end > 0.0) {
                    return Err(invalid("support_end", format!("must be positive, got {end}")));
                }
                let first_bad = values
                    .iter()
                    .enumerate()
                    .find(|(j, v)| **v > 0.0 && step * *j as f64 >= end * (1.0 - 1e-12));
                if let Some((j, _)) = first_bad {
                    return Err(invalid(
                        "support_end",
                        format!(
                            "beta is positive at age {} at or beyond support end {end}",
                            step * j as f64
                        ),
                    ));
                }
                end
            }
        };

        let mass = trapezoid_weighted(step, &values, |a| (-mu * a).exp());
        let scale = 1.0 / mass;
        for v in values.iter_mut() {
            *v *= scale;
        }

        let mut tail = vec![0.0; values.len()];
        for j in (0..values.len() - 1).rev() {
            let a0 = step * j as f64;
            let a1 = a0 + step;
            let h0 = values[j] * (-mu * a0).exp();
            let h1 = values[j + 1] * (-mu * a1).exp();
            tail[j] = tail[j + 1] + 0.5 * step * (h0 + h1);
        }

        Ok(Self {
            form: KernelForm::Tabulated {
                step,
                values,
                support_end,
            },
            mu,
            tail,
        })
    }

    /// Tabulated kernel from `(age, beta)` pairs; ages must start at zero and
    /// be uniformly spaced.
    pub fn from_pairs(pairs: &[(f64, f64)], support_end: Option<f64>, mu: f64) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(invalid("values", "need at least two (age, beta) rows"));
        }
        if pairs[0].0.abs() > 1e-12 {
            return Err(invalid("age_grid", "ages must start at 0"));
        }
        let step = pairs[1].0 - pairs[0].0;
        for (j, (age, _)) in pairs.iter().enumerate() {
            let expected = step * j as f64;
            if (age - expected).abs() > 1e-9 * step.max(expected) {
                return Err(invalid(
                    "age_grid",
                    format!("ages must be uniform; row {j} has age {age}, expected {expected}"),
                ));
            }
        }
        let values = pairs.iter().map(|p| p.1).collect();
        Self::tabulated(step, values, support_end, mu)
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    /// The mortality rate the kernel was normalized against.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma_shape(&self) -> Option<GammaShape> {
        match self.form {
            KernelForm::ShiftedGamma { shape, .. } => Some(shape),
            KernelForm::Tabulated { .. } => None,
        }
    }

    /// Amplitude `C0` of a shifted Gamma kernel.
    pub fn c0(&self) -> Option<f64> {
        match self.form {
            KernelForm::ShiftedGamma { c0, .. } => Some(c0),
            KernelForm::Tabulated { .. } => None,
        }
    }

    /// One-sided values `(beta(a-), beta(a+))`. They differ only at a jump.
    pub fn beta_one_sided(&self, a: f64) -> (f64, f64) {
        match &self.form {
            KernelForm::ShiftedGamma { c0, shape } => {
                let s = a - shape.tau;
                if s < 0.0 {
                    (0.0, 0.0)
                } else if s == 0.0 {
                    let right = if shape.n == 0 { *c0 } else { 0.0 };
                    (0.0, right)
                } else {
                    let v = (c0.ln() + shape.n as f64 * s.ln() - shape.kappa * s).exp();
                    (v, v)
                }
            }
            KernelForm::Tabulated {
                step,
                values,
                support_end,
            } => {
                let v = if a < 0.0 || a >= *support_end {
                    0.0
                } else {
                    interpolate(*step, values, a)
                };
                (v, v)
            }
        }
    }

    /// Right-continuous value of `beta(a)`.
    pub fn beta(&self, a: f64) -> f64 {
        self.beta_one_sided(a).1
    }

    /// `‖beta‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        match &self.form {
            KernelForm::ShiftedGamma { c0, shape } => {
                if shape.n == 0 {
                    *c0
                } else {
                    let s = shape.n as f64 / shape.kappa;
                    self.beta(shape.tau + s)
                }
            }
            KernelForm::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// `K(lambda) = ∫ beta(a) e^{-(mu + lambda) a} da`.
    pub fn laplace(&self, lambda: Complex64) -> Result<Complex64> {
        match &self.form {
            KernelForm::ShiftedGamma { shape, .. } => {
                let c = shape.decay(self.mu);
                if lambda.re <= -c {
                    return Err(Error::Domain(format!(
                        "Re(lambda) = {} must exceed -(mu + kappa) = {}",
                        lambda.re, -c
                    )));
                }
                let base = Complex64::new(1.0, 0.0) + lambda / c;
                Ok((-lambda * shape.tau).exp() * base.powi(-(shape.n as i32 + 1)))
            }
            KernelForm::Tabulated { step, values, .. } => {
                let rate = lambda + self.mu;
                let last = values.len() - 1;
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in values.iter().enumerate() {
                    if *v == 0.0 {
                        continue;
                    }
                    let w = if j == 0 || j == last { 0.5 } else { 1.0 };
                    acc += (-rate * (step * j as f64)).exp() * (w * v);
                }
                Ok(acc * *step)
            }
        }
    }

    /// Real-argument `ln K(lambda)` and its derivative in `lambda`.
    pub fn log_laplace_real(&self, lambda: f64) -> Result<(f64, f64)> {
        match &self.form {
            KernelForm::ShiftedGamma { shape, .. } => {
                let c = shape.decay(self.mu);
                if lambda <= -c {
                    return Err(Error::Domain(format!(
                        "lambda = {lambda} must exceed -(mu + kappa) = {}",
                        -c
                    )));
                }
                let np1 = shape.n as f64 + 1.0;
                let value = -lambda * shape.tau - np1 * (lambda / c).ln_1p();
                let slope = -shape.tau - np1 / (c + lambda);
                Ok((value, slope))
            }
            KernelForm::Tabulated { step, values, .. } => {
                let rate = lambda + self.mu;
                let last = values.len() - 1;
                // shift exponents by the largest to stay finite for very negative lambda
                let shift = values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v > 0.0)
                    .map(|(j, _)| -rate * step * j as f64)
                    .fold(f64::NEG_INFINITY, f64::max);
                let (mut k, mut dk) = (0.0, 0.0);
                for (j, v) in values.iter().enumerate() {
                    if *v == 0.0 {
                        continue;
                    }
                    let a = step * j as f64;
                    let w = if j == 0 || j == last { 0.5 } else { 1.0 };
                    let e = (-rate * a - shift).exp() * w * v;
                    k += e;
                    dk -= a * e;
                }
                Ok((shift + (k * step).ln(), dk / k))
            }
        }
    }

    /// `gamma(a) = ∫_a^∞ beta(s) e^{-mu s} ds`.
    pub fn gamma_tail(&self, a: f64) -> f64 {
        let a = a.max(0.0);
        match &self.form {
            KernelForm::ShiftedGamma { shape, .. } => {
                let x = (a - shape.tau).max(0.0);
                erlang_tail(shape.n, shape.decay(self.mu) * x)
            }
            KernelForm::Tabulated { step, values, .. } => {
                let j = (a / step).floor() as usize;
                if j + 1 >= values.len() {
                    return 0.0;
                }
                let a1 = step * (j + 1) as f64;
                let h = interpolate(*step, values, a) * (-self.mu * a).exp();
                let h1 = values[j + 1] * (-self.mu * a1).exp();
                self.tail[j + 1] + 0.5 * (a1 - a) * (h + h1)
            }
        }
    }

    /// The reproductive horizon `a*`: beyond it `gamma` vanishes.
    pub fn reproductive_horizon(&self) -> f64 {
        match &self.form {
            KernelForm::ShiftedGamma { .. } => f64::INFINITY,
            KernelForm::Tabulated {
                step,
                values,
                support_end,
            } => {
                // `values` always ends with its first trailing zero
                let first_zero = step * (values.len() - 1) as f64;
                first_zero.min(*support_end)
            }
        }
    }

    /// `∫ gamma(a) da = ∫ a beta(a) e^{-mu a} da`, the mean age of the
    /// survival-weighted kernel.
    pub fn mean_age(&self) -> f64 {
        match &self.form {
            KernelForm::ShiftedGamma { shape, .. } => {
                shape.tau + (shape.n as f64 + 1.0) / shape.decay(self.mu)
            }
            KernelForm::Tabulated { step, values, .. } => {
                let mu = self.mu;
                trapezoid_weighted(*step, values, |a| a * (-mu * a).exp())
            }
        }
    }

    /// Samples the kernel on the time-stepping grid `j * dt`.
    pub fn discretize(&self, dt: f64) -> Result<DiscreteKernel> {
        DiscreteKernel::new(self, dt)
    }
}

fn interpolate(step: f64, values: &[f64], a: f64) -> f64 {
    let x = a / step;
    let j = x.floor() as usize;
    if j + 1 >= values.len() {
        return if j < values.len() && (x - j as f64) == 0.0 {
            values[j]
        } else {
            0.0
        };
    }
    let frac = x - j as f64;
    values[j] * (1.0 - frac) + values[j + 1] * frac
}

fn trapezoid_weighted(step: f64, values: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
    let last = values.len() - 1;
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            w * v * weight(step * j as f64)
        })
        .sum();
    sum * step
}

/// A kernel sampled on the grid `a_j = j dt, j = 0..=horizon`, with the
/// composite trapezoid weights `p_j` of `g(a) = beta(a) e^{-mu a}` rescaled
/// to sum to one. The last node is always zero.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    dt: f64,
    mu: f64,
    beta: Vec<f64>,
    weights: Vec<f64>,
    raw_mass: f64,
}

impl DiscreteKernel {
    fn new(kernel: &BirthKernel, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let mu = kernel.mu;
        let mut beta = match &kernel.form {
            KernelForm::ShiftedGamma { shape, .. } => {
                let mut horizon = (shape.tau / dt).ceil() as usize + 1;
                while kernel.gamma_tail(horizon as f64 * dt) >= TAIL_CUTOFF {
                    horizon += 1;
                }
                let tau_nodes = shape.tau / dt;
                let tau_on_grid = (tau_nodes - tau_nodes.round()).abs() < 1e-9 * tau_nodes.max(1.0);
                (0..=horizon)
                    .map(|j| {
                        let a = j as f64 * dt;
                        if tau_on_grid && j == tau_nodes.round() as usize {
                            // trapezoid on each side of the jump
                            let (left, right) = kernel.beta_one_sided(shape.tau);
                            0.5 * (left + right)
                        } else {
                            kernel.beta(a)
                        }
                    })
                    .collect::<Vec<_>>()
            }
            KernelForm::Tabulated { step, values, .. } => {
                let ratio = dt / step;
                let stride = ratio.round();
                if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio {
                    return Err(invalid(
                        "dt",
                        format!("kernel table step {step} must evenly divide dt = {dt}"),
                    ));
                }
                let stride = stride as usize;
                let horizon = (kernel.reproductive_horizon() / dt).ceil() as usize;
                (0..=horizon)
                    .map(|j| values.get(j * stride).copied().unwrap_or(0.0))
                    .collect()
            }
        };
        if let Some(last) = beta.last_mut() {
            *last = 0.0;
        }
        let mut weights: Vec<f64> = beta
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let w = if j == 0 { 0.5 } else { 1.0 };
                w * dt * b * (-mu * j as f64 * dt).exp()
            })
            .collect();
        let raw_mass: f64 = weights.iter().sum();
        if !(raw_mass > 0.0) {
            return Err(invalid(
                "dt",
                format!("kernel has no mass on the grid with dt = {dt}"),
            ));
        }
        for w in weights.iter_mut() {
            *w /= raw_mass;
        }
        for b in beta.iter_mut() {
            *b /= raw_mass;
        }
        Ok(Self {
            dt,
            mu,
            beta,
            weights,
            raw_mass,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Index `J` of the last (zero) node; `J dt` is the truncated support.
    pub fn horizon(&self) -> usize {
        self.beta.len() - 1
    }

    /// Rescaled beta at the nodes.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Normalized trapezoid weights `p_j`; `Σ p_j = 1`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoid value of `∫ beta e^{-mu a}` before rescaling.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// `g_j = beta_j e^{-mu a_j}` after rescaling.
    pub fn g(&self, j: usize) -> f64 {
        self.beta.get(j).map_or(0.0, |b| b * (-self.mu * j as f64 * self.dt).exp())
    }

    /// Discrete tails `Σ_{i >= j} p_i`, `j = 0..=J`.
    pub fn tails(&self) -> Vec<f64> {
        let mut tails = vec![0.0; self.weights.len()];
        let mut acc = 0.0;
        for j in (0..self.weights.len()).rev() {
            acc += self.weights[j];
            tails[j] = acc;
        }
        tails
    }
}
