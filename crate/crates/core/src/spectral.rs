//! Characteristic equations of the linearized and comparison systems.
//!
//! With `K(lambda) = ∫ beta(a) e^{-(mu + lambda) a} da`, a linear system
//! with fertility multiplier `m` has its dominant real eigenvalue at
//! `m K(lambda) = 1`. Around the positive equilibrium the multiplier is
//! `1 - ln alpha`, and for shifted Gamma kernels purely imaginary roots
//! `±iω` appear exactly on the Hopf locus
//!
//! ```text
//! ω tau + (n + 1) atan(ω / (mu + kappa)) = (2k + 1) π
//! alpha = exp(1 + (1 + ω² / (mu + kappa)²)^{(n + 1) / 2})
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::{BirthKernel, GammaShape, KernelForm};
use crate::renewal::{AgeProfile, Trajectory};
use crate::roots::safeguarded_newton;

/// Residual tolerance for real characteristic roots.
pub const ROOT_TOL: f64 = 1e-12;
/// Residual tolerance for Hopf frequencies.
pub const HOPF_TOL: f64 = 1e-10;

/// A real root of `m K(lambda) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharRoot {
    pub lambda: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfPoint {
    pub k: u32,
    pub omega: f64,
    pub alpha: f64,
    pub transversality_re: f64,
}

/// `alpha f'(ln alpha) = 1 - ln alpha`, the boundary coefficient of the
/// system linearized at the positive equilibrium.
pub fn linearization_coefficient(alpha: f64) -> f64 {
    1.0 - alpha.ln()
}

/// `Delta(lambda, alpha) = 1 - (1 - ln alpha) K(lambda)`.
pub fn char_residual(lambda: Complex64, alpha: f64, kernel: &BirthKernel) -> Result<Complex64> {
    let k = kernel.laplace(lambda)?;
    Ok(Complex64::new(1.0, 0.0) - linearization_coefficient(alpha) * k)
}

/// Unique real `lambda` with `m K(lambda) = 1`.
pub fn dominant_eigenvalue(multiplier: f64, kernel: &BirthKernel) -> Result<CharRoot> {
    if !(multiplier.is_finite() && multiplier > 0.0) {
        return Err(invalid("m", format!("must be positive, got {multiplier}")));
    }
    let ln_m = multiplier.ln();
    // ln(m K(lambda)), strictly decreasing in lambda
    let h = |lambda: f64| -> Result<(f64, f64)> {
        let (v, dv) = kernel.log_laplace_real(lambda)?;
        Ok((ln_m + v, dv))
    };

    let mu = kernel.mu();
    let lo = match kernel.form() {
        KernelForm::ShiftedGamma { shape, .. } => {
            let lo = -shape.decay(mu) * (1.0 - 1e-9);
            if h(lo)?.0 < 0.0 {
                return Err(Error::NoRootInDomain { multiplier });
            }
            lo
        }
        KernelForm::Tabulated { .. } => {
            let mut lo = -10.0 * mu;
            let mut tries = 0;
            while h(lo)?.0 < 0.0 {
                lo *= 2.0;
                tries += 1;
                if tries > 60 {
                    return Err(Error::NoRootInDomain { multiplier });
                }
            }
            lo
        }
    };
    let mut hi = mu.max(1.0);
    let mut tries = 0;
    while h(hi)?.0 > 0.0 {
        hi = 2.0 * hi + 1.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::RootNotFound(format!("no upper bracket for m = {multiplier}")));
        }
    }

    let lambda = safeguarded_newton(
        |x| h(x).unwrap_or((f64::NAN, f64::NAN)),
        lo,
        hi,
        0.1 * ROOT_TOL,
    )?;
    Ok(CharRoot { lambda, multiplier })
}

/// Adjoint eigenfunction `Γ(a) = m ∫_a^∞ e^{-(mu + lambda)(θ - a)} beta(θ) dθ`.
pub fn adjoint_eigenfunction(kernel: &BirthKernel, root: &CharRoot, a: f64) -> f64 {
    let a = a.max(0.0);
    let m = root.multiplier;
    let lambda = root.lambda;
    let mu = kernel.mu();
    match kernel.form() {
        KernelForm::ShiftedGamma { shape, .. } => {
            let ln_mk = m.ln() + kernel.log_laplace_real(lambda).map_or(f64::NAN, |v| v.0);
            if a <= shape.tau {
                return (ln_mk + (mu + lambda) * a).exp();
            }
            let x = a - shape.tau;
            let y = (shape.decay(mu) + lambda) * x;
            let mut term = 1.0;
            let mut poly = 1.0;
            for k in 1..=shape.n {
                term *= y / k as f64;
                poly += term;
            }
            (ln_mk + (mu + lambda) * shape.tau - shape.kappa * x).exp() * poly
        }
        KernelForm::Tabulated { step, values, .. } => {
            if a >= kernel.reproductive_horizon() {
                return 0.0;
            }
            let rate = mu + lambda;
            let j = (a / step).floor() as usize;
            if j + 1 >= values.len() {
                return 0.0;
            }
            let last = values.len() - 1;
            let node = |i: usize| values[i] * (-rate * (step * i as f64 - a)).exp();
            // partial first cell [a, a_{j+1}], then full cells
            let a1 = step * (j + 1) as f64;
            let mut acc = 0.5 * (a1 - a) * (kernel.beta(a) + node(j + 1));
            for i in (j + 1)..=last {
                let w = if i == j + 1 || i == last { 0.5 } else { 1.0 };
                acc += w * step * node(i);
            }
            m * acc
        }
    }
}

/// `∫ Γ(a) u(t, a) da`, with the integral split at the characteristic `a = t`
/// and each smooth piece done by trapezoid on the trajectory grid.
pub fn adjoint_moment(kernel: &BirthKernel, root: &CharRoot, u0: &AgeProfile, traj: &Trajectory, t: f64) -> Result<f64> {
    let n = traj.index_of(t)?;
    let dt = traj.dt;
    let mu = kernel.mu();
    let u0 = u0.resample(dt)?;
    let mut newborn = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let a = i as f64 * dt;
        newborn += w * adjoint_eigenfunction(kernel, root, a) * (-mu * a).exp() * traj.birth[n - i];
    }
    if n == 0 {
        newborn = 0.0;
    }
    let last = u0.values.len() - 1;
    let mut initial = 0.0;
    for (i, v) in u0.values.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let w = if i == 0 || i == last { 0.5 } else { 1.0 };
        initial += w * adjoint_eigenfunction(kernel, root, t + i as f64 * dt) * v;
    }
    Ok(dt * (newborn + (-mu * t).exp() * initial))
}

/// Unique `ω_k > 0` with `ω tau + (n + 1) atan(ω / (mu + kappa)) = (2k + 1) π`.
pub fn hopf_frequency(k: u32, shape: GammaShape, mu: f64) -> Result<f64> {
    shape.validate(mu)?;
    let c = shape.decay(mu);
    let np1 = shape.n as f64 + 1.0;
    let target = (2.0 * k as f64 + 1.0) * PI;
    let phase = |w: f64| (w * shape.tau + np1 * (w / c).atan() - target, shape.tau + np1 * c / (c * c + w * w));
    let omega = safeguarded_newton(phase, 0.0, target / shape.tau, 1e-3 * HOPF_TOL)?;
    Ok(omega)
}

/// Residual of the Hopf phase condition at `omega`.
pub fn hopf_phase_residual(k: u32, omega: f64, shape: GammaShape, mu: f64) -> f64 {
    let c = shape.decay(mu);
    omega * shape.tau + (shape.n as f64 + 1.0) * (omega / c).atan() - (2.0 * k as f64 + 1.0) * PI
}

/// `alpha = exp(1 + (1 + ω² / (mu + kappa)²)^{(n + 1) / 2})`.
pub fn hopf_alpha(omega: f64, shape: GammaShape, mu: f64) -> Result<f64> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(invalid("omega", format!("must be non-negative, got {omega}")));
    }
    let c = shape.decay(mu);
    let modulus = (1.0 + (omega / c).powi(2)).powf(0.5 * (shape.n as f64 + 1.0));
    let alpha = (1.0 + modulus).exp();
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("Hopf parameter overflows at omega = {omega}")));
    }
    Ok(alpha)
}

/// `∂Delta/∂lambda` at a root of the characteristic equation for a shifted
/// Gamma kernel: `tau + (n + 1) / (lambda + mu + kappa)`.
pub fn char_slope_at_root(lambda: Complex64, shape: GammaShape, mu: f64) -> Complex64 {
    (shape.n as f64 + 1.0) / (lambda + shape.decay(mu)) + shape.tau
}

/// `Re dlambda/dalpha = Re(-(∂Delta/∂alpha) / (∂Delta/∂lambda))` at a Hopf point.
pub fn transversality(hp: &HopfPoint, shape: GammaShape, mu: f64) -> Result<f64> {
    let d_lambda = char_slope_at_root(Complex64::new(0.0, hp.omega), shape, mu);
    if d_lambda.norm() < 1e-12 {
        return Err(Error::IllConditioned(d_lambda.norm()));
    }
    let d_alpha = 1.0 / (hp.alpha * linearization_coefficient(hp.alpha));
    Ok((-d_alpha / d_lambda).re)
}

pub fn hopf_point(k: u32, shape: GammaShape, mu: f64) -> Result<HopfPoint> {
    let omega = hopf_frequency(k, shape, mu)?;
    let alpha = hopf_alpha(omega, shape, mu)?;
    let mut hp = HopfPoint {
        k,
        omega,
        alpha,
        transversality_re: f64::NAN,
    };
    hp.transversality_re = transversality(&hp, shape, mu)?;
    Ok(hp)
}

/// Hopf points for `k = 0..=k_max`.
pub fn hopf_locus(k_max: u32, shape: GammaShape, mu: f64) -> Result<Vec<HopfPoint>> {
    (0..=k_max).map(|k| hopf_point(k, shape, mu)).collect()
}
