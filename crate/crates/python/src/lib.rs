//! Python bindings: kernels, simulation, diagnostics and Hopf analysis.

use agelab::diagnostics;
use agelab::renewal::ricker_orbit as core_ricker_orbit;
use agelab::spectral;
use agelab::{AgeProfile, BirthLaw, GammaShape, ModelParams, SimConfig};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: agelab::Error) -> PyErr {
    use agelab::Error as E;
    match e {
        E::InvalidParameter { .. }
        | E::Domain(_)
        | E::OffGrid(_)
        | E::UndefinedRatio(_)
        | E::NoPositiveEquilibrium(_)
        | E::OutOfRegime(_)
        | E::InsufficientHistory { .. }
        | E::MissingPopulation => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Maternity function beta(a), normalized so that ∫ beta e^{-mu a} da = 1.
#[pyclass(name = "BirthKernel", module = "agelab", frozen)]
pub struct PyBirthKernel {
    inner: agelab::BirthKernel,
}

#[pymethods]
impl PyBirthKernel {
    /// `C0 (a - tau)^n e^{-kappa (a - tau)}` for `a >= tau`.
    #[staticmethod]
    fn shifted_gamma(tau: f64, kappa: f64, n: u32, mu: f64) -> PyResult<Self> {
        let inner = agelab::make_shifted_gamma(tau, kappa, n, mu).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Values on the grid `j * step`, renormalized; linear between nodes.
    #[staticmethod]
    #[pyo3(signature = (step, values, mu, support_end = None))]
    fn tabulated(step: f64, values: Vec<f64>, mu: f64, support_end: Option<f64>) -> PyResult<Self> {
        let inner = agelab::BirthKernel::tabulated(step, values, support_end, mu).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn c0(&self) -> Option<f64> {
        self.inner.c0()
    }

    fn beta(&self, a: f64) -> f64 {
        self.inner.beta(a)
    }

    /// `K(lambda) = ∫ beta(a) e^{-(mu + lambda) a} da`.
    fn laplace(&self, lam: Complex64) -> PyResult<Complex64> {
        self.inner.laplace(lam).map_err(to_py)
    }

    /// `gamma(a) = ∫_a^∞ beta(s) e^{-mu s} ds`.
    fn gamma_tail(&self, a: f64) -> f64 {
        self.inner.gamma_tail(a)
    }

    fn reproductive_horizon(&self) -> f64 {
        self.inner.reproductive_horizon()
    }

    fn mean_age(&self) -> f64 {
        self.inner.mean_age()
    }

    fn __repr__(&self) -> String {
        match self.inner.gamma_shape() {
            Some(s) => format!(
                "BirthKernel.shifted_gamma(tau={}, kappa={}, n={}, mu={})",
                s.tau,
                s.kappa,
                s.n,
                self.inner.mu()
            ),
            None => format!("BirthKernel.tabulated(mu={})", self.inner.mu()),
        }
    }
}

/// Birth rate `b(t)` and total population `U(t)` on a uniform time grid.
#[pyclass(name = "Trajectory", module = "agelab", frozen)]
pub struct PyTrajectory {
    inner: agelab::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn birth(&self) -> Vec<f64> {
        self.inner.birth.clone()
    }

    #[getter]
    fn population(&self) -> Option<Vec<f64>> {
        self.inner.population.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Trajectory(steps={}, dt={})", self.inner.len().saturating_sub(1), self.inner.dt)
    }
}

#[pyclass(name = "HopfPoint", module = "agelab", frozen, get_all)]
pub struct PyHopfPoint {
    k: u32,
    omega: f64,
    alpha: f64,
    transversality_re: f64,
}

#[pymethods]
impl PyHopfPoint {
    fn __repr__(&self) -> String {
        format!(
            "HopfPoint(k={}, omega={}, alpha={}, transversality_re={})",
            self.k, self.omega, self.alpha, self.transversality_re
        )
    }
}

impl From<agelab::HopfPoint> for PyHopfPoint {
    fn from(h: agelab::HopfPoint) -> Self {
        Self {
            k: h.k,
            omega: h.omega,
            alpha: h.alpha,
            transversality_re: h.transversality_re,
        }
    }
}

fn run(
    kernel: &PyBirthKernel,
    law: BirthLaw,
    u0: Vec<f64>,
    da: f64,
    dt: f64,
    horizon: f64,
    max_age: Option<f64>,
) -> PyResult<PyTrajectory> {
    let u0 = AgeProfile::new(da, u0).map_err(to_py)?.resample(dt).map_err(to_py)?;
    let config = match max_age {
        Some(a) => SimConfig::new(dt, horizon, a),
        None => SimConfig::with_default_age(dt, horizon, &kernel.inner, &u0),
    }
    .map_err(to_py)?;
    let inner = match law {
        BirthLaw::Ricker { alpha } => {
            let params = ModelParams::new(alpha, kernel.inner.clone()).map_err(to_py)?;
            agelab::solve_renewal(&params, &u0, &config)
        }
        law => agelab::solve_with_law(&kernel.inner, law, &u0, &config),
    }
    .map_err(to_py)?;
    Ok(PyTrajectory { inner })
}

/// Integrates the nonlinear renewal equation from the age density `u0`
/// sampled with spacing `da`.
#[pyfunction]
#[pyo3(signature = (alpha, kernel, u0, da, dt, horizon, max_age = None))]
fn simulate(
    alpha: f64,
    kernel: &PyBirthKernel,
    u0: Vec<f64>,
    da: f64,
    dt: f64,
    horizon: f64,
    max_age: Option<f64>,
) -> PyResult<PyTrajectory> {
    run(kernel, BirthLaw::Ricker { alpha }, u0, da, dt, horizon, max_age)
}

/// Same scheme with the linear birth law `b = m x`.
#[pyfunction]
#[pyo3(signature = (multiplier, kernel, u0, da, dt, horizon, max_age = None))]
fn simulate_linear(
    multiplier: f64,
    kernel: &PyBirthKernel,
    u0: Vec<f64>,
    da: f64,
    dt: f64,
    horizon: f64,
    max_age: Option<f64>,
) -> PyResult<PyTrajectory> {
    run(kernel, BirthLaw::Linear { multiplier }, u0, da, dt, horizon, max_age)
}

/// `u(t, ·)` on the trajectory's age grid.
#[pyfunction]
fn reconstruct_profile(u0: Vec<f64>, da: f64, traj: &PyTrajectory, mu: f64, t: f64) -> PyResult<Vec<f64>> {
    let u0 = AgeProfile::new(da, u0).map_err(to_py)?;
    let p = agelab::reconstruct_profile(&u0, &traj.inner, mu, t).map_err(to_py)?;
    Ok(p.values)
}

/// Delay-equation limit `b(t) = alpha f(b(t - tau))` from a constant history.
#[pyfunction]
fn difference_limit(alpha: f64, tau: f64, history: f64, dt: f64, horizon: f64) -> PyResult<PyTrajectory> {
    let inner = agelab::simulate_difference_limit(alpha, tau, |_| history, dt, horizon).map_err(to_py)?;
    Ok(PyTrajectory { inner })
}

#[pyfunction]
fn ricker(alpha: f64, x: f64) -> PyResult<f64> {
    agelab::ricker(alpha, x).map_err(to_py)
}

#[pyfunction]
fn ricker_orbit(alpha: f64, x0: f64, iterations: usize) -> PyResult<Vec<f64>> {
    core_ricker_orbit(alpha, x0, iterations).map_err(to_py)
}

/// `(u_bar0, values)` of `ū(a) = ln(alpha) e^{-mu a}` on `[0, max_age]`.
#[pyfunction]
fn positive_equilibrium(alpha: f64, mu: f64, da: f64, max_age: f64) -> PyResult<(f64, Vec<f64>)> {
    let eq = diagnostics::positive_equilibrium(alpha, mu, da, max_age).map_err(to_py)?;
    Ok((eq.u_bar0, eq.profile.values))
}

#[pyfunction]
fn fisher_goh_gap(alpha: f64, u: f64) -> PyResult<f64> {
    diagnostics::fisher_goh_gap(alpha, u).map_err(to_py)
}

/// Lyapunov functional at every grid time; `None` before the history horizon.
#[pyfunction]
fn lyapunov_series(traj: &PyTrajectory, kernel: &PyBirthKernel, u_bar0: f64) -> PyResult<Vec<Option<f64>>> {
    diagnostics::lyapunov_series(&traj.inner, &kernel.inner, u_bar0).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (traj, fraction = 0.2))]
fn tail_amplitude(traj: &PyTrajectory, fraction: f64) -> f64 {
    diagnostics::tail_amplitude(&traj.inner, fraction)
}

/// Largest excess of `U(t)` over the dissipativity bound.
#[pyfunction]
fn dissipativity_check(traj: &PyTrajectory, u0_mass: f64, alpha: f64, mu: f64) -> PyResult<f64> {
    diagnostics::dissipativity_check(&traj.inner, u0_mass, alpha, mu).map_err(to_py)
}

/// Real root of `m K(lambda) = 1`.
#[pyfunction]
fn dominant_eigenvalue(multiplier: f64, kernel: &PyBirthKernel) -> PyResult<f64> {
    spectral::dominant_eigenvalue(multiplier, &kernel.inner)
        .map(|r| r.lambda)
        .map_err(to_py)
}

#[pyfunction]
fn hopf_point(k: u32, tau: f64, kappa: f64, n: u32, mu: f64) -> PyResult<PyHopfPoint> {
    spectral::hopf_point(k, GammaShape::new(tau, kappa, n), mu)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn hopf_locus(k_max: u32, tau: f64, kappa: f64, n: u32, mu: f64) -> PyResult<Vec<PyHopfPoint>> {
    spectral::hopf_locus(k_max, GammaShape::new(tau, kappa, n), mu)
        .map(|v| v.into_iter().map(Into::into).collect())
        .map_err(to_py)
}

#[pymodule(name = "agelab")]
pub fn agelab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBirthKernel>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyHopfPoint>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_linear, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_profile, m)?)?;
    m.add_function(wrap_pyfunction!(difference_limit, m)?)?;
    m.add_function(wrap_pyfunction!(ricker, m)?)?;
    m.add_function(wrap_pyfunction!(ricker_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(positive_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_goh_gap, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_series, m)?)?;
    m.add_function(wrap_pyfunction!(tail_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(dissipativity_check, m)?)?;
    m.add_function(wrap_pyfunction!(dominant_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_point, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_locus, m)?)?;
    Ok(())
}
