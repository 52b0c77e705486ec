//! Numerical laboratory for the age-structured population model
//!
//! ```text
//! (∂t + ∂a) u = -mu u,   u(t, 0) = alpha f(∫ beta(a) u(t, a) da),   f(x) = x e^{-x}
//! ```
//!
//! The crate integrates the birth-rate renewal equation, reconstructs age
//! profiles along characteristics, evaluates the Lyapunov functional that
//! certifies global stability for `1 < alpha <= e^2`, and locates the Hopf
//! bifurcation points of the linearization for shifted Gamma kernels.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod renewal;
pub mod roots;
pub mod spectral;

pub use error::{Error, Result};
pub use kernel::{make_shifted_gamma, BirthKernel, DiscreteKernel, GammaShape, KernelForm};
pub use renewal::{
    reconstruct_profile, ricker, simulate_difference_limit, solve_renewal, solve_with_law, total_population,
    AgeProfile, BirthLaw, ModelParams, SimConfig, Trajectory,
};
pub use spectral::{CharRoot, HopfPoint};
