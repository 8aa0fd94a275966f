//! # difflim-core
//!
//! Simulation of the random walk Metropolis (RWM) algorithm in the spectral
//! coordinates of an infinite-dimensional Gaussian reference measure, together
//! with the deterministic and stochastic limits that describe its large-N
//! behaviour.
//!
//! The target measure on the first `N` spectral coordinates is
//!
//! ```text
//! dpi(x) ∝ exp(-Psi(x)) dpi0(x),      pi0 = N(0, C),   C phi_j = lambda_j^2 phi_j,
//! ```
//!
//! with `lambda_j = j^{-kappa}`. The chain moves by symmetric Gaussian
//! proposals scaled like `N^{-1/2}` and accepted with probability `1 ∧ e^Q`.
//! As `N` grows, the energy statistic `S_k = (1/N) Σ x_j^2 / lambda_j^2`
//! follows the ODE `dS = A_ell(S) dt` and the coordinates follow an SDE with
//! drift multiplier `D_ell(S)` and diffusion multiplier `Γ_ell(S)`.
//!
//! Modules:
//!
//! * [`spectral_model`]: covariance spectrum, spectral vectors, Sobolev-type
//!   norms, and the change-of-measure functional `Psi`.
//! * [`scalar_laws`]: the closed-form scalar functions `Φ`, `D_ell`, `Γ_ell`,
//!   `A_ell`, `h_ell`, their derivatives, and Gaussian expectation identities.
//! * [`rwm_chain`]: the Metropolis chain, its `S` statistic, continuous-time
//!   interpolants, and one-step drift estimators.
//! * [`limit_integrators`]: fixed-step RK4 for the limiting ODE and
//!   Euler-Maruyama for the limiting SDEs.
//! * [`diagnostics`]: empirical Wasserstein-1, Kolmogorov-Smirnov, path
//!   distances, and ensemble summaries.
//!
//! All randomness flows through counter-based generators seeded from a single
//! `u64` (see [`rng`]), so every ensemble is bit-reproducible at any level of
//! parallelism.

pub mod diagnostics;
pub mod error;
pub mod limit_integrators;
pub mod rng;
pub mod rwm_chain;
pub mod scalar_laws;
pub mod spectral_model;

pub use error::{Error, Result};
