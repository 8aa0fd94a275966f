//! The named experiments. Each takes the parsed configuration and an output
//! directory, writes its CSV artifacts, and returns a [`Verdict`] whose
//! checks decide the process exit code. Preconditions on resources (replica
//! counts, grid sizes, admissible targets) are refused with an error before
//! any work is scheduled.
//!
//! [`Verdict`]: crate::report::Verdict

mod acceptance_scaling;
mod converge;
mod ode;
mod sde_compare;
mod simulate;
mod stationarity;
mod validate_scalars;
mod wass_rate;

pub use acceptance_scaling::run_acceptance_scaling;
pub use converge::run_converge;
pub use ode::run_ode;
pub use sde_compare::run_sde_compare;
pub use simulate::run_simulate;
pub use stationarity::run_stationarity;
pub use validate_scalars::run_validate_scalars;
pub use wass_rate::run_wass_rate;
