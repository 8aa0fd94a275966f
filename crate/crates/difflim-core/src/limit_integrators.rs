//! Integrators for the large-N limits of the chain.
//!
//! The energy statistic converges to the deterministic ODE
//!
//! ```text
//! dS/dt = A_ell(S(t)) ,    S(0) = S_0 ,
//! ```
//!
//! solved here by fixed-step classical Runge-Kutta with cubic-Hermite dense
//! output ([`integrate_ode`]). Coordinates converge jointly to the
//! time-inhomogeneous SDE
//!
//! ```text
//! dx = -(x + C grad Psi(x)) D_ell(S(t)) dt + sqrt(Γ_ell(S(t))) dW ,
//! ```
//!
//! where `W` is a C-Brownian motion (coordinate `j` carries intensity
//! `lambda_j`). [`integrate_limit_sde`] discretises the first `N` coordinates
//! by Euler-Maruyama on a uniform grid, reading `S(t)` from a previously
//! computed [`OdeSolution`]. Once `S` has equilibrated at `1` the SDE becomes
//! the stationary Langevin diffusion
//!
//! ```text
//! dz = -h_ell (z + C grad Psi(z)) dt + sqrt(2 h_ell) dW ,
//! ```
//!
//! provided by [`integrate_stationary_sde`]. Its coefficients are evaluated
//! through the same guarded functions at the fixed point `S = 1`, where
//! `D_ell(1) = h_ell` and `Γ_ell(1) = 2 h_ell` hold bit-for-bit, so a
//! stationary path coincides exactly with a limit-SDE path driven by the
//! constant-one ODE solution under a shared seed.
//!
//! Replica `r` draws its initial condition and all of its noise from stream
//! `(Sde, r)`, so ensembles are reproducible and independent of thread count.

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamTag};
use crate::rwm_chain::InitialCondition;
use crate::scalar_laws::{a_ell_ext, d_ell_guarded, gamma_ell_guarded, StepParam};
use crate::spectral_model::{s_of, CovarianceSpectrum, SpectralVector, TargetFunctional};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Default ODE step.
pub const DEFAULT_ODE_DT: f64 = 1e-3;

/// Largest ODE step the fourth-order error budget tolerates.
const MAX_ODE_DT: f64 = 1e-2;

/// Largest Euler-Maruyama step the first-order error budget tolerates.
const MAX_SDE_DT: f64 = 1e-3;

/// Dense solution of `dS/dt = A_ell(S)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    ell: f64,
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl OdeSolution {
    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Actual grid step (the requested `dt` shrunk to divide the horizon).
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Node values `S(n step)`, `n = 0..=num_steps`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// Evaluates `S(t)` by cubic Hermite interpolation on the grid cell
    /// containing `t`, using the exact right-hand side as node slopes. Node
    /// queries return the stored values unchanged.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !t.is_finite() || t < 0.0 || t > horizon + 1e-9 * horizon.max(1.0) {
            return Err(Error::Domain(format!(
                "time {t} outside the solved range [0, {horizon}]"
            )));
        }
        let mut u = t / self.step;
        if (u - u.round()).abs() < 1e-9 {
            u = u.round();
        }
        let k = (u.floor() as usize).min(self.values.len() - 2);
        let theta = u - k as f64;
        if theta == 0.0 {
            return Ok(self.values[k]);
        }
        let (s0, s1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.derivs[k] * self.step, self.derivs[k + 1] * self.step);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * s0
            + (t3 - 2.0 * t2 + theta) * m0
            + (-2.0 * t3 + 3.0 * t2) * s1
            + (t3 - t2) * m1)
    }
}

/// Solves `dS/dt = A_ell(S)` from `s0 >= 0` over `[0, horizon]` with
/// fixed-step classical Runge-Kutta.
///
/// The step is the largest value `<= dt` that divides the horizon evenly;
/// `dt` itself must lie in `(0, 1e-2]`. The right-hand side is the total
/// extension `a_ell_ext`, so intermediate stages may harmlessly cross zero.
pub fn integrate_ode(ell: f64, s0: f64, horizon: f64, dt: f64) -> Result<OdeSolution> {
    let p = StepParam::new(ell)?;
    if !(s0 >= 0.0) || !s0.is_finite() {
        return Err(Error::Domain(format!(
            "initial energy s0 must be nonnegative and finite (got {s0})"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!(
            "horizon must be positive and finite (got {horizon})"
        )));
    }
    if !(dt > 0.0) || dt > MAX_ODE_DT {
        return Err(Error::Domain(format!(
            "ODE step dt must lie in (0, {MAX_ODE_DT}] (got {dt})"
        )));
    }
    let n_steps = ((horizon / dt - 1e-9).ceil() as usize).max(1);
    let h = horizon / n_steps as f64;

    let f = |x: f64| a_ell_ext(&p, x);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut derivs = Vec::with_capacity(n_steps + 1);
    let mut s = s0;
    values.push(s);
    derivs.push(f(s));
    let band = s0.max(1.0) + 1e-8;
    for _ in 0..n_steps {
        let k1 = f(s);
        let k2 = f(s + 0.5 * h * k1);
        let k3 = f(s + 0.5 * h * k2);
        let k4 = f(s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        debug_assert!(
            (0.0..=band).contains(&s),
            "ODE solution left its invariant band [0, {band}]: S = {s}"
        );
        values.push(s);
        derivs.push(f(s));
    }
    Ok(OdeSolution {
        ell,
        step: h,
        values,
        derivs,
    })
}

/// Full specification of a limit-SDE run.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeConfig {
    spectrum: CovarianceSpectrum,
    psi: TargetFunctional,
    ell: f64,
    horizon_t: f64,
    dt: f64,
    init: InitialCondition,
    seed: u64,
    track_coords: Vec<usize>,
}

impl SdeConfig {
    pub fn new(
        spectrum: CovarianceSpectrum,
        psi: TargetFunctional,
        ell: f64,
        horizon_t: f64,
        dt: f64,
        init: InitialCondition,
        seed: u64,
    ) -> Result<Self> {
        StepParam::new(ell)?;
        if !(horizon_t > 0.0) || !horizon_t.is_finite() {
            return Err(Error::Domain(format!(
                "horizon T must be positive and finite (got {horizon_t})"
            )));
        }
        if !(dt > 0.0) || dt > MAX_SDE_DT {
            return Err(Error::Domain(format!(
                "SDE step dt must lie in (0, {MAX_SDE_DT}] (got {dt})"
            )));
        }
        if let InitialCondition::ScaledGaussian(tau) = init {
            if !(tau > 0.0) {
                return Err(Error::Domain(format!(
                    "ScaledGaussian scale tau must be positive (got {tau})"
                )));
            }
        }
        psi.check_weight_dims(&spectrum)?;
        Ok(Self {
            spectrum,
            psi,
            ell,
            horizon_t,
            dt,
            init,
            seed,
            track_coords: Vec::new(),
        })
    }

    /// Records the trajectories of the given 1-based coordinates.
    pub fn with_track_coords(mut self, coords: Vec<usize>) -> Result<Self> {
        for &j in &coords {
            if j == 0 || j > self.spectrum.n() {
                return Err(Error::Domain(format!(
                    "tracked coordinate {j} outside 1..={}",
                    self.spectrum.n()
                )));
            }
        }
        self.track_coords = coords;
        Ok(self)
    }

    pub fn spectrum(&self) -> &CovarianceSpectrum {
        &self.spectrum
    }

    pub fn psi(&self) -> &TargetFunctional {
        &self.psi
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn horizon_t(&self) -> f64 {
        self.horizon_t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn init(&self) -> InitialCondition {
        self.init
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn track_coords(&self) -> &[usize] {
        &self.track_coords
    }

    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    /// Number of Euler-Maruyama steps: `dt` shrunk to divide the horizon.
    pub fn num_steps(&self) -> usize {
        ((self.horizon_t / self.dt - 1e-9).ceil() as usize).max(1)
    }

    /// Actual uniform step `horizon / num_steps <= dt`.
    pub fn step(&self) -> f64 {
        self.horizon_t / self.num_steps() as f64
    }
}

/// One discretised SDE trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SdePath {
    times: Vec<f64>,
    s_values: Vec<f64>,
    tracked_indices: Vec<usize>,
    tracked_values: Vec<Vec<f64>>,
    final_state: SpectralVector,
}

impl SdePath {
    /// Grid `t_n = n step`, `n = 0..=num_steps`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `S(x(t_n))` along the path.
    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    /// 1-based indices of the tracked coordinates.
    pub fn tracked_indices(&self) -> &[usize] {
        &self.tracked_indices
    }

    /// Trajectory of tracked coordinate `j` (1-based), if tracked.
    pub fn tracked_coord(&self, j: usize) -> Option<&[f64]> {
        self.tracked_indices
            .iter()
            .position(|&idx| idx == j)
            .map(|pos| self.tracked_values[pos].as_slice())
    }

    /// Coordinates at the final time.
    pub fn final_state(&self) -> &SpectralVector {
        &self.final_state
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("paths have at least one state")
    }
}

/// Euler-Maruyama with per-step coefficients `coeff[n] = (d_n, g_n)`:
///
/// ```text
/// x_{n+1,j} = x_{n,j} + h (-x_{n,j} - (C grad Psi)_{n,j}) d_n + g_n lambda_j eta_{n,j}
/// ```
///
/// where `g_n` already folds in `sqrt(h)`. Kept separate from coefficient
/// construction so the two public integrators share one arithmetic path.
fn em_integrate(cfg: &SdeConfig, coeff: &[(f64, f64)], replica: u64) -> Result<SdePath> {
    let mut rng = stream_rng(cfg.seed, StreamTag::Sde, replica);
    let n = cfg.n();
    let h = cfg.step();
    let spectrum = &cfg.spectrum;
    let lambda = spectrum.lambda();

    let mut x: Vec<f64> = match cfg.init {
        InitialCondition::DeterministicProfile(c) => lambda.iter().map(|l| c * l).collect(),
        InitialCondition::ScaledGaussian(tau) => lambda
            .iter()
            .map(|l| tau * l * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        InitialCondition::StationaryGaussian => lambda
            .iter()
            .map(|l| l * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    };
    // Per-coordinate drift factor: -(x + C grad Psi)_j = -(1 + lambda_j^2 g_j) x_j.
    let decay: Vec<f64> = (0..n)
        .map(|j| 1.0 + spectrum.lambda_sq()[j] * cfg.psi.grad_weight(spectrum, j))
        .collect();

    let steps = coeff.len();
    let mut times = Vec::with_capacity(steps + 1);
    let mut s_values = Vec::with_capacity(steps + 1);
    let mut tracked_values: Vec<Vec<f64>> = cfg
        .track_coords
        .iter()
        .map(|_| Vec::with_capacity(steps + 1))
        .collect();

    let record = |x: &[f64], s_values: &mut Vec<f64>, tracked: &mut Vec<Vec<f64>>| -> Result<()> {
        let v = SpectralVector::new(x.to_vec());
        s_values.push(s_of(&v, spectrum)?);
        for (slot, &j) in tracked.iter_mut().zip(&cfg.track_coords) {
            slot.push(x[j - 1]);
        }
        Ok(())
    };

    times.push(0.0);
    record(&x, &mut s_values, &mut tracked_values)?;
    for (step_idx, &(d, g)) in coeff.iter().enumerate() {
        for j in 0..n {
            let eta: f64 = rng.sample(StandardNormal);
            x[j] += h * (-decay[j] * x[j]) * d + g * lambda[j] * eta;
        }
        times.push((step_idx + 1) as f64 * h);
        record(&x, &mut s_values, &mut tracked_values)?;
    }

    Ok(SdePath {
        times,
        s_values,
        tracked_indices: cfg.track_coords.clone(),
        tracked_values,
        final_state: SpectralVector::new(x),
    })
}

fn limit_coefficients(cfg: &SdeConfig, ode: &OdeSolution) -> Result<Vec<(f64, f64)>> {
    if ode.ell() != cfg.ell {
        return Err(Error::GridMismatch(format!(
            "ODE solution was computed for ell = {} but the SDE uses ell = {}",
            ode.ell(),
            cfg.ell
        )));
    }
    if ode.horizon() + 1e-9 < cfg.horizon_t {
        return Err(Error::GridMismatch(format!(
            "ODE horizon {} is shorter than the SDE horizon {}",
            ode.horizon(),
            cfg.horizon_t
        )));
    }
    let p = StepParam::new(cfg.ell)?;
    let h = cfg.step();
    (0..cfg.num_steps())
        .map(|n| {
            let s = ode.eval(n as f64 * h)?;
            Ok((
                d_ell_guarded(&p, s),
                (h * gamma_ell_guarded(&p, s)).sqrt(),
            ))
        })
        .collect()
}

fn stationary_coefficients(cfg: &SdeConfig) -> Result<Vec<(f64, f64)>> {
    let p = StepParam::new(cfg.ell)?;
    let h = cfg.step();
    // Evaluated at the fixed point S = 1: D = h_ell and Γ = 2 h_ell exactly.
    let pair = (
        d_ell_guarded(&p, 1.0),
        (h * gamma_ell_guarded(&p, 1.0)).sqrt(),
    );
    Ok(vec![pair; cfg.num_steps()])
}

/// Euler-Maruyama discretisation of the time-inhomogeneous limit SDE, with
/// `S(t)` read from `ode`. Replica `r` is fully determined by `(seed, r)`.
pub fn integrate_limit_sde(cfg: &SdeConfig, ode: &OdeSolution, replica: u64) -> Result<SdePath> {
    let coeff = limit_coefficients(cfg, ode)?;
    em_integrate(cfg, &coeff, replica)
}

/// Runs `replicas` limit-SDE paths in parallel, ordered by replica index.
pub fn integrate_limit_sde_ensemble(
    cfg: &SdeConfig,
    ode: &OdeSolution,
    replicas: u64,
) -> Result<Vec<SdePath>> {
    let coeff = limit_coefficients(cfg, ode)?;
    (0..replicas)
        .into_par_iter()
        .map(|r| em_integrate(cfg, &coeff, r))
        .collect()
}

/// Euler-Maruyama discretisation of the stationary diffusion
/// `dz = -h_ell (z + C grad Psi) dt + sqrt(2 h_ell) dW`.
pub fn integrate_stationary_sde(cfg: &SdeConfig, replica: u64) -> Result<SdePath> {
    let coeff = stationary_coefficients(cfg)?;
    em_integrate(cfg, &coeff, replica)
}

/// Runs `replicas` stationary paths in parallel, ordered by replica index.
pub fn integrate_stationary_sde_ensemble(cfg: &SdeConfig, replicas: u64) -> Result<Vec<SdePath>> {
    let coeff = stationary_coefficients(cfg)?;
    (0..replicas)
        .into_par_iter()
        .map(|r| em_integrate(cfg, &coeff, r))
        .collect()
}
