//! The random walk Metropolis chain in spectral coordinates.
//!
//! One step from state `x` in dimension `N`:
//!
//! ```text
//! proposal    y_j = x_j + sqrt(2 ell^2 / N^beta) lambda_j xi_j ,   xi_j iid N(0,1)
//! log-ratio   Q   = (1/2) Σ x_j^2/lambda_j^2 - (1/2) Σ y_j^2/lambda_j^2 + Psi(x) - Psi(y)
//! accept      with probability 1 ∧ e^Q
//! ```
//!
//! The default scaling `beta = 1` produces the diffusion limit; other `beta`
//! send the acceptance probability to one (`beta > 1`) or zero (`beta < 1`).
//!
//! `Q` splits as `Q = R + r` where, with `zeta_j = x_j/lambda_j + lambda_j
//! (grad Psi)_j` and `delta^2 = 2 ell^2 / N^beta`,
//!
//! ```text
//! R = -(delta^2/2) Σ xi_j^2 - delta <zeta, xi> ,
//! ```
//!
//! and the remainder `r` (the second-order Taylor term of `Psi`) is `O(1/N)`.
//! The Gaussian surrogate `Z = -ell^2 N^{1-beta} - delta Σ (x_j/lambda_j) xi_j`
//! has the law `N(-ell^2 N^{1-beta}, 2 ell^2 N^{1-beta} S(x))` that `R`
//! approaches for large `N`.
//!
//! The energy statistic `S_k = S(x_k)` is tracked incrementally: the same
//! Gaussian sum that enters `Q` yields `ΔS` exactly, and the cache is
//! recomputed from coordinates every [`RECOMPUTE_PERIOD`] steps to kill
//! floating-point drift. Chains embed into continuous time at speed `N`
//! (`t_k = k/N`), giving the piecewise-linear interpolants whose large-N
//! limits are the ODE and SDE of [`crate::limit_integrators`].

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamTag};
use crate::spectral_model::{
    compensated_sum, psi_value, s_of, CovarianceSpectrum, SpectralVector, TargetFunctional,
};
use rand::distributions::OpenClosed01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Steps between exact recomputations of the cached `S` statistic.
const RECOMPUTE_PERIOD: u32 = 1000;

/// Tolerance on the incremental `S` cache against exact recomputation.
const S_CACHE_TOLERANCE: f64 = 1e-10;

/// How the chain is started.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `x_j = c lambda_j`, giving `S_0 = c^2` for every `N`.
    DeterministicProfile(f64),
    /// `x_j = tau lambda_j rho_j` with `rho_j` iid standard normal, so
    /// `S_0 -> tau^2` almost surely as `N` grows.
    ScaledGaussian(f64),
    /// `ScaledGaussian(1)`: exact stationarity for `Psi = 0` only.
    StationaryGaussian,
}

/// Full specification of a chain run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    spectrum: CovarianceSpectrum,
    psi: TargetFunctional,
    ell: f64,
    beta: f64,
    horizon_t: f64,
    init: InitialCondition,
    seed: u64,
    track_coords: Vec<usize>,
    full_diagnostics: bool,
    forced_accept: bool,
}

impl ChainConfig {
    /// Builds a config with `beta = 1`, no tracked coordinates, thinned
    /// diagnostics, and Metropolis acceptance.
    pub fn new(
        spectrum: CovarianceSpectrum,
        psi: TargetFunctional,
        ell: f64,
        horizon_t: f64,
        init: InitialCondition,
        seed: u64,
    ) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::Domain(format!(
                "proposal scale ell must be positive and finite (got {ell})"
            )));
        }
        if !(horizon_t > 0.0) || !horizon_t.is_finite() {
            return Err(Error::Domain(format!(
                "horizon T must be positive and finite (got {horizon_t})"
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
            beta: 1.0,
            horizon_t,
            init,
            seed,
            track_coords: Vec::new(),
            full_diagnostics: false,
            forced_accept: false,
        })
    }

    /// Sets the proposal-scaling exponent `beta > 0`.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "beta must be positive and finite (got {beta})"
            )));
        }
        self.beta = beta;
        Ok(self)
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

    /// Keeps a `StepRecord` for every step instead of the default thinning
    /// (one record every `ceil(N/64)` steps).
    pub fn with_full_diagnostics(mut self) -> Self {
        self.full_diagnostics = true;
        self
    }

    /// Accepts every proposal regardless of `Q` (for the exact
    /// forced-acceptance identity `E S_{k+1} = E S_k + 2 ell^2 / N`).
    pub fn with_forced_accept(mut self) -> Self {
        self.forced_accept = true;
        self
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

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon_t(&self) -> f64 {
        self.horizon_t
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

    pub fn forced_accept(&self) -> bool {
        self.forced_accept
    }

    /// Chain dimension `N`.
    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    /// Number of transitions: `floor(T N)`. The recorded path has one more
    /// state than this.
    pub fn num_steps(&self) -> usize {
        (self.horizon_t * self.n() as f64).floor() as usize
    }

    /// Proposal standard-deviation factor `delta = sqrt(2 ell^2 / N^beta)`.
    fn proposal_scale(&self) -> f64 {
        (2.0 * self.ell * self.ell / (self.n() as f64).powf(self.beta)).sqrt()
    }

    /// Diagnostics thinning stride `ceil(N/64)` (1 when full retention is on).
    fn diagnostics_stride(&self) -> usize {
        if self.full_diagnostics {
            1
        } else {
            self.n().div_ceil(64)
        }
    }
}

/// Mutable state of one chain replica.
#[derive(Debug, Clone)]
pub struct ChainState {
    x: SpectralVector,
    k: u64,
    s_current: f64,
    rng: ChaCha8Rng,
    steps_since_recompute: u32,
}

impl ChainState {
    /// Draws the initial state for `replica` on its own RNG stream.
    pub fn init(cfg: &ChainConfig, replica: u64) -> Result<Self> {
        let mut rng = stream_rng(cfg.seed, StreamTag::Chain, replica);
        let lambda = cfg.spectrum.lambda();
        let coords: Vec<f64> = match cfg.init {
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
        let x = SpectralVector::new(coords);
        let s_current = s_of(&x, &cfg.spectrum)?;
        Ok(Self {
            x,
            k: 0,
            s_current,
            rng,
            steps_since_recompute: 0,
        })
    }

    /// Current coordinates.
    pub fn x(&self) -> &SpectralVector {
        &self.x
    }

    /// Step index `k`.
    pub fn k(&self) -> u64 {
        self.k
    }

    /// Cached `S(x_k)`.
    pub fn s_current(&self) -> f64 {
        self.s_current
    }
}

/// Draws a proposal `(y, xi)` from `x` using the supplied generator.
fn propose_from(
    x: &SpectralVector,
    cfg: &ChainConfig,
    rng: &mut ChaCha8Rng,
) -> (SpectralVector, SpectralVector) {
    let delta = cfg.proposal_scale();
    let lambda = cfg.spectrum.lambda();
    let n = cfg.n();
    let mut xi = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for j in 0..n {
        let noise: f64 = rng.sample(StandardNormal);
        xi.push(noise);
        y.push(x.coords()[j] + delta * lambda[j] * noise);
    }
    (SpectralVector::new(y), SpectralVector::new(xi))
}

/// Draws a proposal from the state's own stream; returns `(y, xi)`.
pub fn propose(state: &mut ChainState, cfg: &ChainConfig) -> (SpectralVector, SpectralVector) {
    propose_from(&state.x, cfg, &mut state.rng)
}

/// The Gaussian part of the log acceptance ratio,
/// `(1/2) Σ (x_j^2 - y_j^2) / lambda_j^2`, summed in the cancellation-stable
/// form `(x-y)(x+y)`.
fn gauss_log_ratio(x: &SpectralVector, y: &SpectralVector, spectrum: &CovarianceSpectrum) -> f64 {
    0.5 * compensated_sum(
        x.coords()
            .iter()
            .zip(y.coords())
            .zip(spectrum.inv_lambda_sq())
            .map(|((xj, yj), il2)| (xj - yj) * (xj + yj) * il2),
    )
}

/// Log acceptance ratio
/// `Q = (1/2) Σ x_j^2/lambda_j^2 - (1/2) Σ y_j^2/lambda_j^2 + Psi(x) - Psi(y)`.
///
/// Antisymmetric in `(x, y)` by construction.
pub fn log_q(x: &SpectralVector, y: &SpectralVector, cfg: &ChainConfig) -> Result<f64> {
    if x.len() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            got: x.len(),
        });
    }
    if y.len() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            got: y.len(),
        });
    }
    let gauss = gauss_log_ratio(x, y, &cfg.spectrum);
    let psi_x = psi_value(&cfg.psi, x, &cfg.spectrum)?;
    let psi_y = psi_value(&cfg.psi, y, &cfg.spectrum)?;
    Ok(gauss + psi_x - psi_y)
}

/// The split of `Q` produced by [`decompose_q`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QDecomposition {
    /// Full log acceptance ratio.
    pub q: f64,
    /// Gaussian-dominant part `R`.
    pub r: f64,
    /// Remainder `q - r`, of size `O(1/N)`.
    pub r_small: f64,
    /// Gaussian surrogate `Z` computed from the same noise.
    pub z: f64,
}

/// Shared kernel: decomposition plus the Gaussian sum that also yields `ΔS`.
fn decompose_parts(
    x: &SpectralVector,
    y: &SpectralVector,
    xi: &SpectralVector,
    cfg: &ChainConfig,
) -> Result<(QDecomposition, f64)> {
    let n = cfg.n();
    let nf = n as f64;
    let spectrum = &cfg.spectrum;
    let delta = cfg.proposal_scale();
    let half_delta_sq = cfg.ell * cfg.ell / nf.powf(cfg.beta);

    let gauss = gauss_log_ratio(x, y, spectrum);
    let psi_x = psi_value(&cfg.psi, x, spectrum)?;
    let psi_y = psi_value(&cfg.psi, y, spectrum)?;
    let q = gauss + psi_x - psi_y;

    let xi_sq = compensated_sum(xi.coords().iter().map(|v| v * v));
    // zeta_j = x_j / lambda_j + lambda_j (grad Psi)_j.
    let zeta_dot_xi = compensated_sum((0..n).map(|j| {
        let xj = x.coords()[j];
        let zeta_j = xj * spectrum.inv_lambda()[j]
            + spectrum.lambda()[j] * cfg.psi.grad_weight(spectrum, j) * xj;
        zeta_j * xi.coords()[j]
    }));
    let white_dot_xi = compensated_sum(
        (0..n).map(|j| x.coords()[j] * spectrum.inv_lambda()[j] * xi.coords()[j]),
    );

    let r = -half_delta_sq * xi_sq - delta * zeta_dot_xi;
    let r_small = q - r;
    let z = -cfg.ell * cfg.ell * nf.powf(1.0 - cfg.beta) - delta * white_dot_xi;
    Ok((QDecomposition { q, r, r_small, z }, gauss))
}

/// Splits the log ratio for the proposal generated from `x` by noise `xi`:
/// returns `(q, r, r_small, z)` as a [`QDecomposition`].
pub fn decompose_q(
    x: &SpectralVector,
    xi: &SpectralVector,
    cfg: &ChainConfig,
) -> Result<QDecomposition> {
    if x.len() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            got: x.len(),
        });
    }
    if xi.len() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            got: xi.len(),
        });
    }
    let delta = cfg.proposal_scale();
    let lambda = cfg.spectrum.lambda();
    let y = SpectralVector::new(
        x.coords()
            .iter()
            .zip(xi.coords())
            .zip(lambda)
            .map(|((xj, xij), l)| xj + delta * l * xij)
            .collect(),
    );
    Ok(decompose_parts(x, &y, xi, cfg)?.0)
}

/// Diagnostics of one executed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub accepted: bool,
    pub q: f64,
    pub r: f64,
    pub r_small: f64,
    pub z: f64,
    /// `S_{k+1} - S_k` (zero on rejection).
    pub delta_s: f64,
}

/// Advances the state by one Metropolis step and reports its diagnostics.
///
/// Acceptance compares `log u < Q` with `u` uniform on `(0, 1]`, so large
/// `|Q|` never overflows. On acceptance the cached `S` advances by the exact
/// coordinate increment `ΔS = -2 g / N` where `g` is the Gaussian sum of `Q`;
/// every [`RECOMPUTE_PERIOD`] steps the cache is recomputed exactly and
/// checked to [`S_CACHE_TOLERANCE`].
pub fn step(state: &mut ChainState, cfg: &ChainConfig) -> Result<StepRecord> {
    let (y, xi) = propose_from(&state.x, cfg, &mut state.rng);
    let (dec, gauss) = decompose_parts(&state.x, &y, &xi, cfg)?;
    let u: f64 = state.rng.sample(OpenClosed01);
    let accepted = cfg.forced_accept || u.ln() < dec.q;

    let delta_s = if accepted {
        let ds = -2.0 * gauss / cfg.n() as f64;
        state.x = y;
        ds
    } else {
        0.0
    };
    state.s_current += delta_s;
    state.k += 1;
    state.steps_since_recompute += 1;
    if state.steps_since_recompute >= RECOMPUTE_PERIOD {
        let exact = s_of(&state.x, &cfg.spectrum)?;
        assert!(
            (exact - state.s_current).abs() <= S_CACHE_TOLERANCE,
            "incremental S cache drifted: cached {} vs exact {}",
            state.s_current,
            exact
        );
        state.s_current = exact;
        state.steps_since_recompute = 0;
    }
    Ok(StepRecord {
        accepted,
        q: dec.q,
        r: dec.r,
        r_small: dec.r_small,
        z: dec.z,
        delta_s,
    })
}

/// The recorded trajectory of one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    n: usize,
    times: Vec<f64>,
    s_values: Vec<f64>,
    tracked_indices: Vec<usize>,
    tracked_values: Vec<Vec<f64>>,
    accepts: Vec<bool>,
    acceptance_count: u64,
    step_diagnostics: Vec<(usize, StepRecord)>,
}

impl PathRecord {
    /// Chain dimension `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid `t_k = k / N`, `k = 0..=floor(TN)`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `S_k` along the path.
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

    /// Number of executed transitions.
    pub fn num_steps(&self) -> usize {
        self.accepts.len()
    }

    /// Total accepted transitions.
    pub fn acceptance_count(&self) -> u64 {
        self.acceptance_count
    }

    /// Per-step acceptance indicators.
    pub fn accepts(&self) -> &[bool] {
        &self.accepts
    }

    /// Thinned step diagnostics as `(step index, record)`; step `k` is the
    /// transition from state `k-1` to state `k`.
    pub fn step_diagnostics(&self) -> &[(usize, StepRecord)] {
        &self.step_diagnostics
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let t_end = *self.times.last().expect("paths have at least one state");
        if !(0.0..=t_end).contains(&t) {
            return Err(Error::Domain(format!(
                "time {t} outside the recorded range [0, {t_end}]"
            )));
        }
        // u = tN; snap to the nearest integer when within round-off so that
        // node queries are exact.
        let mut u = t * self.n as f64;
        if (u - u.round()).abs() < 1e-9 {
            u = u.round();
        }
        let k = (u.floor() as usize).min(self.times.len() - 1);
        Ok((k, u))
    }

    /// Piecewise-linear interpolant of a recorded series.
    fn interpolate(&self, series: &[f64], t: f64) -> Result<f64> {
        let (k, u) = self.locate(t)?;
        if k + 1 >= series.len() {
            return Ok(series[k]);
        }
        let w = u - k as f64;
        Ok(w * series[k + 1] + (1.0 - w) * series[k])
    }

    /// Continuous interpolant `S^{(N)}(t)`: linear between `t_k` and `t_{k+1}`.
    pub fn interpolate_s(&self, t: f64) -> Result<f64> {
        self.interpolate(&self.s_values, t)
    }

    /// Continuous interpolant of tracked coordinate `j` (1-based).
    pub fn interpolate_coord(&self, j: usize, t: f64) -> Result<f64> {
        let series = self.tracked_coord(j).ok_or_else(|| {
            Error::Domain(format!("coordinate {j} is not tracked in this path"))
        })?;
        // Borrow juggling: interpolate needs &self, so inline the body.
        let (k, u) = self.locate(t)?;
        if k + 1 >= series.len() {
            return Ok(series[k]);
        }
        let w = u - k as f64;
        Ok(w * series[k + 1] + (1.0 - w) * series[k])
    }

    /// Piecewise-constant interpolant: `S_k` on `[t_k, t_{k+1})`.
    pub fn piecewise_constant_s(&self, t: f64) -> Result<f64> {
        let (k, _) = self.locate(t)?;
        Ok(self.s_values[k])
    }

    /// Fraction of accepted steps with step index in `k_range`
    /// (1-based steps; `1..=num_steps()` covers the whole path).
    pub fn mean_acceptance(&self, k_range: std::ops::RangeInclusive<usize>) -> Result<f64> {
        let lo = (*k_range.start()).max(1);
        let hi = (*k_range.end()).min(self.accepts.len());
        if lo > hi {
            return Err(Error::EmptyInput(format!(
                "acceptance window {k_range:?} selects no steps"
            )));
        }
        let count = self.accepts[lo - 1..hi].iter().filter(|a| **a).count();
        Ok(count as f64 / (hi - lo + 1) as f64)
    }
}

/// Runs replica `replica` for `floor(TN)` steps, recording every state.
pub fn run_replica(cfg: &ChainConfig, replica: u64) -> Result<PathRecord> {
    let mut state = ChainState::init(cfg, replica)?;
    let steps = cfg.num_steps();
    let n = cfg.n();
    let stride = cfg.diagnostics_stride();

    let mut times = Vec::with_capacity(steps + 1);
    let mut s_values = Vec::with_capacity(steps + 1);
    let mut tracked_values: Vec<Vec<f64>> = cfg
        .track_coords
        .iter()
        .map(|_| Vec::with_capacity(steps + 1))
        .collect();
    let mut accepts = Vec::with_capacity(steps);
    let mut step_diagnostics = Vec::new();
    let mut acceptance_count = 0u64;

    let record =
        |state: &ChainState, s_values: &mut Vec<f64>, tracked_values: &mut Vec<Vec<f64>>| {
            s_values.push(state.s_current);
            for (slot, &j) in tracked_values.iter_mut().zip(&cfg.track_coords) {
                slot.push(state.x.coords()[j - 1]);
            }
        };

    times.push(0.0);
    record(&state, &mut s_values, &mut tracked_values);
    for k in 1..=steps {
        let rec = step(&mut state, cfg)?;
        times.push(k as f64 / n as f64);
        record(&state, &mut s_values, &mut tracked_values);
        accepts.push(rec.accepted);
        if rec.accepted {
            acceptance_count += 1;
        }
        if (k - 1) % stride == 0 {
            step_diagnostics.push((k, rec));
        }
    }

    Ok(PathRecord {
        n,
        times,
        s_values,
        tracked_indices: cfg.track_coords.clone(),
        tracked_values,
        accepts,
        acceptance_count,
        step_diagnostics,
    })
}

/// Runs replica 0.
pub fn run(cfg: &ChainConfig) -> Result<PathRecord> {
    run_replica(cfg, 0)
}

/// Runs `replicas` independent replicas in parallel. Results are ordered by
/// replica index, so any downstream aggregation is deterministic.
pub fn run_ensemble(cfg: &ChainConfig, replicas: u64) -> Result<Vec<PathRecord>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, r))
        .collect()
}

/// Samples of one-step quantities from a frozen state.
#[derive(Debug, Clone)]
pub struct OneStepSamples {
    /// `ΔS` per sample (zero for rejected proposals).
    pub ds: Vec<f64>,
    /// `Δx_j` per requested coordinate per sample, indexed `[coord][sample]`.
    pub coord_deltas: Vec<Vec<f64>>,
    /// `R` per sample.
    pub r: Vec<f64>,
    /// `Z` per sample.
    pub z: Vec<f64>,
    /// `r = Q - R` per sample.
    pub r_small: Vec<f64>,
    /// Number of accepted proposals.
    pub accepted: u64,
}

impl OneStepSamples {
    /// Acceptance fraction over the samples.
    pub fn accept_rate(&self) -> f64 {
        self.accepted as f64 / self.ds.len() as f64
    }
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / m;
    let var = compensated_sum(samples.iter().map(|v| (v - mean) * (v - mean))) / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Samples per rayon-chunk in the one-step engines; each chunk draws from its
/// own stream so the result is independent of thread count.
const ONE_STEP_CHUNK: usize = 4096;

/// Draws `m` independent one-step transitions from the frozen state `x`
/// (coordinates in `coords`, 1-based, get their `Δx_j` recorded).
pub fn one_step_samples(
    x: &SpectralVector,
    cfg: &ChainConfig,
    m: usize,
    coords: &[usize],
) -> Result<OneStepSamples> {
    if x.len() != cfg.n() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n(),
            got: x.len(),
        });
    }
    for &j in coords {
        if j == 0 || j > cfg.n() {
            return Err(Error::Domain(format!(
                "requested coordinate {j} outside 1..={}",
                cfg.n()
            )));
        }
    }
    if m == 0 {
        return Err(Error::EmptyInput("m must be positive".to_string()));
    }

    let n_chunks = m.div_ceil(ONE_STEP_CHUNK);
    let chunks: Result<Vec<OneStepSamples>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * ONE_STEP_CHUNK;
            let hi = ((c + 1) * ONE_STEP_CHUNK).min(m);
            let mut rng = stream_rng(cfg.seed, StreamTag::Drift, c as u64);
            let mut out = OneStepSamples {
                ds: Vec::with_capacity(hi - lo),
                coord_deltas: coords.iter().map(|_| Vec::with_capacity(hi - lo)).collect(),
                r: Vec::with_capacity(hi - lo),
                z: Vec::with_capacity(hi - lo),
                r_small: Vec::with_capacity(hi - lo),
                accepted: 0,
            };
            for _ in lo..hi {
                let (y, xi) = propose_from(x, cfg, &mut rng);
                let (dec, gauss) = decompose_parts(x, &y, &xi, cfg)?;
                let u: f64 = rng.sample(OpenClosed01);
                let accepted = cfg.forced_accept || u.ln() < dec.q;
                let ds = if accepted {
                    -2.0 * gauss / cfg.n() as f64
                } else {
                    0.0
                };
                out.ds.push(ds);
                for (slot, &j) in out.coord_deltas.iter_mut().zip(coords) {
                    slot.push(if accepted {
                        y.coords()[j - 1] - x.coords()[j - 1]
                    } else {
                        0.0
                    });
                }
                out.r.push(dec.r);
                out.z.push(dec.z);
                out.r_small.push(dec.r_small);
                if accepted {
                    out.accepted += 1;
                }
            }
            Ok(out)
        })
        .collect();
    let chunks = chunks?;

    let mut merged = OneStepSamples {
        ds: Vec::with_capacity(m),
        coord_deltas: coords.iter().map(|_| Vec::with_capacity(m)).collect(),
        r: Vec::with_capacity(m),
        z: Vec::with_capacity(m),
        r_small: Vec::with_capacity(m),
        accepted: 0,
    };
    for chunk in chunks {
        merged.ds.extend(chunk.ds);
        for (dst, src) in merged.coord_deltas.iter_mut().zip(chunk.coord_deltas) {
            dst.extend(src);
        }
        merged.r.extend(chunk.r);
        merged.z.extend(chunk.z);
        merged.r_small.extend(chunk.r_small);
        merged.accepted += chunk.accepted;
    }
    Ok(merged)
}

/// Minimum sample count for the drift estimators.
const MIN_DRIFT_SAMPLES: usize = 1000;

fn check_drift_samples(m: usize) -> Result<()> {
    if m < MIN_DRIFT_SAMPLES {
        return Err(Error::Domain(format!(
            "drift estimates need at least {MIN_DRIFT_SAMPLES} samples (got {m})"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of the `S`-drift `N E[S_{k+1} - S_k | x_k = x]`,
/// returned as `(estimate, standard error)`.
pub fn estimate_drift_s(x: &SpectralVector, cfg: &ChainConfig, m: usize) -> Result<(f64, f64)> {
    check_drift_samples(m)?;
    let samples = one_step_samples(x, cfg, m, &[])?;
    let (mean, se) = mean_and_se(&samples.ds);
    let nf = cfg.n() as f64;
    Ok((nf * mean, nf * se))
}

/// Monte Carlo estimate of the coordinate drifts `N E[Δx_j | x_k = x]` for
/// the requested 1-based coordinates, each as `(estimate, standard error)`.
pub fn estimate_drift_coord(
    x: &SpectralVector,
    cfg: &ChainConfig,
    m: usize,
    coords: &[usize],
) -> Result<Vec<(f64, f64)>> {
    check_drift_samples(m)?;
    let samples = one_step_samples(x, cfg, m, coords)?;
    let nf = cfg.n() as f64;
    Ok(samples
        .coord_deltas
        .iter()
        .map(|deltas| {
            let (mean, se) = mean_and_se(deltas);
            (nf * mean, nf * se)
        })
        .collect())
}

/// Monte Carlo estimate of the quadratic variation rate `N E[(ΔS)^2]`,
/// as `(estimate, standard error)`.
pub fn estimate_s_quadratic_variation(
    x: &SpectralVector,
    cfg: &ChainConfig,
    m: usize,
) -> Result<(f64, f64)> {
    check_drift_samples(m)?;
    let samples = one_step_samples(x, cfg, m, &[])?;
    let sq: Vec<f64> = samples.ds.iter().map(|d| d * d).collect();
    let (mean, se) = mean_and_se(&sq);
    let nf = cfg.n() as f64;
    Ok((nf * mean, nf * se))
}
