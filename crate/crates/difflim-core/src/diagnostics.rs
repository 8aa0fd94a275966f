//! Distributional and pathwise comparison tools.
//!
//! The scalar comparisons are exact empirical functionals: the 1-Wasserstein
//! distance between equal-size samples is the mean absolute difference of
//! order statistics, and the Kolmogorov-Smirnov statistic is the largest gap
//! between the two empirical CDFs. Path comparisons reduce to the sup norm on
//! a shared grid.
//!
//! [`wasserstein_rate_experiment`] measures how fast the Gaussian-dominant
//! part `R` of the log acceptance ratio approaches its surrogate `Z` as the
//! dimension grows: it freezes a deterministic state, draws one-step samples
//! of `(R, Z)` at each dimension, and fits `W_1 ~ const * N^slope` by least
//! squares in log-log coordinates.

use crate::error::{Error, Result};
use crate::rwm_chain::{one_step_samples, ChainConfig, ChainState, InitialCondition};
use crate::spectral_model::{compensated_sum, make_spectrum, TargetFunctional};

fn require_finite(name: &str, samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyInput(format!("{name} sample set is empty")));
    }
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "{name} sample set contains a non-finite value ({v})"
        )));
    }
    Ok(())
}

/// Empirical 1-Wasserstein distance between two equal-size samples:
/// the mean absolute difference of sorted values.
pub fn wasserstein1_empirical(a: &[f64], b: &[f64]) -> Result<f64> {
    require_finite("first", a)?;
    require_finite("second", b)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(f64::total_cmp);
    sb.sort_unstable_by(f64::total_cmp);
    Ok(compensated_sum(
        sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()),
    ) / a.len() as f64)
}

/// Empirical 1-Wasserstein distance between samples of possibly different
/// sizes: the larger set is reduced to the smaller one's size by stride
/// subsampling of its order statistics (a seeded phase picks where the stride
/// lands), then the equal-size distance applies. Equal sizes skip the
/// subsampling entirely.
pub fn wasserstein1_subsampled(a: &[f64], b: &[f64], seed: u64) -> Result<f64> {
    require_finite("first", a)?;
    require_finite("second", b)?;
    if a.len() == b.len() {
        return wasserstein1_empirical(a, b);
    }
    let (small, large) = if a.len() < b.len() { (a, b) } else { (b, a) };
    let mut sorted = large.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (m, big) = (small.len() as f64, sorted.len() as f64);
    let mut rng = crate::rng::stream_rng(seed, crate::rng::StreamTag::Diagnostics, 0);
    let phase: f64 = rand::Rng::gen::<f64>(&mut rng);
    let picked: Vec<f64> = (0..small.len())
        .map(|i| {
            let idx = ((i as f64 + phase) * big / m).floor() as usize;
            sorted[idx.min(sorted.len() - 1)]
        })
        .collect();
    wasserstein1_empirical(small, &picked)
}

/// Sup distance between two series recorded on the same grid.
pub fn sup_path_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    require_finite("first", a)?;
    require_finite("second", b)?;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Two-sample Kolmogorov-Smirnov statistic
/// `sup_x |F_a(x) - F_b(x)|`, computed by one merged walk over both sorted
/// samples (ties advance both sides before the gap is read).
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    require_finite("first", a)?;
    require_finite("second", b)?;
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(f64::total_cmp);
    sb.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let t = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= t {
            i += 1;
        }
        while j < sb.len() && sb[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Pointwise ensemble statistics of equally gridded series.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    replicas: usize,
    mean: Vec<f64>,
    se: Vec<f64>,
}

impl EnsembleSummary {
    /// Mean and standard error per grid point across `series` (one slice per
    /// replica, all the same length; at least two replicas).
    pub fn from_series(series: &[&[f64]]) -> Result<Self> {
        if series.len() < 2 {
            return Err(Error::EmptyInput(format!(
                "ensemble summaries need at least 2 replicas (got {})",
                series.len()
            )));
        }
        let len = series[0].len();
        for s in series {
            if s.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    got: s.len(),
                });
            }
            require_finite("series", s)?;
        }
        let r = series.len() as f64;
        let mut mean = Vec::with_capacity(len);
        let mut se = Vec::with_capacity(len);
        for t in 0..len {
            let m = compensated_sum(series.iter().map(|s| s[t])) / r;
            let var = compensated_sum(series.iter().map(|s| (s[t] - m) * (s[t] - m))) / (r - 1.0);
            mean.push(m);
            se.push((var / r).sqrt());
        }
        Ok(Self {
            replicas: series.len(),
            mean,
            se,
        })
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn se(&self) -> &[f64] {
        &self.se
    }
}

/// Least-squares slope of `ln y` against `ln x`; both inputs must be
/// positive, with at least two points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::EmptyInput(
            "slope fits need at least two points".to_string(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(
            "log-log fits require positive finite data".to_string(),
        ));
    }
    let (slope, _) = log_log_fit(xs, ys);
    Ok(slope)
}

fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = compensated_sum(lx.iter().copied()) / n;
    let my = compensated_sum(ly.iter().copied()) / n;
    let sxx = compensated_sum(lx.iter().map(|v| (v - mx) * (v - mx)));
    let sxy = compensated_sum(lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    (slope, intercept)
}

/// One dimension's worth of evidence in the rate experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WassersteinRatePoint {
    pub n: usize,
    /// `W_1` between the `R` and `Z` samples.
    pub w1: f64,
    /// Largest observed `|Q - R|` remainder.
    pub max_abs_r_small: f64,
}

/// Result of [`wasserstein_rate_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinRateReport {
    pub points: Vec<WassersteinRatePoint>,
    /// Fitted exponent in `W_1 ~ constant * N^slope`.
    pub slope: f64,
    /// Fitted prefactor.
    pub constant: f64,
}

/// Minimum one-step sample count for a trustworthy `W_1` estimate.
const RATE_MIN_SAMPLES: usize = 10_000;

/// Measures the `W_1` distance between the dominant log-ratio part `R` and
/// its Gaussian surrogate `Z` across dimensions `ns`, from the frozen state
/// `x_j = profile_c * lambda_j`, with `m >= 10^4` one-step samples per
/// dimension, and fits the decay rate.
///
/// `psi` must be dimension-independent (`Zero` or `HalfSobolevNormSq`);
/// diagonal-quadratic functionals carry per-dimension weights and have no
/// canonical embedding across `ns`.
pub fn wasserstein_rate_experiment(
    kappa: f64,
    s: f64,
    ell: f64,
    psi: &TargetFunctional,
    ns: &[usize],
    m: usize,
    profile_c: f64,
    seed: u64,
) -> Result<WassersteinRateReport> {
    if m < RATE_MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "rate experiments need at least {RATE_MIN_SAMPLES} samples per dimension (got {m})"
        )));
    }
    if ns.len() < 2 {
        return Err(Error::EmptyInput(
            "rate experiments need at least two dimensions".to_string(),
        ));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "dimensions must be strictly increasing".to_string(),
        ));
    }
    if matches!(psi, TargetFunctional::DiagonalQuadratic { .. }) {
        return Err(Error::Domain(
            "rate experiments require a dimension-independent target functional".to_string(),
        ));
    }
    if !profile_c.is_finite() {
        return Err(Error::Domain(format!(
            "profile scale must be finite (got {profile_c})"
        )));
    }

    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let spectrum = make_spectrum(kappa, s, n)?;
        let cfg = ChainConfig::new(
            spectrum,
            psi.clone(),
            ell,
            1.0,
            InitialCondition::DeterministicProfile(profile_c),
            seed,
        )?;
        let state = ChainState::init(&cfg, 0)?;
        let samples = one_step_samples(state.x(), &cfg, m, &[])?;
        let w1 = wasserstein1_empirical(&samples.r, &samples.z)?;
        let max_abs_r_small = samples
            .r_small
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        points.push(WassersteinRatePoint {
            n,
            w1,
            max_abs_r_small,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.w1).collect();
    let slope = log_log_slope(&xs, &ys)?;
    let (_, intercept) = log_log_fit(&xs, &ys);
    Ok(WassersteinRateReport {
        points,
        slope,
        constant: intercept.exp(),
    })
}
