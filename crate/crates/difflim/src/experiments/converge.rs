//! Replica-mean energy paths against the limit ODE across a dimension
//! ladder. For each N the ensemble mean of the interpolated S-path is
//! evaluated on a common time grid; the error is
//! `e_N = sup_t |mean S^(N)(t) - S(t)|`. Passing requires a strictly
//! decreasing error sequence with the final error under the configured
//! threshold.

use std::path::Path;

use anyhow::{bail, Result};
use difflim_core::limit_integrators::integrate_ode;
use difflim_core::rwm_chain::{run_ensemble, ChainConfig};

use crate::config::Config;
use crate::output::{fmt_f64, CsvFile};
use crate::report::{Check, Verdict};

/// Fewest dimension levels that make "strictly decreasing" informative.
const MIN_LEVELS: usize = 3;
/// Fewest replicas for a stable ensemble mean at the default thresholds.
const MIN_REPLICAS: u64 = 100;

pub fn run_converge(cfg: &Config, out_dir: &Path) -> Result<Verdict> {
    let cc = &cfg.converge;
    if cc.n_levels.len() < MIN_LEVELS {
        bail!(
            "refusal: converge needs at least {MIN_LEVELS} dimension levels (got {})",
            cc.n_levels.len()
        );
    }
    if !cc.n_levels.windows(2).all(|w| w[0] < w[1]) {
        bail!("refusal: converge dimension levels must be strictly increasing");
    }
    if cc.replicas < MIN_REPLICAS {
        bail!(
            "refusal: converge needs at least {MIN_REPLICAS} replicas (got {})",
            cc.replicas
        );
    }
    if cc.grid_points < 2 {
        bail!("refusal: converge needs at least 2 comparison grid points");
    }

    let ode = integrate_ode(cfg.model.ell, cc.init.limit_s0(), cc.t, cc.ode_dt)?;

    // The chain path for dimension N ends at floor(T N)/N; the common grid
    // must stay inside every path, so it spans up to the shortest horizon.
    let horizon = cc
        .n_levels
        .iter()
        .map(|&n| (cc.t * n as f64).floor() / n as f64)
        .fold(f64::INFINITY, f64::min);
    let grid: Vec<f64> = (0..cc.grid_points)
        .map(|i| i as f64 * horizon / (cc.grid_points - 1) as f64)
        .collect();

    let mut csv = CsvFile::create(
        out_dir,
        "converge.csv",
        "converge.v1",
        &["n", "t", "mean_s", "ode_s"],
    )?;

    let mut errors = Vec::with_capacity(cc.n_levels.len());
    for &n in &cc.n_levels {
        let spectrum = cfg.model.spectrum(n)?;
        let chain = ChainConfig::new(
            spectrum,
            cfg.model.functional(),
            cfg.model.ell,
            cc.t,
            cc.init.condition(),
            cfg.model.seed,
        )?;
        let paths = run_ensemble(&chain, cc.replicas)?;
        let mut e_n = 0.0f64;
        for &t in &grid {
            let mut mean = 0.0;
            for path in &paths {
                mean += path.interpolate_s(t)?;
            }
            mean /= paths.len() as f64;
            let limit = ode.eval(t)?;
            e_n = e_n.max((mean - limit).abs());
            csv.write_row(&[n.to_string(), fmt_f64(t), fmt_f64(mean), fmt_f64(limit)])?;
        }
        errors.push(e_n);
    }

    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let final_error = *errors.last().unwrap();
    let sequence = errors
        .iter()
        .map(|e| fmt_f64(*e))
        .collect::<Vec<_>>()
        .join(", ");

    let mut verdict = Verdict::new("converge", cfg.model.seed);
    verdict.push(Check::structural(
        "error_strictly_decreasing",
        decreasing,
        format!("e_N sequence: {sequence}"),
    ));
    verdict.push(Check::measured(
        "final_error_below_threshold",
        final_error < cc.final_error_threshold,
        final_error,
        cc.final_error_threshold,
        format!("N = {}", cc.n_levels.last().unwrap()),
    ));
    verdict.add_output(csv.finish()?);
    Ok(verdict)
}
