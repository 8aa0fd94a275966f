//! Terminal marginals of the chain against the limit SDE. Both sides run
//! matched ensembles to `t = T`; for the energy statistic and each tracked
//! coordinate the Wasserstein-1 distance between chain and SDE marginals
//! must stay within a multiple of the self-distance between two independent
//! SDE ensembles of the same size. Setting `sde_ell` different from the
//! model's ell is the documented negative control: the report flags the
//! mismatch and the distance checks are expected to fail.

use std::path::Path;

use anyhow::{bail, Result};
use difflim_core::diagnostics::wasserstein1_empirical;
use difflim_core::limit_integrators::{integrate_limit_sde_ensemble, integrate_ode, SdeConfig};
use difflim_core::rwm_chain::{run_ensemble, ChainConfig};

use crate::config::Config;
use crate::output::{fmt_f64, CsvFile};
use crate::report::{Check, Verdict};

/// Fewest replicas per side for a usable self-distance calibration.
const MIN_REPLICAS: u64 = 300;

pub fn run_sde_compare(cfg: &Config, out_dir: &Path) -> Result<Verdict> {
    let sc = &cfg.sde_compare;
    if sc.replicas < MIN_REPLICAS {
        bail!(
            "refusal: sde-compare needs at least {MIN_REPLICAS} replicas per side (got {})",
            sc.replicas
        );
    }
    for &j in &sc.track_coords {
        if j == 0 || j > sc.n {
            bail!("refusal: tracked coordinate {j} outside 1..={}", sc.n);
        }
    }

    let chain = ChainConfig::new(
        cfg.model.spectrum(sc.n)?,
        cfg.model.functional(),
        cfg.model.ell,
        sc.t,
        sc.init.condition(),
        cfg.model.seed,
    )?
    .with_track_coords(sc.track_coords.clone())?;
    let chain_paths = run_ensemble(&chain, sc.replicas)?;

    let sde_ell = sc.sde_ell.unwrap_or(cfg.model.ell);
    let mismatched = sde_ell != cfg.model.ell;
    let ode = integrate_ode(sde_ell, sc.init.limit_s0(), sc.t, sc.ode_dt)?;
    let sde = SdeConfig::new(
        cfg.model.spectrum(sc.n)?,
        cfg.model.functional(),
        sde_ell,
        sc.t,
        sc.sde_dt,
        sc.init.condition(),
        cfg.model.seed,
    )?;
    // Twice the replicas: the second half is the independent ensemble used
    // to calibrate the self-distance threshold.
    let sde_paths = integrate_limit_sde_ensemble(&sde, &ode, 2 * sc.replicas)?;
    let (sde_a, sde_b) = sde_paths.split_at(sc.replicas as usize);

    let mut observables: Vec<(String, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    observables.push((
        "S".to_string(),
        chain_paths
            .iter()
            .map(|p| *p.s_values().last().unwrap())
            .collect(),
        sde_a.iter().map(|p| *p.s_values().last().unwrap()).collect(),
        sde_b.iter().map(|p| *p.s_values().last().unwrap()).collect(),
    ));
    for &j in &sc.track_coords {
        observables.push((
            format!("x_{j}"),
            chain_paths
                .iter()
                .map(|p| {
                    *p.tracked_coord(j)
                        .expect("tracked coordinate was configured")
                        .last()
                        .unwrap()
                })
                .collect(),
            sde_a.iter().map(|p| p.final_state().coords()[j - 1]).collect(),
            sde_b.iter().map(|p| p.final_state().coords()[j - 1]).collect(),
        ));
    }

    let mut csv = CsvFile::create(
        out_dir,
        "sde_compare.csv",
        "sde_compare.v1",
        &["observable", "w1", "self_distance", "threshold", "passed"],
    )?;

    let mut verdict = Verdict::new("sde-compare", cfg.model.seed);
    if mismatched {
        verdict.push(Check::structural(
            "sde_parameters_match_chain",
            false,
            format!(
                "negative control: chain ell = {}, SDE ell = {sde_ell}",
                cfg.model.ell
            ),
        ));
    }
    for (name, chain_vals, a_vals, b_vals) in &observables {
        let w1 = wasserstein1_empirical(chain_vals, a_vals)?;
        let self_distance = wasserstein1_empirical(a_vals, b_vals)?;
        let threshold = sc.self_distance_factor * self_distance;
        let passed = w1 <= threshold;
        csv.write_row(&[
            name.clone(),
            fmt_f64(w1),
            fmt_f64(self_distance),
            fmt_f64(threshold),
            passed.to_string(),
        ])?;
        verdict.push(Check::measured(
            format!("w1_{name}_within_self_distance"),
            passed,
            w1,
            threshold,
            format!("self-distance {self_distance}"),
        ));
    }
    verdict.add_output(csv.finish()?);
    Ok(verdict)
}
