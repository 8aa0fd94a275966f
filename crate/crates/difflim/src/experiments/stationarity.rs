//! Stationarity band: under the exact stationary start with `Psi = 0` the
//! replica-mean energy must stay within a standard-error band around 1 at
//! every step. Any other target functional is refused, since an exact
//! stationary sampler exists only for the Gaussian reference measure.

use std::path::Path;

use anyhow::{bail, Result};
use difflim_core::diagnostics::EnsembleSummary;
use difflim_core::rwm_chain::{run_ensemble, ChainConfig};

use crate::config::{Config, PsiSpec};
use crate::output::{fmt_f64, CsvFile};
use crate::report::{Check, Verdict};

pub fn run_stationarity(cfg: &Config, out_dir: &Path) -> Result<Verdict> {
    let st = &cfg.stationarity;
    if cfg.model.psi != PsiSpec::Zero {
        bail!("refusal: stationarity requires psi = \"zero\"; no exact stationary sampler exists for the requested target");
    }
    if st.replicas < 2 {
        bail!("refusal: stationarity needs at least 2 replicas for a standard error");
    }

    let chain = ChainConfig::new(
        cfg.model.spectrum(st.n)?,
        cfg.model.functional(),
        cfg.model.ell,
        st.t,
        st.init.condition(),
        cfg.model.seed,
    )?;
    let paths = run_ensemble(&chain, st.replicas)?;
    let series: Vec<&[f64]> = paths.iter().map(|p| p.s_values()).collect();
    let summary = EnsembleSummary::from_series(&series)?;

    let mut csv = CsvFile::create(
        out_dir,
        "stationarity.csv",
        "stationarity.v1",
        &["k", "t", "mean_s", "se"],
    )?;
    // Worst band violation: positive where |mean - 1| exceeds the band.
    let mut worst = f64::NEG_INFINITY;
    let mut first_violation = None;
    for k in 0..summary.mean().len() {
        let gap = (summary.mean()[k] - 1.0).abs();
        let violation = gap - st.band_se_multiplier * summary.se()[k];
        if violation > worst {
            worst = violation;
        }
        if violation > 0.0 && first_violation.is_none() {
            first_violation = Some(k);
        }
        csv.write_row(&[
            k.to_string(),
            fmt_f64(paths[0].times()[k]),
            fmt_f64(summary.mean()[k]),
            fmt_f64(summary.se()[k]),
        ])?;
    }

    let mut verdict = Verdict::new("stationarity", cfg.model.seed);
    let detail = match first_violation {
        Some(k) => format!("first violation at step {k}"),
        None => format!(
            "all {} steps inside the {} SE band",
            summary.mean().len() - 1,
            st.band_se_multiplier
        ),
    };
    verdict.push(Check::measured(
        "replica_mean_within_band",
        worst <= 0.0,
        worst,
        0.0,
        detail,
    ));
    verdict.add_output(csv.finish()?);
    Ok(verdict)
}
