//! Mean acceptance across the (beta, N) grid, with the scaling checks: the
//! acceptance rate tends to one along N for beta above the critical value 1,
//! to zero below it, and stays level at the critical scaling itself.
//! Chains start from the stationary Gaussian.

use std::path::Path;

use anyhow::{bail, Result};
use difflim_core::rwm_chain::{run_ensemble, ChainConfig, InitialCondition};

use crate::config::Config;
use crate::output::{fmt_f64, CsvFile};
use crate::report::{Check, Verdict};

pub fn run_acceptance_scaling(cfg: &Config, out_dir: &Path) -> Result<Verdict> {
    let ac = &cfg.acceptance_scaling;
    if ac.betas.is_empty() {
        bail!("refusal: acceptance-scaling needs at least one beta");
    }
    if ac.n_levels.len() < 2 || !ac.n_levels.windows(2).all(|w| w[0] < w[1]) {
        bail!("refusal: acceptance-scaling needs at least 2 strictly increasing dimension levels");
    }
    if ac.replicas == 0 {
        bail!("refusal: acceptance-scaling needs at least one replica");
    }

    let mut csv = CsvFile::create(
        out_dir,
        "acceptance_scaling.csv",
        "acceptance_scaling.v1",
        &["beta", "n", "mean_acceptance"],
    )?;

    let mut verdict = Verdict::new("acceptance-scaling", cfg.model.seed);
    for &beta in &ac.betas {
        let mut column = Vec::with_capacity(ac.n_levels.len());
        for &n in &ac.n_levels {
            let spectrum = cfg.model.spectrum(n)?;
            let chain = ChainConfig::new(
                spectrum,
                cfg.model.functional(),
                cfg.model.ell,
                ac.t,
                InitialCondition::StationaryGaussian,
                cfg.model.seed,
            )?
            .with_beta(beta)?;
            let paths = run_ensemble(&chain, ac.replicas)?;
            let mut rate = 0.0;
            for path in &paths {
                rate += path.mean_acceptance(1..=path.num_steps())?;
            }
            rate /= paths.len() as f64;
            column.push(rate);
            csv.write_row(&[fmt_f64(beta), n.to_string(), fmt_f64(rate)])?;
        }

        let final_rate = *column.last().unwrap();
        let rendered = column
            .iter()
            .map(|r| fmt_f64(*r))
            .collect::<Vec<_>>()
            .join(", ");
        if beta > 1.0 {
            let increasing = column.windows(2).all(|w| w[1] > w[0]);
            verdict.push(Check::measured(
                format!("beta_{beta}_increases_to_one"),
                increasing && final_rate > ac.high_final_threshold,
                final_rate,
                ac.high_final_threshold,
                format!("column: {rendered}"),
            ));
        } else if beta < 1.0 {
            let decreasing = column.windows(2).all(|w| w[1] < w[0]);
            verdict.push(Check::measured(
                format!("beta_{beta}_decreases_to_zero"),
                decreasing && final_rate < ac.low_final_threshold,
                final_rate,
                ac.low_final_threshold,
                format!("column: {rendered}"),
            ));
        } else {
            let max = column.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
            let min = column.iter().fold(f64::INFINITY, |a, &v| a.min(v));
            verdict.push(Check::measured(
                "beta_1_column_level",
                max - min < ac.flat_spread_threshold,
                max - min,
                ac.flat_spread_threshold,
                format!("column: {rendered}"),
            ));
        }
    }
    verdict.add_output(csv.finish()?);
    Ok(verdict)
}
