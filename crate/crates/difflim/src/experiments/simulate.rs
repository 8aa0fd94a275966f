//! Raw chain ensembles to CSV: one row per kept step per replica carrying
//! the time, the energy statistic, the tracked coordinates, and a trailing
//! acceptance rate over the configured window.

use std::path::Path;

use anyhow::Result;
use difflim_core::rwm_chain::{run_ensemble, ChainConfig};

use crate::config::Config;
use crate::output::{fmt_f64, CsvFile};
use crate::report::{Check, Verdict};

pub fn run_simulate(cfg: &Config, out_dir: &Path) -> Result<Verdict> {
    let sc = &cfg.simulate;
    let spectrum = cfg.model.spectrum(sc.n)?;
    let chain = ChainConfig::new(
        spectrum,
        cfg.model.functional(),
        cfg.model.ell,
        sc.t,
        sc.init.condition(),
        cfg.model.seed,
    )?
    .with_beta(sc.beta)?
    .with_track_coords(sc.track_coords.clone())?;
    let paths = run_ensemble(&chain, sc.replicas)?;

    let mut header = vec!["replica".to_string(), "t".to_string(), "S".to_string()];
    for &j in &sc.track_coords {
        header.push(format!("x_{j}"));
    }
    header.push("accepted_rate_window".to_string());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvFile::create(out_dir, "simulate.csv", "simulate.v1", &header_refs)?;

    let stride = sc.output_stride.max(1);
    let window = sc.acceptance_window.max(1);
    let mut all_finite = true;
    for (replica, path) in paths.iter().enumerate() {
        let last = path.num_steps();
        for k in 0..=last {
            // Keep strided rows and always the final step.
            if k % stride != 0 && k != last {
                continue;
            }
            let rate = if k == 0 {
                0.0
            } else {
                let lo = k.saturating_sub(window - 1).max(1);
                path.mean_acceptance(lo..=k)?
            };
            let mut row = vec![
                replica.to_string(),
                fmt_f64(path.times()[k]),
                fmt_f64(path.s_values()[k]),
            ];
            all_finite &= path.s_values()[k].is_finite();
            for &j in &sc.track_coords {
                let v = path
                    .tracked_coord(j)
                    .expect("tracked coordinate was configured")[k];
                all_finite &= v.is_finite();
                row.push(fmt_f64(v));
            }
            row.push(fmt_f64(rate));
            csv.write_row(&row)?;
        }
    }

    let mut verdict = Verdict::new("simulate", cfg.model.seed);
    verdict.push(Check::structural(
        "all_emitted_values_finite",
        all_finite,
        format!(
            "{} replicas, {} steps each",
            sc.replicas,
            paths[0].num_steps()
        ),
    ));
    verdict.add_output(csv.finish()?);
    Ok(verdict)
}
