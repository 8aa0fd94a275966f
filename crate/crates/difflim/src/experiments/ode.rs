//! The limit ODE path: integrate `dS = A_ell(S) dt` and emit the grid. The
//! checks enforce the solution band `0 <= S <= max(S_0, 1) + 1e-8` and the
//! monotone approach of `|S - 1|` toward zero.

use std::path::Path;

use anyhow::Result;
use difflim_core::limit_integrators::integrate_ode;

use crate::config::Config;
use crate::output::{fmt_f64, CsvFile};
use crate::report::{Check, Verdict};

pub fn run_ode(cfg: &Config, out_dir: &Path) -> Result<Verdict> {
    let oc = &cfg.ode;
    let sol = integrate_ode(cfg.model.ell, oc.s0, oc.horizon, oc.dt)?;

    let mut csv = CsvFile::create(out_dir, "ode.csv", "ode.v1", &["t", "S"])?;
    for (i, &s) in sol.values().iter().enumerate() {
        csv.write_row(&[fmt_f64(i as f64 * sol.step()), fmt_f64(s)])?;
    }

    let band = oc.s0.max(1.0) + 1e-8;
    let max_value = sol.values().iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let min_value = sol.values().iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let band_ok = min_value >= 0.0 && max_value <= band;

    // |S - 1| must never grow from one grid point to the next.
    let mut monotone = true;
    let mut prev_gap = (sol.values()[0] - 1.0).abs();
    for &v in &sol.values()[1..] {
        let gap = (v - 1.0).abs();
        if gap > prev_gap + 1e-12 {
            monotone = false;
            break;
        }
        prev_gap = gap;
    }
    let final_gap = (sol.values().last().unwrap() - 1.0).abs();

    let mut verdict = Verdict::new("ode", cfg.model.seed);
    verdict.push(Check::measured(
        "solution_within_band",
        band_ok,
        max_value,
        band,
        format!("min value {min_value}, lower bound 0"),
    ));
    verdict.push(Check::structural(
        "gap_to_one_monotone",
        monotone,
        format!("|S(T) - 1| = {final_gap}"),
    ));
    verdict.add_output(csv.finish()?);
    Ok(verdict)
}
