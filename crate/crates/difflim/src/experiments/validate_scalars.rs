//! Closed-form limit functions against their defining expectations. For
//! each grid cell (ell, x) the three scalar laws are compared with Monte
//! Carlo estimates over draws of `Z ~ N(-ell^2, 2 ell^2 x)`:
//! `D/(2 ell^2) = E[e^Z 1_{Z<0}]`, `Γ/(2 ell^2) = E[1 ∧ e^Z]`, and
//! `A = E[-2Z (1 ∧ e^Z)]`.

use std::path::Path;

use anyhow::{bail, Result};
use difflim_core::rng::{stream_rng, StreamTag};
use difflim_core::scalar_laws::{a_ell, d_ell, gamma_ell, StepParam};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{fmt_f64, CsvFile};
use crate::report::{Check, Verdict};

/// Samples per RNG stream; fixed so results do not depend on thread count.
const CHUNK: usize = 1 << 18;

/// Monte Carlo accumulator for the three estimators: sums and sums of
/// squares in cell order, merged deterministically.
#[derive(Clone, Copy, Default)]
struct Acc {
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Acc {
    fn merge(mut self, other: Acc) -> Acc {
        for i in 0..3 {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        self
    }
}

fn sample_cell(seed: u64, cell: usize, mu: f64, sigma: f64, m: usize) -> Acc {
    let n_chunks = m.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            // Stream index encodes (cell, chunk); cells stay distinct.
            let mut rng = stream_rng(seed, StreamTag::Oracle, ((cell as u64) << 24) | c as u64);
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(m);
            let mut acc = Acc::default();
            for _ in lo..hi {
                let g: f64 = rng.sample(StandardNormal);
                let z = mu + sigma * g;
                let e = z.exp();
                let vals = [
                    if z < 0.0 { e } else { 0.0 },
                    e.min(1.0),
                    -2.0 * z * e.min(1.0),
                ];
                for i in 0..3 {
                    acc.sum[i] += vals[i];
                    acc.sum_sq[i] += vals[i] * vals[i];
                }
            }
            acc
        })
        .collect::<Vec<Acc>>()
        .into_iter()
        .fold(Acc::default(), Acc::merge)
}

pub fn run_validate_scalars(cfg: &Config, out_dir: &Path) -> Result<Verdict> {
    let vs = &cfg.validate_scalars;
    if vs.ells.is_empty() || vs.xs.is_empty() {
        bail!("refusal: validate-scalars needs non-empty ell and x grids");
    }
    if vs.mc_samples < 2 {
        bail!("refusal: validate-scalars needs at least 2 Monte Carlo samples");
    }
    let seed = cfg.model.seed;
    let total_cells = vs.ells.len() * vs.xs.len() * 3;
    if vs.min_pass_cells > total_cells {
        bail!(
            "refusal: min_pass_cells = {} exceeds the {} grid cells",
            vs.min_pass_cells,
            total_cells
        );
    }

    let mut csv = CsvFile::create(
        out_dir,
        "validate_scalars.csv",
        "validate_scalars.v1",
        &[
            "ell",
            "x",
            "fn",
            "closed_form",
            "mc_estimate",
            "mc_se",
            "n_samples",
            "z_score",
        ],
    )?;

    let m = vs.mc_samples;
    let mut within = 0usize;
    let mut worst_z = 0.0f64;
    let mut cell = 0usize;
    for &ell in &vs.ells {
        let p = StepParam::new(ell)?;
        let two_l2 = 2.0 * ell * ell;
        for &x in &vs.xs {
            let closed = [
                d_ell(&p, x)? / two_l2,
                gamma_ell(&p, x)? / two_l2,
                a_ell(&p, x)?,
            ];
            let sigma = (two_l2 * x).sqrt();
            let acc = sample_cell(seed, cell, -ell * ell, sigma, m);
            for (i, fn_name) in ["d_over_2l2", "gamma_over_2l2", "a"].iter().enumerate() {
                let mean = acc.sum[i] / m as f64;
                let var = (acc.sum_sq[i] / m as f64 - mean * mean).max(0.0) * m as f64
                    / (m as f64 - 1.0);
                let se = (var / m as f64).sqrt();
                let z = (mean - closed[i]) / se;
                if z.abs() <= vs.z_threshold {
                    within += 1;
                }
                worst_z = worst_z.max(z.abs());
                csv.write_row(&[
                    fmt_f64(ell),
                    fmt_f64(x),
                    fn_name.to_string(),
                    fmt_f64(closed[i]),
                    fmt_f64(mean),
                    fmt_f64(se),
                    m.to_string(),
                    fmt_f64(z),
                ])?;
            }
            cell += 1;
        }
    }

    let mut verdict = Verdict::new("validate-scalars", seed);
    verdict.push(Check::measured(
        "cells_within_z_threshold",
        within >= vs.min_pass_cells,
        within as f64,
        vs.min_pass_cells as f64,
        format!(
            "{within} of {total_cells} cells within |z| <= {}; worst |z| = {worst_z}",
            vs.z_threshold
        ),
    ));
    verdict.add_output(csv.finish()?);
    Ok(verdict)
}
