//! Monte Carlo verification of the distributional contracts: proposal
//! moments, the law of the Gaussian surrogate, remainder decay, stationarity
//! and reversibility of the chain, moment bounds, Ornstein-Uhlenbeck oracles
//! for the SDE integrators, and sampling-noise behavior of the diagnostics.
//!
//! Every check compares an estimator against an independently derived target
//! with an explicit standard-error budget.

use difflim_core::diagnostics::{ks_statistic, wasserstein_rate_experiment, EnsembleSummary};
use difflim_core::limit_integrators::{
    integrate_limit_sde_ensemble, integrate_ode, integrate_stationary_sde_ensemble, SdeConfig,
};
use difflim_core::rng::{stream_rng, StreamTag};
use difflim_core::rwm_chain::{
    estimate_drift_s, estimate_s_quadratic_variation, one_step_samples, propose, run_ensemble,
    step, ChainConfig, ChainState, InitialCondition,
};
use difflim_core::scalar_laws::{a_ell, expect_min1_exp, h_ell, StepParam};
use difflim_core::spectral_model::{make_spectrum, TargetFunctional};
use rand::Rng;
use rand_distr::StandardNormal;

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[test]
fn proposal_second_moment_matches_its_formula() {
    // E ||y - x||^2 = (2 ell^2 / N) Σ lambda_j^2 over 1e5 proposals.
    let spectrum = make_spectrum(1.0, 0.25, 16).unwrap();
    let lambda_sq_sum: f64 = spectrum.lambda_sq().iter().sum();
    let cfg = ChainConfig::new(
        spectrum,
        TargetFunctional::Zero,
        1.3,
        1.0,
        InitialCondition::StationaryGaussian,
        71,
    )
    .unwrap();
    let mut state = ChainState::init(&cfg, 0).unwrap();
    let m = 100_000;
    let mut samples = Vec::with_capacity(m);
    for _ in 0..m {
        let (y, _) = propose(&mut state, &cfg);
        let d2: f64 = y
            .coords()
            .iter()
            .zip(state.x().coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        samples.push(d2);
    }
    let (mean, se) = mean_and_se(&samples);
    let want = 2.0 * cfg.ell() * cfg.ell() / cfg.n() as f64 * lambda_sq_sum;
    assert!(
        (mean - want).abs() <= 3.0 * se,
        "proposal moment {mean} vs {want} (se {se})"
    );
}

#[test]
fn surrogate_z_has_its_stated_gaussian_law() {
    // At frozen x with S(x) = 1: z ~ N(-ell^2, 2 ell^2). Mean and variance
    // checked within 3 SE at 1e5 draws (z is exactly Gaussian, so the
    // variance SE is var * sqrt(2/(m-1))).
    let ell = 1.0;
    let spectrum = make_spectrum(1.0, 0.25, 128).unwrap();
    let cfg = ChainConfig::new(
        spectrum,
        TargetFunctional::Zero,
        ell,
        1.0,
        InitialCondition::DeterministicProfile(1.0),
        5,
    )
    .unwrap();
    let state = ChainState::init(&cfg, 0).unwrap();
    let m = 100_000;
    let samples = one_step_samples(state.x(), &cfg, m, &[]).unwrap();
    let (mean, se) = mean_and_se(&samples.z);
    assert!(
        (mean - (-ell * ell)).abs() <= 3.0 * se,
        "z mean {mean} vs {} (se {se})",
        -ell * ell
    );
    let var = samples
        .z
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (m as f64 - 1.0);
    let want_var = 2.0 * ell * ell * state.s_current();
    let var_se = var * (2.0 / (m as f64 - 1.0)).sqrt();
    assert!(
        (var - want_var).abs() <= 3.0 * var_se,
        "z variance {var} vs {want_var} (se {var_se})"
    );
}

#[test]
fn remainder_scale_shrinks_like_one_over_n() {
    // |r_small| <= K / N with one K fitted across the whole grid, and the
    // per-level max of |r_small| non-increasing in N. For this target
    // r_small = -(ell^2/N) Σ j^{2s} lambda_j^2 xi_j^2 exactly, so the fitted
    // K is ell^2 times the largest sampled value of that sum (mean ~ 2.5
    // with a sub-exponential tail); 64 is a safe ceiling for 1e4 draws.
    let mut maxima = Vec::new();
    for n in [32usize, 128, 512] {
        let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
        let cfg = ChainConfig::new(
            spectrum,
            TargetFunctional::HalfSobolevNormSq,
            1.0,
            1.0,
            InitialCondition::DeterministicProfile(1.0),
            13,
        )
        .unwrap();
        let state = ChainState::init(&cfg, 0).unwrap();
        let samples = one_step_samples(state.x(), &cfg, 10_000, &[]).unwrap();
        let max_r = samples
            .r_small
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        maxima.push((n, max_r));
    }
    let fitted_k = maxima
        .iter()
        .map(|&(n, m)| n as f64 * m)
        .fold(0.0f64, f64::max);
    assert!(
        fitted_k.is_finite() && fitted_k <= 64.0,
        "fitted remainder constant {fitted_k} out of range"
    );
    for w in maxima.windows(2) {
        assert!(
            w[1].1 <= w[0].1,
            "max|r_small| must not increase with N: {maxima:?}"
        );
    }
}

#[test]
fn acceptance_rate_at_unit_energy_matches_the_limit_expectation() {
    // At frozen x with S(x) = 1, ell = 1, N = 512 the acceptance probability
    // is E[1 ∧ e^Q]; the limit value is E[1 ∧ e^Z] = Γ_ell(1)/(2 ell^2). The
    // pre-limit bias is bounded by E|Q - Z| <= 2 ell^2 / sqrt(pi N).
    let ell = 1.0f64;
    let n = 512;
    let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
    let cfg = ChainConfig::new(
        spectrum,
        TargetFunctional::Zero,
        ell,
        1.0,
        InitialCondition::DeterministicProfile(1.0),
        29,
    )
    .unwrap();
    let state = ChainState::init(&cfg, 0).unwrap();
    let m = 100_000;
    let samples = one_step_samples(state.x(), &cfg, m, &[]).unwrap();
    let rate = samples.accept_rate();
    let want = expect_min1_exp(-ell * ell, (2.0 * ell * ell).sqrt()).unwrap();
    let se = (rate * (1.0 - rate) / m as f64).sqrt();
    let bias_budget = 2.0 * ell * ell / (std::f64::consts::PI * n as f64).sqrt();
    assert!(
        (rate - want).abs() <= 3.0 * se + bias_budget,
        "acceptance {rate} vs {want} (se {se}, bias budget {bias_budget})"
    );
}

#[test]
fn stationary_start_keeps_time_averaged_energy_near_one() {
    let spectrum = make_spectrum(1.0, 0.25, 256).unwrap();
    let cfg = ChainConfig::new(
        spectrum,
        TargetFunctional::Zero,
        1.0,
        2.0,
        InitialCondition::StationaryGaussian,
        2026,
    )
    .unwrap();
    let paths = run_ensemble(&cfg, 200).unwrap();
    let mut total = 0.0;
    let mut count = 0usize;
    for path in &paths {
        total += path.s_values().iter().sum::<f64>();
        count += path.s_values().len();
    }
    let avg = total / count as f64;
    assert!(
        (0.9..=1.1).contains(&avg),
        "time-averaged stationary energy {avg}"
    );
}

#[test]
fn forced_acceptance_energy_identity() {
    // With every proposal accepted and Psi = 0:
    // E S_{k+1} = E S_k + 2 ell^2 / N, checked pooled over steps within 3 SE.
    let n = 64;
    let ell = 1.0f64;
    let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
    let cfg = ChainConfig::new(
        spectrum,
        TargetFunctional::Zero,
        ell,
        0.5,
        InitialCondition::StationaryGaussian,
        3,
    )
    .unwrap()
    .with_forced_accept();
    let paths = run_ensemble(&cfg, 400).unwrap();
    let mut increments = Vec::new();
    for path in &paths {
        for w in path.s_values().windows(2) {
            increments.push(w[1] - w[0]);
        }
    }
    let (mean, se) = mean_and_se(&increments);
    let want = 2.0 * ell * ell / n as f64;
    assert!(
        (mean - want).abs() <= 3.0 * se,
        "forced-acceptance drift {mean} vs {want} (se {se})"
    );
}

#[test]
fn energy_moments_stay_bounded_across_dimensions() {
    // max_k of the replica-mean (S_k)^m for m in {1,2,4} admits one bound
    // across the N grid.
    for n in [32usize, 128, 512] {
        let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
        let cfg = ChainConfig::new(
            spectrum,
            TargetFunctional::Zero,
            1.0,
            1.0,
            InitialCondition::StationaryGaussian,
            17,
        )
        .unwrap();
        let paths = run_ensemble(&cfg, 100).unwrap();
        let steps = paths[0].s_values().len();
        for m_pow in [1i32, 2, 4] {
            let mut worst = 0.0f64;
            for k in 0..steps {
                let mean = paths
                    .iter()
                    .map(|p| p.s_values()[k].powi(m_pow))
                    .sum::<f64>()
                    / paths.len() as f64;
                worst = worst.max(mean);
            }
            assert!(
                worst <= 8.0,
                "replica-mean S^{m_pow} reached {worst} at N = {n}"
            );
        }
    }
}

#[test]
fn quadratic_variation_constant_is_stable_across_n() {
    // N E[(ΔS)^2] ~ C / N: the fitted C = N^2 E[(ΔS)^2] agrees across levels.
    let mut fitted = Vec::new();
    for n in [64usize, 256] {
        let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
        let cfg = ChainConfig::new(
            spectrum,
            TargetFunctional::Zero,
            1.0,
            1.0,
            InitialCondition::DeterministicProfile(1.0),
            23,
        )
        .unwrap();
        let state = ChainState::init(&cfg, 0).unwrap();
        let (qv, _) = estimate_s_quadratic_variation(state.x(), &cfg, 20_000).unwrap();
        fitted.push(n as f64 * qv);
    }
    let ratio = fitted[1] / fitted[0];
    assert!(
        (0.4..=2.5).contains(&ratio),
        "quadratic-variation constants {fitted:?} (ratio {ratio})"
    );
}

#[test]
fn drift_bias_shrinks_with_dimension() {
    // |N E[ΔS] - A_ell(S)| at N = 64 dominates the N = 1024 value up to 2 SE.
    let p = StepParam::new(1.0).unwrap();
    let target = a_ell(&p, 0.25).unwrap();
    let mut errs = Vec::new();
    let mut ses = Vec::new();
    for n in [64usize, 1024] {
        let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
        let cfg = ChainConfig::new(
            spectrum,
            TargetFunctional::Zero,
            1.0,
            1.0,
            InitialCondition::DeterministicProfile(0.5),
            31,
        )
        .unwrap();
        let state = ChainState::init(&cfg, 0).unwrap();
        let (est, se) = estimate_drift_s(state.x(), &cfg, 30_000).unwrap();
        errs.push((est - target).abs());
        ses.push(se);
    }
    assert!(
        errs[0] >= errs[1] - 2.0 * ses[1],
        "drift bias failed to shrink: {errs:?} (ses {ses:?})"
    );
}

#[test]
fn reversibility_at_n_two_recovers_the_target_moments() {
    // Psi = 0 targets N(0, C) exactly: after 1e6 burn-in steps the empirical
    // second moments of both coordinates match lambda_j^2, with standard
    // errors from 50 batch means over another 1e6 steps.
    let spectrum = make_spectrum(1.0, 0.0, 2).unwrap();
    let lambda_sq = spectrum.lambda_sq().to_vec();
    let cfg = ChainConfig::new(
        spectrum,
        TargetFunctional::Zero,
        1.0,
        1.0,
        InitialCondition::StationaryGaussian,
        47,
    )
    .unwrap();
    let mut state = ChainState::init(&cfg, 0).unwrap();
    for _ in 0..1_000_000 {
        step(&mut state, &cfg).unwrap();
    }
    let batches = 50;
    let batch_len = 20_000;
    let mut batch_means = vec![Vec::with_capacity(batches); 2];
    for _ in 0..batches {
        let mut acc = [0.0f64; 2];
        for _ in 0..batch_len {
            step(&mut state, &cfg).unwrap();
            for j in 0..2 {
                acc[j] += state.x().coords()[j] * state.x().coords()[j];
            }
        }
        for j in 0..2 {
            batch_means[j].push(acc[j] / batch_len as f64);
        }
    }
    for j in 0..2 {
        let (mean, se) = mean_and_se(&batch_means[j]);
        assert!(
            (mean - lambda_sq[j]).abs() <= 3.0 * se,
            "coordinate {} second moment {mean} vs {} (se {se})",
            j + 1,
            lambda_sq[j]
        );
    }
}

#[test]
fn white_noise_sobolev_energy_matches_the_trace() {
    // E ||C^{1/2} xi||_s^2 = trace_s within 3 SE over 1e4 standard normal xi.
    let spectrum = make_spectrum(1.0, 0.25, 64).unwrap();
    let weights: Vec<f64> = spectrum
        .lambda_sq()
        .iter()
        .zip(spectrum.sobolev_weight())
        .map(|(l2, w)| l2 * w)
        .collect();
    let mut rng = stream_rng(9, StreamTag::Oracle, 0);
    let m = 10_000;
    let mut samples = Vec::with_capacity(m);
    for _ in 0..m {
        let e: f64 = weights
            .iter()
            .map(|w| {
                let xi: f64 = rng.sample(StandardNormal);
                w * xi * xi
            })
            .sum();
        samples.push(e);
    }
    let (mean, se) = mean_and_se(&samples);
    let want = spectrum.trace_s();
    assert!(
        (mean - want).abs() <= 3.0 * se,
        "white-noise energy {mean} vs trace {want} (se {se})"
    );
}

#[test]
fn limit_sde_at_equilibrium_reproduces_stationary_variances() {
    // With S ≡ 1 the limit SDE is an OU process whose coordinate-j
    // stationary variance is lambda_j^2 Γ(1)/(2 D(1)) = lambda_j^2.
    let n = 4;
    let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
    let lambda_sq = spectrum.lambda_sq().to_vec();
    let cfg = SdeConfig::new(
        spectrum,
        TargetFunctional::Zero,
        1.0,
        10.0,
        1e-3,
        InitialCondition::StationaryGaussian,
        61,
    )
    .unwrap();
    let ode = integrate_ode(1.0, 1.0, 10.0, 1e-3).unwrap();
    let replicas = 500;
    let paths = integrate_limit_sde_ensemble(&cfg, &ode, replicas).unwrap();
    for j in 0..n {
        let terminal: Vec<f64> = paths
            .iter()
            .map(|p| p.final_state().coords()[j])
            .collect();
        let (mean, _) = mean_and_se(&terminal);
        let var = terminal
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (replicas as f64 - 1.0);
        let var_se = var * (2.0 / (replicas as f64 - 1.0)).sqrt();
        assert!(
            (var - lambda_sq[j]).abs() <= 3.0 * var_se,
            "coordinate {} variance {var} vs {} (se {var_se})",
            j + 1,
            lambda_sq[j]
        );
    }
}

#[test]
fn sde_means_are_insensitive_to_halving_the_step() {
    // Weak self-convergence: the coordinate-1 ensemble mean at T moves by
    // less than 2 replica SEs when dt is halved.
    let n = 8;
    let mk = |dt: f64| {
        let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
        SdeConfig::new(
            spectrum,
            TargetFunctional::Zero,
            1.0,
            1.0,
            dt,
            InitialCondition::DeterministicProfile(2.0),
            77,
        )
        .unwrap()
    };
    let ode = integrate_ode(1.0, 4.0, 1.0, 1e-3).unwrap();
    let replicas = 300;
    let coarse = integrate_limit_sde_ensemble(&mk(1e-3), &ode, replicas).unwrap();
    let fine = integrate_limit_sde_ensemble(&mk(5e-4), &ode, replicas).unwrap();
    let terminal = |paths: &[difflim_core::limit_integrators::SdePath]| -> Vec<f64> {
        paths.iter().map(|p| p.final_state().coords()[0]).collect()
    };
    let (mc, se_c) = mean_and_se(&terminal(&coarse));
    let (mf, _) = mean_and_se(&terminal(&fine));
    assert!(
        (mc - mf).abs() <= 2.0 * se_c,
        "means {mc} vs {mf} differ by more than 2 x {se_c}"
    );
}

#[test]
fn stationary_sde_satisfies_the_time_change_law() {
    // OU time change: halving h_ell and doubling the horizon leaves the
    // endpoint marginal unchanged. ell_2 solves h(ell_2) = h(ell_1)/2 by
    // bisection (h is increasing on (0, 1]).
    let ell_1 = 1.0f64;
    let target = h_ell(&StepParam::new(ell_1).unwrap()) / 2.0;
    let (mut lo, mut hi) = (0.05f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h_ell(&StepParam::new(mid).unwrap()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ell_2 = 0.5 * (lo + hi);
    let h2 = h_ell(&StepParam::new(ell_2).unwrap());
    assert!((h2 - target).abs() < 1e-12, "bisection failed: {h2} vs {target}");

    let n = 2;
    let replicas = 2000;
    let run = |ell: f64, horizon: f64, seed: u64| -> Vec<f64> {
        let spectrum = make_spectrum(1.0, 0.25, n).unwrap();
        let cfg = SdeConfig::new(
            spectrum,
            TargetFunctional::Zero,
            ell,
            horizon,
            1e-3,
            InitialCondition::DeterministicProfile(2.0),
            seed,
        )
        .unwrap();
        integrate_stationary_sde_ensemble(&cfg, replicas)
            .unwrap()
            .iter()
            .map(|p| p.final_state().coords()[0])
            .collect()
    };
    let fast = run(ell_1, 1.0, 101);
    let slow = run(ell_2, 2.0, 102);
    let d = ks_statistic(&fast, &slow).unwrap();
    let critical = 1.36 * (2.0 / replicas as f64).sqrt();
    assert!(
        d < critical,
        "time-change KS statistic {d} above critical {critical}"
    );
}

#[test]
fn ks_statistic_of_matched_normals_stays_subcritical() {
    // Two independent N(0,1) batches of 1e4 fall below the 5% two-sample
    // critical value 1.36 sqrt(2/1e4) in at least 90 of 100 repetitions.
    let m = 10_000;
    let critical = 1.36 * (2.0f64 / m as f64).sqrt();
    let mut passes = 0;
    for rep in 0..100 {
        let mut rng = stream_rng(5000 + rep, StreamTag::Diagnostics, rep);
        let a: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if ks_statistic(&a, &b).unwrap() < critical {
            passes += 1;
        }
    }
    assert!(passes >= 90, "only {passes}/100 repetitions subcritical");
}

#[test]
fn ensemble_standard_errors_shrink_with_replica_count() {
    // Quadrupling replicas halves the SE within 30%.
    let spectrum = make_spectrum(1.0, 0.25, 32).unwrap();
    let cfg = ChainConfig::new(
        spectrum,
        TargetFunctional::Zero,
        1.0,
        1.0,
        InitialCondition::StationaryGaussian,
        83,
    )
    .unwrap();
    let paths = run_ensemble(&cfg, 200).unwrap();
    let series: Vec<&[f64]> = paths.iter().map(|p| p.s_values()).collect();
    let small = EnsembleSummary::from_series(&series[..50]).unwrap();
    let large = EnsembleSummary::from_series(&series).unwrap();
    let last = small.se().len() - 1;
    let ratio = small.se()[last] / large.se()[last];
    assert!(
        (1.4..=2.6).contains(&ratio),
        "SE ratio at 4x replicas: {ratio}"
    );
}

#[test]
fn rate_experiment_is_stable_under_doubling_the_sample_count() {
    let psi = TargetFunctional::Zero;
    let w1_at = |m: usize| {
        wasserstein_rate_experiment(1.0, 0.25, 1.0, &psi, &[64, 128], m, 1.0, 11)
            .unwrap()
            .points[0]
            .w1
    };
    let base = w1_at(10_000);
    let doubled = w1_at(20_000);
    assert!(
        (base - doubled).abs() / base < 0.10,
        "W1 moved from {base} to {doubled} on doubling m"
    );
}
