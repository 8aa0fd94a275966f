//! Closed-form scalar functions of the diffusion limit.
//!
//! For a proposal scale `ell > 0` and the standard normal CDF `Φ`, define on
//! `x > 0`
//!
//! ```text
//! D_ell(x) = 2 ell^2 e^{ell^2 (x-1)} Φ( ell (1-2x) / sqrt(2x) )
//! Γ_ell(x) = D_ell(x) + 2 ell^2 Φ( -ell / sqrt(2x) )
//! A_ell(x) = (1-2x) D_ell(x) + 2 ell^2 Φ( -ell / sqrt(2x) )
//!          = -2x D_ell(x) + Γ_ell(x)
//! ```
//!
//! with the common continuous value `2 ell^2 e^{-ell^2}` at `x = 0`, and
//! `h_ell = D_ell(1) = 2 ell^2 Φ(-ell / sqrt(2))`. `D` multiplies the drift
//! and `Γ` the squared diffusion of the limiting coordinate SDE, while `A`
//! drives the energy ODE `dS = A_ell(S) dt`, whose unique fixed point on
//! `[0, ∞)` is `S = 1`.
//!
//! All three are Gaussian expectations of the Metropolis acceptance function:
//! with `Z ~ N(-ell^2, 2 ell^2 x)`,
//!
//! ```text
//! E[e^Z 1_{Z<0}]   = D_ell(x) / (2 ell^2)
//! E[1 ∧ e^Z]       = Γ_ell(x) / (2 ell^2)
//! E[-2Z (1 ∧ e^Z)] = A_ell(x)
//! ```
//!
//! The general-parameter forms of those expectations are exposed as the
//! `expect_*` kit at the bottom of the module.
//!
//! Numerical policy: `Φ` comes from the complementary error function
//! (relative error ~1 ulp, verified at 1e-14 on `|x| <= 8`); the product
//! `e^{ell^2 (x-1)} Φ(·)` switches to `exp(ell^2 (x-1) + log Φ(·))` once
//! either factor would leave the representable range, using a log-CDF with a
//! Mills-ratio asymptotic tail; arguments in `[0, 1e-12)` take the `x = 0`
//! branch.

use crate::error::{Error, Result};

/// Arguments below this threshold use the `x = 0` limiting branch.
const X0_BRANCH: f64 = 1e-12;

/// Largest exponent for which the direct product evaluation of
/// `e^{ell^2(x-1)} Φ(arg)` is attempted.
const DIRECT_EXP_MAX: f64 = 700.0;

/// Smallest Φ argument for which the direct product evaluation is attempted
/// (Φ is still a normal double down to about -37.5).
const DIRECT_ARG_MIN: f64 = -37.0;

/// Below this argument the log-CDF switches to the asymptotic expansion.
const LOG_PHI_ASYMPTOTIC: f64 = -30.0;

/// The proposal scale `ell`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParam {
    ell: f64,
}

impl StepParam {
    /// Requires `ell > 0` and finite.
    pub fn new(ell: f64) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::Domain(format!(
                "proposal scale ell must be positive and finite (got {ell})"
            )));
        }
        Ok(Self { ell })
    }

    /// The proposal scale.
    pub fn ell(&self) -> f64 {
        self.ell
    }
}

/// Standard normal CDF `Φ(x) = erfc(-x / sqrt(2)) / 2`.
pub fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln Φ(x)`, valid far into the left tail.
///
/// For `x > -30` the CDF itself is a comfortably normal double and its log
/// is taken directly. Deeper in the tail the Mills-ratio expansion
///
/// ```text
/// Φ(x) = φ(x)/|x| · (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
/// ```
///
/// is used; at the switch point the truncation error is below 1e-15 relative.
pub fn log_phi_cdf(x: f64) -> f64 {
    if x > LOG_PHI_ASYMPTOTIC {
        phi_cdf(x).ln()
    } else {
        let z = 1.0 / (x * x);
        let series = 1.0
            + z * (-1.0 + z * (3.0 + z * (-15.0 + z * (105.0 + z * (-945.0 + z * 10395.0)))));
        -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
    }
}

/// The common value of `D`, `Γ`, `A` at `x = 0`: `2 ell^2 e^{-ell^2}`.
fn at_zero(p: &StepParam) -> f64 {
    2.0 * p.ell * p.ell * (-p.ell * p.ell).exp()
}

/// `D_ell(x)` for `x >= X0_BRANCH`, with overflow-safe product evaluation.
fn d_ell_positive(p: &StepParam, x: f64) -> f64 {
    let two_l2 = 2.0 * p.ell * p.ell;
    let expo = p.ell * p.ell * (x - 1.0);
    let arg = p.ell * (1.0 - 2.0 * x) / (2.0 * x).sqrt();
    if expo <= DIRECT_EXP_MAX && arg >= DIRECT_ARG_MIN {
        two_l2 * expo.exp() * phi_cdf(arg)
    } else {
        two_l2 * (expo + log_phi_cdf(arg)).exp()
    }
}

fn d_ell_inner(p: &StepParam, x: f64) -> f64 {
    if x < X0_BRANCH {
        at_zero(p)
    } else {
        d_ell_positive(p, x)
    }
}

fn gamma_ell_inner(p: &StepParam, x: f64) -> f64 {
    if x < X0_BRANCH {
        at_zero(p)
    } else {
        d_ell_positive(p, x) + 2.0 * p.ell * p.ell * phi_cdf(-p.ell / (2.0 * x).sqrt())
    }
}

fn a_ell_inner(p: &StepParam, x: f64) -> f64 {
    if x < X0_BRANCH {
        at_zero(p)
    } else {
        (1.0 - 2.0 * x) * d_ell_positive(p, x)
            + 2.0 * p.ell * p.ell * phi_cdf(-p.ell / (2.0 * x).sqrt())
    }
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "{name} requires x >= 0 (got {x}); use a_ell_ext for the extension"
        )));
    }
    Ok(())
}

/// Drift multiplier `D_ell(x)`, `x >= 0`.
pub fn d_ell(p: &StepParam, x: f64) -> Result<f64> {
    check_nonnegative("d_ell", x)?;
    Ok(d_ell_inner(p, x))
}

/// Squared diffusion multiplier `Γ_ell(x)`, `x >= 0`.
pub fn gamma_ell(p: &StepParam, x: f64) -> Result<f64> {
    check_nonnegative("gamma_ell", x)?;
    Ok(gamma_ell_inner(p, x))
}

/// Energy drift `A_ell(x)`, `x >= 0`. Positive on `[0, 1)`, zero at `1`,
/// negative beyond.
pub fn a_ell(p: &StepParam, x: f64) -> Result<f64> {
    check_nonnegative("a_ell", x)?;
    Ok(a_ell_inner(p, x))
}

/// Total variants for the integrators: arguments below the `x = 0` threshold
/// (including tiny negative round-off produced by interpolation) evaluate the
/// limiting branch instead of erroring.
pub(crate) fn d_ell_guarded(p: &StepParam, x: f64) -> f64 {
    d_ell_inner(p, x)
}

pub(crate) fn gamma_ell_guarded(p: &StepParam, x: f64) -> f64 {
    gamma_ell_inner(p, x)
}

/// `A_ell` extended to the whole real line: equal to 1 for `x <= -1/2`, to
/// `A_ell(x)` for `x >= 0`, and to a monotone cubic Hermite bridge with zero
/// end slopes on `(-1/2, 0)`.
///
/// The bridge joins the constant branch with matching derivative at
/// `x = -1/2`; at `x = 0` it matches the value `A_ell(0)` while `A_ell`
/// itself arrives with one-sided slope `(ell^2 - 2) A_ell(0)`, so the
/// derivative jumps there for `ell != sqrt(2)`. Only values of `x` within
/// round-off of 0 ever reach the bridge in the integrators, where the jump is
/// immaterial.
pub fn a_ell_ext(p: &StepParam, x: f64) -> f64 {
    if x >= 0.0 {
        a_ell_inner(p, x)
    } else if x <= -0.5 {
        1.0
    } else {
        let t = 2.0 * x + 1.0;
        let smooth = t * t * (3.0 - 2.0 * t);
        1.0 + (at_zero(p) - 1.0) * smooth
    }
}

/// `h_ell = 2 ell^2 Φ(-ell / sqrt(2))`, the common drift/diffusion scale of
/// the stationary regime; equals `d_ell(p, 1)` exactly.
pub fn h_ell(p: &StepParam) -> f64 {
    let two_l2 = 2.0 * p.ell * p.ell;
    two_l2 * phi_cdf(-p.ell / std::f64::consts::SQRT_2)
}

fn check_positive_x(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("{name} requires x > 0 (got {x})")));
    }
    Ok(())
}

/// `dD_ell/dx` on `x > 0`:
/// `ell^2 D_ell(x) - (ell^3/sqrt(pi)) (x^{-1/2} + x^{-3/2}/2) e^{-ell^2/(4x)}`.
pub fn d_ell_prime(p: &StepParam, x: f64) -> Result<f64> {
    check_positive_x("d_ell_prime", x)?;
    let l = p.ell;
    let e4 = (-l * l / (4.0 * x)).exp();
    Ok(l * l * d_ell_positive(p, x)
        - l.powi(3) / std::f64::consts::PI.sqrt() * (x.powf(-0.5) + 0.5 * x.powf(-1.5)) * e4)
}

/// `dΓ_ell/dx` on `x > 0`:
/// `ell^2 D_ell(x) - (ell^3/sqrt(pi x)) e^{-ell^2/(4x)}`.
pub fn gamma_ell_prime(p: &StepParam, x: f64) -> Result<f64> {
    check_positive_x("gamma_ell_prime", x)?;
    let l = p.ell;
    let e4 = (-l * l / (4.0 * x)).exp();
    Ok(l * l * d_ell_positive(p, x) - l.powi(3) / (std::f64::consts::PI * x).sqrt() * e4)
}

/// `dA_ell/dx` on `x > 0`:
/// `(ell^2 - 2 - 2x ell^2) D_ell(x) + (2 ell^3/sqrt(pi)) sqrt(x) e^{-ell^2/(4x)}`.
pub fn a_ell_prime(p: &StepParam, x: f64) -> Result<f64> {
    check_positive_x("a_ell_prime", x)?;
    let l = p.ell;
    let e4 = (-l * l / (4.0 * x)).exp();
    Ok((l * l - 2.0 - 2.0 * x * l * l) * d_ell_positive(p, x)
        + 2.0 * l.powi(3) / std::f64::consts::PI.sqrt() * x.sqrt() * e4)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive (got {sigma})"
        )));
    }
    Ok(())
}

/// `E[1 ∧ e^X]` for `X ~ N(mu, sigma^2)`:
/// `e^{mu + sigma^2/2} Φ(-mu/sigma - sigma) + Φ(mu/sigma)`.
pub fn expect_min1_exp(mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(expect_exp_indicator_neg(mu, sigma)? + phi_cdf(mu / sigma))
}

/// `E[e^X 1_{X<0}]` for `X ~ N(mu, sigma^2)`:
/// `e^{mu + sigma^2/2} Φ(-mu/sigma - sigma)`, evaluated in log space so that
/// large `sigma` cannot overflow the intermediate exponential.
pub fn expect_exp_indicator_neg(mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok((mu + 0.5 * sigma * sigma + log_phi_cdf(-mu / sigma - sigma)).exp())
}

/// `E[-2X (1 ∧ e^X)]` for `X ~ N(mu, sigma^2)`:
/// `e^{mu + sigma^2/2} Φ(-mu/sigma - sigma) (-2mu - 2sigma^2) - 2mu Φ(mu/sigma)`.
pub fn expect_neg2x_min1_exp(mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let ind = expect_exp_indicator_neg(mu, sigma)?;
    Ok(ind * (-2.0 * mu - 2.0 * sigma * sigma) - 2.0 * mu * phi_cdf(mu / sigma))
}

/// `E[X (1 ∧ e^{aX + b})]` for standard normal `X`:
/// `a e^{a^2/2 + b} Φ(-b/|a| - |a|)`; zero when `a = 0`.
pub fn expect_x_min1_exp(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    a * (0.5 * a * a + b + log_phi_cdf(-b / a.abs() - a.abs())).exp()
}

/// `f_a(x) = e^x Φ(-x/a)` for `a > 0`, evaluated in log space so that large
/// positive `x` cannot overflow the exponential factor. Lipschitz in `x`
/// with constant proportional to `(1 + a) e^{a^2}`.
pub fn f_a(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "f_a requires a positive finite parameter a (got {a})"
        )));
    }
    Ok((x + log_phi_cdf(-x / a)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn p(ell: f64) -> StepParam {
        StepParam::new(ell).unwrap()
    }

    #[test]
    fn step_param_rejects_nonpositive_ell() {
        assert!(StepParam::new(0.0).is_err());
        assert!(StepParam::new(-1.0).is_err());
        assert!(StepParam::new(f64::NAN).is_err());
        assert!(StepParam::new(f64::INFINITY).is_err());
    }

    /// Reference values computed with a 40-digit complementary error
    /// function, frozen here to 22 significant figures.
    #[test]
    fn phi_cdf_matches_high_precision_references() {
        let table = [
            (-8.0, 6.220960574271784123516e-16),
            (-5.0, 2.866515718791939116738e-7),
            (-3.0, 0.001349898031630094526652),
            (-2.0, 0.02275013194817920720028),
            (-1.0, 0.1586552539314570514148),
            (-0.5, 0.3085375387259868963623),
            (-std::f64::consts::FRAC_1_SQRT_2, 0.2397500610934767311586),
            (-0.1, 0.4601721627229710163311),
            (0.0, 0.5),
            (0.1, 0.5398278372770289836689),
            (0.5, 0.6914624612740131036377),
            (std::f64::consts::FRAC_1_SQRT_2, 0.7602499389065232688414),
            (1.0, 0.8413447460685429485852),
            (2.0, 0.9772498680518207927997),
            (3.0, 0.9986501019683699054733),
            (5.0, 0.9999997133484281208061),
            (8.0, 0.9999999999999993779039),
        ];
        for (x, want) in table {
            assert_relative_eq!(phi_cdf(x), want, max_relative = 1e-14);
        }
    }

    #[test]
    fn phi_cdf_is_symmetric_and_monotone() {
        let mut prev = 0.0;
        for i in 0..=1600 {
            let x = -8.0 + i as f64 * 0.01;
            let v = phi_cdf(x);
            assert!((phi_cdf(-x) - (1.0 - v)).abs() <= 1e-15);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn log_phi_cdf_matches_high_precision_references() {
        let table = [
            (-50.0, -1254.831361139419901254),
            (-35.0, -616.9751012619225134732),
            (-30.5, -469.4627373229121143867),
            (-30.0, -454.3212439563431971074),
            (-20.0, -203.9171553710972639368),
            (-10.0, -53.23128515051247057835),
            (-8.0, -35.0134371599145498955),
            (-3.0, -6.607726221510349543276),
            (0.0, -0.6931471805599453094172),
            (3.0, -0.001350809964748193798841),
        ];
        for (x, want) in table {
            assert_relative_eq!(log_phi_cdf(x), want, max_relative = 1e-13);
        }
    }

    /// D, Γ, A at assorted (ell, x) against 40-digit references.
    #[test]
    fn limit_functions_match_high_precision_references() {
        let table = [
            // (ell, x, D, Γ, A)
            (1.0, 0.0, 0.735758882342884643191, 0.735758882342884643191, 0.735758882342884643191),
            (1.0, 0.5, 0.6065306597126334236038, 0.9238411675755475264333, 0.3173105078629141028295),
            (1.0, 1.0, 0.4795001221869534623173, 0.9590002443739069246345, 0.0),
            (1.0, 2.0, 0.3632016024386859011229, 0.9802766798906596938475, -0.4725297298640839106442),
            (0.5, 0.1, 0.3251770908202033385583, 0.3910652101409465244649, 0.3260297919769058531431),
            (0.5, 3.0, 0.1267183121761123224097, 0.3362824337725688934449, -0.4240274392841050410133),
            (2.0, 0.5, 0.541341132946450767576, 0.7233421885318844251783, 0.1820010555854336576023),
            (2.0, 0.1, 0.218551895854559434115, 0.2185828727202836104676, 0.1748724935493717212181),
            (2.0, 100.0, 0.1121353172582613376455, 3.662283653185121768832, -18.76477979846714576028),
            (0.5, 100.0, 0.0277927477847227095418, 0.2707418469586407060202, -5.287807709985901202339),
            (1.3, 0.7, 0.6721243902959904326461, 1.131633211581196238131, 0.1906590651668096921226),
        ];
        for (ell, x, want_d, want_g, want_a) in table {
            let sp = p(ell);
            assert_relative_eq!(d_ell(&sp, x).unwrap(), want_d, max_relative = 1e-13);
            assert_relative_eq!(gamma_ell(&sp, x).unwrap(), want_g, max_relative = 1e-13);
            if want_a == 0.0 {
                assert_abs_diff_eq!(a_ell(&sp, x).unwrap(), 0.0, epsilon = 1e-13);
            } else {
                assert_relative_eq!(a_ell(&sp, x).unwrap(), want_a, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn tiny_x_takes_the_zero_branch_within_its_error_bound() {
        // At x = 1e-13 the exact value differs from the x = 0 constant by
        // ~7e-14; the branch is allowed 1e-12.
        let sp = p(1.0);
        let exact = 0.7357588823429582190793;
        assert_abs_diff_eq!(d_ell(&sp, 1e-13).unwrap(), exact, epsilon = 1e-12);
        assert_eq!(d_ell(&sp, 1e-13).unwrap(), d_ell(&sp, 0.0).unwrap());
    }

    #[test]
    fn limit_functions_reject_negative_x() {
        let sp = p(1.0);
        assert!(d_ell(&sp, -0.1).is_err());
        assert!(gamma_ell(&sp, -0.1).is_err());
        assert!(a_ell(&sp, -0.1).is_err());
        assert!(d_ell_prime(&sp, 0.0).is_err());
        assert!(gamma_ell_prime(&sp, -1.0).is_err());
        assert!(a_ell_prime(&sp, 0.0).is_err());
    }

    #[test]
    fn h_ell_matches_references_and_equals_d_at_one() {
        let table = [
            (0.5, 0.1809184024579407667537),
            (1.0, 0.4795001221869534623173),
            (2.0, 0.6291968282011405226351),
            (1.3, 0.6049704367689146017955),
        ];
        for (ell, want) in table {
            let sp = p(ell);
            assert_relative_eq!(h_ell(&sp), want, max_relative = 1e-14);
            // Exact, not approximate: the two code paths compute the same
            // product for x = 1.
            assert_eq!(h_ell(&sp), d_ell(&sp, 1.0).unwrap());
        }
    }

    #[test]
    fn a_at_one_is_zero_and_identity_holds_on_a_grid() {
        for ell in [0.5, 1.0, 2.0, 1.3, 2.7] {
            let sp = p(ell);
            assert_abs_diff_eq!(a_ell(&sp, 1.0).unwrap(), 0.0, epsilon = 1e-12);
            for i in 0..=1000 {
                let x = 100.0 * i as f64 / 1000.0;
                let a = a_ell(&sp, x).unwrap();
                let recombined = -2.0 * x * d_ell(&sp, x).unwrap() + gamma_ell(&sp, x).unwrap();
                assert_abs_diff_eq!(a, recombined, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn a_sign_structure() {
        for ell in [0.5, 1.0, 2.0] {
            let sp = p(ell);
            for i in 0..=1000 {
                let x = 100.0 * i as f64 / 1000.0;
                let a = a_ell(&sp, x).unwrap();
                if x < 1.0 {
                    assert!(a > 0.0, "A_{ell}({x}) = {a} should be positive");
                } else if x > 1.0 {
                    assert!(a < 0.0, "A_{ell}({x}) = {a} should be negative");
                }
            }
        }
    }

    #[test]
    fn extension_is_constant_then_bridges_then_matches() {
        for ell in [0.5, 1.0, 2.0] {
            let sp = p(ell);
            assert_eq!(a_ell_ext(&sp, -1.0), 1.0);
            assert_eq!(a_ell_ext(&sp, -0.5), 1.0);
            let a0 = a_ell(&sp, 0.0).unwrap();
            assert_eq!(a_ell_ext(&sp, 0.0), a0);
            // Bridge value strictly between the endpoint values.
            let mid = a_ell_ext(&sp, -0.25);
            assert!(mid > a0.min(1.0) && mid < a0.max(1.0));
            // Monotone across the bridge.
            let mut prev = 1.0;
            for i in 1..=100 {
                let x = -0.5 + 0.5 * i as f64 / 100.0;
                let v = a_ell_ext(&sp, x);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
            // Derivative continuity at the constant junction; value
            // continuity at zero.
            let h = 1e-7;
            assert!((a_ell_ext(&sp, -0.5 + h) - 1.0).abs() < 1e-12);
            assert!((a_ell_ext(&sp, -h) - a0).abs() < 1e-6);
            // Positive values match a_ell exactly.
            assert_eq!(a_ell_ext(&sp, 0.7), a_ell(&sp, 0.7).unwrap());
        }
    }

    /// Derivatives against 40-digit numerical differentiation.
    #[test]
    fn derivatives_match_high_precision_references() {
        let table = [
            // (ell, x, dD, dΓ, dA)
            (1.0, 1.0, -0.179586812014630133253, 0.04010883271923106527039, -0.559717787625415592858),
            (2.0, 0.7, 0.18825289173791084444, 1.111711228859519059409, -0.3541192699884413452598),
            (0.5, 0.3, -0.2156264341524301854689, -0.04138750959522975393716, -0.4172584102164956563475),
            (1.3, 2.5, -0.07217202119114957232197, 0.06023753943838442216804, -0.4336779079621450479032),
            (1.0, 0.05, 0.5847620625129151286613, 0.7547693945633219979486, -0.8472470672246948898057),
        ];
        for (ell, x, want_dd, want_dg, want_da) in table {
            let sp = p(ell);
            assert_relative_eq!(d_ell_prime(&sp, x).unwrap(), want_dd, max_relative = 1e-12);
            assert_relative_eq!(gamma_ell_prime(&sp, x).unwrap(), want_dg, max_relative = 1e-12);
            assert_relative_eq!(a_ell_prime(&sp, x).unwrap(), want_da, max_relative = 1e-12);
        }
    }

    #[test]
    fn a_prime_consistent_with_recombination() {
        // A = -2xD + Γ differentiates to A' = -2D - 2xD' + Γ'; the closed
        // form must agree with that recombination.
        for (ell, x) in [(1.0, 0.4), (2.0, 1.7), (0.5, 0.05), (1.3, 10.0)] {
            let sp = p(ell);
            let lhs = a_ell_prime(&sp, x).unwrap();
            let rhs = -2.0 * d_ell(&sp, x).unwrap() - 2.0 * x * d_ell_prime(&sp, x).unwrap()
                + gamma_ell_prime(&sp, x).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn huge_x_evaluates_through_the_log_path_without_overflow() {
        let sp = p(1.0);
        for x in [1e3, 1e4, 1e6] {
            let d = d_ell(&sp, x).unwrap();
            assert!(d.is_finite() && d > 0.0 && d < 1.0);
            let g = gamma_ell(&sp, x).unwrap();
            assert!(g.is_finite() && g > 0.0);
            let a = a_ell(&sp, x).unwrap();
            assert!(a.is_finite() && a < 0.0);
        }
    }

    /// Expectation kit against 40-digit quadrature of the defining integrals
    /// (computed independently of the closed forms).
    #[test]
    fn expectation_kit_matches_quadrature_references() {
        let sqrt2 = std::f64::consts::SQRT_2;
        let table = [
            // (mu, sigma, E[1∧e^X], E[e^X 1_{X<0}], E[-2X(1∧e^X)])
            (0.0, 1.0, 0.7615782918651233716818, 0.2615782918651233716818, -0.5231565837302467433637),
            (-1.0, 1.0, 0.4619205837877737632167, 0.3032653298563167118019, 0.3173105078629141028295),
            (-1.0, sqrt2, 0.4795001221869534623173, 0.2397500610934767311586, 0.0),
            (-4.0, 2.0, 0.09041777356648555314728, 0.067667641618306345947, 0.1820010555854336576023),
            (2.0, 3.0, 0.8292310137207637210895, 0.08172355126768663415356, -4.787947977701414299122),
            (-0.3, 0.7, 0.7061153052079397503252, 0.371997734310315062201, 0.05911140350065511981526),
        ];
        for (mu, sigma, want_min1, want_ind, want_neg2x) in table {
            assert_relative_eq!(
                expect_min1_exp(mu, sigma).unwrap(),
                want_min1,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                expect_exp_indicator_neg(mu, sigma).unwrap(),
                want_ind,
                max_relative = 1e-12
            );
            if want_neg2x == 0.0 {
                assert_abs_diff_eq!(
                    expect_neg2x_min1_exp(mu, sigma).unwrap(),
                    0.0,
                    epsilon = 1e-12
                );
            } else {
                assert_relative_eq!(
                    expect_neg2x_min1_exp(mu, sigma).unwrap(),
                    want_neg2x,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn expect_x_min1_exp_matches_quadrature_references() {
        let table = [
            (1.0, 0.0, 0.2615782918651233716818),
            (0.5, -1.0, 0.1945063174142518099761),
            (-2.0, 0.3, -0.3147374696383400255154),
            (3.0, 2.0, 0.2451706538030599024607),
        ];
        for (a, b, want) in table {
            assert_relative_eq!(expect_x_min1_exp(a, b), want, max_relative = 1e-12);
        }
        assert_eq!(expect_x_min1_exp(0.0, 3.0), 0.0);
        assert_eq!(expect_x_min1_exp(0.0, -100.0), 0.0);
        // Result carries the sign of a.
        for (a, b) in [(2.0, -3.0), (-0.7, 5.0), (0.01, 0.0), (-4.0, -4.0)] {
            assert_eq!(expect_x_min1_exp(a, b).signum(), a.signum());
        }
    }

    #[test]
    fn kit_reproduces_limit_functions_at_matched_parameters() {
        // With mu = -ell^2 and sigma^2 = 2 ell^2 x the kit must reproduce
        // Γ/(2 ell^2), D/(2 ell^2), and A.
        for (ell, x) in [(1.0, 0.5), (2.0, 0.5), (0.5, 2.0), (1.3, 0.05), (1.0, 1.0)] {
            let sp = p(ell);
            let mu = -ell * ell;
            let sigma = (2.0 * ell * ell * x).sqrt();
            let two_l2 = 2.0 * ell * ell;
            assert_abs_diff_eq!(
                expect_min1_exp(mu, sigma).unwrap(),
                gamma_ell(&sp, x).unwrap() / two_l2,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                expect_exp_indicator_neg(mu, sigma).unwrap(),
                d_ell(&sp, x).unwrap() / two_l2,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                expect_neg2x_min1_exp(mu, sigma).unwrap(),
                a_ell(&sp, x).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn kit_limits_and_domination() {
        assert!(expect_min1_exp(-80.0, 1.0).unwrap() < 1e-12);
        assert!(expect_min1_exp(80.0, 1.0).unwrap() > 1.0 - 1e-12);
        for (mu, sigma) in [(0.0, 1.0), (-2.0, 3.0), (1.0, 0.5)] {
            let min1 = expect_min1_exp(mu, sigma).unwrap();
            assert!(min1 > 0.0 && min1 <= 1.0);
            assert!(expect_exp_indicator_neg(mu, sigma).unwrap() < min1);
        }
        assert!(expect_min1_exp(0.0, 0.0).is_err());
        assert!(expect_exp_indicator_neg(0.0, -1.0).is_err());
        assert!(expect_neg2x_min1_exp(0.0, 0.0).is_err());
    }

    #[test]
    fn f_a_matches_its_direct_form_and_stays_bounded() {
        assert_abs_diff_eq!(f_a(1.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        for (a, x) in [(0.5f64, -2.0f64), (1.0, 1.0), (2.0, 3.0), (3.0, -0.5)] {
            let direct = x.exp() * phi_cdf(-x / a);
            assert_relative_eq!(f_a(a, x).unwrap(), direct, max_relative = 1e-13);
        }
        // The log-space path keeps the tail finite where the direct product
        // would overflow its exponential factor.
        let far = f_a(1.0, 800.0).unwrap();
        assert!(far.is_finite() && far >= 0.0 && far < 1e-10);
        assert!(f_a(0.0, 1.0).is_err());
        assert!(f_a(-1.0, 1.0).is_err());
    }
}
