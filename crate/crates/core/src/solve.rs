//! Inverting the rate formulas: required transmit SNR, tolerable aliased
//! interference, the maximum allowable ratio (MAR) and its large-array
//! constants.
//!
//! All root finding is bisection on brackets whose end points are checked
//! before iterating. The rates are monotone in the unknowns, so a checked
//! bracket always contains exactly one root.

use crate::closed_form::{sumrate_icsi, sumrate_icsi_opt, sumrate_pcsi, sumrate_sup, SinrForm};
use crate::error::{Error, Result};
use crate::system::{InterferenceProfile, RateTarget, Scenario, SystemConfig};
use crate::units::{log2_1p, to_db};

/// Targets must stay this fraction below the supremum rate.
pub const FEASIBILITY_MARGIN: f64 = 1e-6;

/// Upper limit for the interference-power bracket expansion.
pub const GAMMA_B_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Accepted rate residual in bpcu.
    pub rate_tol: f64,
    /// Transmit-SNR search bracket (linear).
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub max_iter: usize,
    pub form: SinrForm,
    /// Re-optimize the training length when interference is present instead
    /// of keeping the one chosen for the interference-free target.
    pub reoptimize_tau: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            rate_tol: 1e-10,
            bracket_lo: 1e-12,
            bracket_hi: 1e6,
            max_iter: 200,
            form: SinrForm::Exact,
            reoptimize_tau: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_tol > 0.0) {
            return Err(Error::InvalidSettings("rate tolerance must be positive".into()));
        }
        if !(self.bracket_lo > 0.0 && self.bracket_lo < self.bracket_hi && self.bracket_hi.is_finite())
        {
            return Err(Error::InvalidSettings(format!(
                "need 0 < bracket_lo < bracket_hi, got [{}, {}]",
                self.bracket_lo, self.bracket_hi
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidSettings("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Solved interference-free operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSolution {
    pub gamma: f64,
    /// Training length chosen at the solution (imperfect CSI only).
    pub tau: Option<usize>,
}

/// Solved tolerable interference together with the operating point it was
/// computed at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBSolution {
    pub gamma_b: f64,
    pub gamma: f64,
    /// Training length used with interference present.
    pub tau: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarResult {
    pub scenario: Scenario,
    pub gamma_star: f64,
    pub gamma_b_star: f64,
    pub tau_star: Option<usize>,
    pub r_b_linear: f64,
    pub r_b_db: f64,
}

/// Large-array constants.
///
/// Perfect CSI: `c = lim M γ*` and `c_limit = lim γ_b = lim r_b`.
/// Imperfect CSI: `c = lim √M γ*` and `c_limit = lim √M γ_b = lim √M r_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConstants {
    pub scenario: Scenario,
    pub c: f64,
    pub c_limit: f64,
    pub tau_star: Option<usize>,
}

/// Sum-rate of `scenario` at `gamma`. For imperfect CSI, `tau` pins the
/// training length; `None` maximizes over it. Returns the rate and the
/// training length used.
pub fn rate_at(
    cfg: &SystemConfig,
    scenario: Scenario,
    gamma: f64,
    intf: &InterferenceProfile,
    tau: Option<usize>,
    form: SinrForm,
) -> Result<(f64, Option<usize>)> {
    match (scenario, tau) {
        (Scenario::PerfectCsi, _) => Ok((sumrate_pcsi(cfg, gamma, intf)?, None)),
        (Scenario::ImperfectCsi, Some(tau)) => {
            Ok((sumrate_icsi(cfg, tau, gamma, intf, form)?, Some(tau)))
        }
        (Scenario::ImperfectCsi, None) => {
            let (rate, tau) = sumrate_icsi_opt(cfg, gamma, intf, form)?;
            Ok((rate, Some(tau)))
        }
    }
}

/// Transmit SNR at which the interference-free sum-rate equals `rate`.
///
/// For imperfect CSI the rate is maximized over the training length at every
/// probe, and the maximizer at the solution is returned with it.
pub fn solve_gamma(
    cfg: &SystemConfig,
    scenario: Scenario,
    rate: f64,
    settings: &SolverSettings,
) -> Result<GammaSolution> {
    settings.validate()?;
    if !(rate > 0.0) {
        return Err(Error::InvalidTarget(format!("rate must be positive, got {rate}")));
    }
    let supremum = sumrate_sup(cfg, scenario, None)?;
    let limit = (1.0 - FEASIBILITY_MARGIN) * supremum;
    if rate > limit {
        return Err(Error::Infeasible {
            rate,
            limit,
            supremum,
        });
    }
    let none = InterferenceProfile::empty();
    let eval = |g: f64| rate_at(cfg, scenario, g, &none, None, settings.form);
    let gamma = bisect(
        Bracket::Geometric(settings.bracket_lo, settings.bracket_hi),
        Slope::Increasing,
        rate,
        settings,
        |g| eval(g).map(|(r, _)| r),
    )?;
    let (_, tau) = eval(gamma)?;
    Ok(GammaSolution { gamma, tau })
}

/// Largest total aliased SNR, split evenly over `interferers`, that keeps the
/// sum-rate at `target.rate_prime()` when transmitting at the SNR that
/// achieves `target.rate()` without interference.
///
/// An even split is optimal: for a fixed total, the SINR is largest when all
/// interferers are equally strong. For imperfect CSI the training length is
/// frozen at its interference-free optimum unless
/// [`SolverSettings::reoptimize_tau`] is set.
pub fn solve_gamma_b(
    cfg: &SystemConfig,
    scenario: Scenario,
    target: &RateTarget,
    interferers: usize,
    settings: &SolverSettings,
) -> Result<GammaBSolution> {
    if interferers == 0 {
        return Err(Error::InvalidProfile(
            "at least one interferer needed to lose rate".into(),
        ));
    }
    let op = solve_gamma(cfg, scenario, target.rate(), settings)?;
    let tau = if settings.reoptimize_tau { None } else { op.tau };
    let rate_with = |gamma_b: f64| -> Result<(f64, Option<usize>)> {
        let intf = InterferenceProfile::uniform(gamma_b, interferers)?;
        rate_at(cfg, scenario, op.gamma, &intf, tau, settings.form)
    };

    let mut hi = 1.0;
    while rate_with(hi)?.0 >= target.rate_prime() {
        hi *= 2.0;
        if hi > GAMMA_B_CAP {
            return Err(Error::BracketCap {
                cap: GAMMA_B_CAP,
                target: target.rate_prime(),
            });
        }
    }
    let gamma_b = bisect(
        Bracket::Linear(0.0, hi),
        Slope::Decreasing,
        target.rate_prime(),
        settings,
        |gb| rate_with(gb).map(|(r, _)| r),
    )?;
    let (_, tau_used) = rate_with(gamma_b)?;
    Ok(GammaBSolution {
        gamma_b,
        gamma: op.gamma,
        tau: tau_used,
    })
}

/// Maximum allowable ratio of total aliased interference power to the
/// received in-band power before aliasing, `γ_b / (1 + γ Σ β_q)`.
pub fn mar(
    cfg: &SystemConfig,
    scenario: Scenario,
    target: &RateTarget,
    interferers: usize,
    settings: &SolverSettings,
) -> Result<MarResult> {
    let sol = solve_gamma_b(cfg, scenario, target, interferers, settings)?;
    let r_b_linear = sol.gamma_b / (1.0 + sol.gamma * cfg.beta_sum());
    Ok(MarResult {
        scenario,
        gamma_star: sol.gamma,
        gamma_b_star: sol.gamma_b,
        tau_star: sol.tau,
        r_b_linear,
        r_b_db: to_db(r_b_linear),
    })
}

/// Perfect-CSI constants from `Σ log2(1 + β_k c) = R` and
/// `Σ log2(1 + β_k c/(1 + c')) = R'`.
pub fn asymptotic_pcsi(betas: &[f64], target: &RateTarget) -> Result<AsymptoticConstants> {
    check_betas(betas)?;
    let c = solve_log_sum(betas, target.rate())?;
    let x = solve_log_sum(betas, target.rate_prime())?;
    Ok(AsymptoticConstants {
        scenario: Scenario::PerfectCsi,
        c,
        c_limit: c / x - 1.0,
        tau_star: None,
    })
}

/// Imperfect-CSI constants.
///
/// For each admissible `τ`, solves `(1 - τ/N_u) Σ log2(1 + τ c² β_k²) = R`
/// and keeps the smallest `c` (ties to the smaller `τ`). Then solves
/// `(1 - τ/N_u) Σ log2(1 + τ c² β_k² / (1 + c_b²/I)) = R'` for `c_b`.
pub fn asymptotic_icsi(
    betas: &[f64],
    uplink_len: usize,
    target: &RateTarget,
    interferers: usize,
) -> Result<AsymptoticConstants> {
    check_betas(betas)?;
    let users = betas.len();
    if uplink_len < users + 1 {
        return Err(Error::InvalidConfig(format!(
            "{users} users need an uplink slot of at least {} channel uses",
            users + 1
        )));
    }
    if interferers == 0 {
        return Err(Error::InvalidProfile(
            "at least one interferer needed to lose rate".into(),
        ));
    }
    let weights: Vec<f64> = betas.iter().map(|b| b * b).collect();
    let prefactor = |tau: usize| 1.0 - tau as f64 / uplink_len as f64;

    // y = τ c²
    let mut best: Option<(f64, f64, usize)> = None;
    for tau in users..uplink_len {
        let y = solve_log_sum(&weights, target.rate() / prefactor(tau))?;
        let c = (y / tau as f64).sqrt();
        if best.is_none_or(|(c_best, _, _)| c < c_best) {
            best = Some((c, y, tau));
        }
    }
    let (c, y, tau) = best.expect("non-empty training range");
    let y_prime = solve_log_sum(&weights, target.rate_prime() / prefactor(tau))?;
    let c_b = (interferers as f64 * (y / y_prime - 1.0)).sqrt();
    Ok(AsymptoticConstants {
        scenario: Scenario::ImperfectCsi,
        c,
        c_limit: c_b,
        tau_star: Some(tau),
    })
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() || betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::InvalidConfig(
            "large-scale gains must be non-empty and positive".into(),
        ));
    }
    Ok(())
}

/// Positive `x` with `Σ log2(1 + w_k x) = target`, to machine precision.
fn solve_log_sum(weights: &[f64], target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidTarget(format!(
            "rate must be positive and finite, got {target}"
        )));
    }
    let f = |x: f64| weights.iter().map(|w| log2_1p(w * x)).sum::<f64>();
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(lo) >= target {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::InvalidTarget(format!("rate {target} too small")));
        }
    }
    while f(hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidTarget(format!("rate {target} too large")));
        }
    }
    loop {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            return Ok(if (f(lo) - target).abs() <= (f(hi) - target).abs() {
                lo
            } else {
                hi
            });
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[derive(Clone, Copy)]
enum Bracket {
    Linear(f64, f64),
    Geometric(f64, f64),
}

#[derive(Clone, Copy, PartialEq)]
enum Slope {
    Increasing,
    Decreasing,
}

/// Bisection for `f(x) = target` with `f` monotone. Stops when the residual
/// is within `settings.rate_tol`.
fn bisect<F>(
    bracket: Bracket,
    slope: Slope,
    target: f64,
    settings: &SolverSettings,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi, geometric) = match bracket {
        Bracket::Linear(lo, hi) => (lo, hi, false),
        Bracket::Geometric(lo, hi) => (lo, hi, true),
    };
    let sign = if slope == Slope::Increasing { 1.0 } else { -1.0 };
    let g_lo = sign * (f(lo)? - target);
    let g_hi = sign * (f(hi)? - target);
    if g_lo.abs() <= settings.rate_tol {
        return Ok(lo);
    }
    if g_hi.abs() <= settings.rate_tol {
        return Ok(hi);
    }
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::BracketFailure {
            lo,
            hi,
            target,
            rate_lo: target + sign * g_lo,
            rate_hi: target + sign * g_hi,
        });
    }
    let mut residual = f64::INFINITY;
    for _ in 0..settings.max_iter {
        let mid = if geometric {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let g = sign * (f(mid)? - target);
        residual = g.abs();
        if residual <= settings.rate_tol {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iter,
        tol: settings.rate_tol,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig_cfg(m: usize) -> SystemConfig {
        SystemConfig::equal_gains(m, 10, 100, 200, 1.0).unwrap()
    }

    #[test]
    fn single_user_closed_form() {
        let cfg = SystemConfig::new(100, 100, 200, vec![1.0]).unwrap();
        let sol = solve_gamma(&cfg, Scenario::PerfectCsi, 1.0, &SolverSettings::default()).unwrap();
        assert_relative_eq!(sol.gamma, 1.0 / 99.0, max_relative = 1e-9);
        assert_eq!(sol.tau, None);
    }

    #[test]
    fn solve_round_trip() {
        let cfg = fig_cfg(160);
        let s = SolverSettings::default();
        let sol = solve_gamma(&cfg, Scenario::PerfectCsi, 10.0, &s).unwrap();
        let r = sumrate_pcsi(&cfg, sol.gamma, &InterferenceProfile::empty()).unwrap();
        assert!((r - 10.0).abs() <= 1e-9);

        let sol = solve_gamma(&cfg, Scenario::ImperfectCsi, 10.0, &s).unwrap();
        let tau = sol.tau.unwrap();
        let r = sumrate_icsi(&cfg, tau, sol.gamma, &InterferenceProfile::empty(), s.form).unwrap();
        assert!((r - 10.0).abs() <= 1e-9);
    }

    #[test]
    fn infeasible_rate() {
        let cfg = fig_cfg(64);
        let sup = sumrate_sup(&cfg, Scenario::ImperfectCsi, None).unwrap();
        let e = solve_gamma(&cfg, Scenario::ImperfectCsi, 1.01 * sup, &SolverSettings::default());
        assert!(matches!(e, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn bracket_failure_and_non_convergence_differ() {
        let cfg = fig_cfg(160);
        let tight = SolverSettings {
            bracket_hi: 1e-3,
            ..Default::default()
        };
        assert!(matches!(
            solve_gamma(&cfg, Scenario::PerfectCsi, 10.0, &tight),
            Err(Error::BracketFailure { .. })
        ));
        let short = SolverSettings {
            max_iter: 3,
            ..Default::default()
        };
        assert!(matches!(
            solve_gamma(&cfg, Scenario::PerfectCsi, 10.0, &short),
            Err(Error::NoConvergence { .. })
        ));
        let bad = SolverSettings {
            bracket_lo: 2.0,
            bracket_hi: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            solve_gamma(&cfg, Scenario::PerfectCsi, 10.0, &bad),
            Err(Error::InvalidSettings(_))
        ));
    }

    #[test]
    fn gamma_b_round_trip() {
        let cfg = fig_cfg(160);
        let s = SolverSettings::default();
        let target = RateTarget::new(10.0, 9.0).unwrap();
        for scenario in [Scenario::PerfectCsi, Scenario::ImperfectCsi] {
            let sol = solve_gamma_b(&cfg, scenario, &target, 2, &s).unwrap();
            let intf = InterferenceProfile::uniform(sol.gamma_b, 2).unwrap();
            let (r, _) = rate_at(&cfg, scenario, sol.gamma, &intf, sol.tau, s.form).unwrap();
            assert!((r - 9.0).abs() <= 1e-9, "{scenario}: {r}");
        }
        assert!(solve_gamma_b(&cfg, Scenario::PerfectCsi, &target, 0, &s).is_err());
    }

    #[test]
    fn vanishing_loss_needs_vanishing_interference() {
        let cfg = fig_cfg(160);
        let s = SolverSettings::default();
        let mut last = f64::INFINITY;
        for gap in [1e-1, 1e-2, 1e-3, 1e-4] {
            let target = RateTarget::new(10.0, 10.0 - gap).unwrap();
            let gb = solve_gamma_b(&cfg, Scenario::ImperfectCsi, &target, 2, &s)
                .unwrap()
                .gamma_b;
            assert!(gb > 0.0 && gb < last);
            last = gb;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn mar_identity() {
        let cfg = fig_cfg(320);
        let target = RateTarget::new(10.0, 9.0).unwrap();
        for scenario in [Scenario::PerfectCsi, Scenario::ImperfectCsi] {
            let r = mar(&cfg, scenario, &target, 2, &SolverSettings::default()).unwrap();
            assert_eq!(
                r.r_b_linear,
                r.gamma_b_star / (1.0 + r.gamma_star * cfg.beta_sum())
            );
            assert_eq!(r.r_b_db, 10.0 * r.r_b_linear.log10());
            assert_eq!(r.tau_star.is_some(), scenario == Scenario::ImperfectCsi);
        }
    }

    #[test]
    fn asymptotic_pcsi_equal_gains() {
        let target = RateTarget::new(10.0, 9.0).unwrap();
        let a = asymptotic_pcsi(&[1.0; 10], &target).unwrap();
        assert_relative_eq!(a.c, 1.0, max_relative = 1e-14);
        let expect = 1.0 / (2f64.powf(0.9) - 1.0) - 1.0;
        assert_relative_eq!(a.c_limit, expect, max_relative = 1e-12);
        assert!((to_db(a.c_limit) + 8.11).abs() < 0.005);
    }

    #[test]
    fn asymptotic_pcsi_matches_large_array() {
        let target = RateTarget::new(10.0, 9.0).unwrap();
        let a = asymptotic_pcsi(&[1.0; 10], &target).unwrap();
        let r = mar(
            &fig_cfg(1 << 16),
            Scenario::PerfectCsi,
            &target,
            2,
            &SolverSettings::default(),
        )
        .unwrap();
        assert_relative_eq!(r.r_b_linear, a.c_limit, max_relative = 0.01);
        assert_relative_eq!(r.gamma_star * (1 << 16) as f64, a.c, max_relative = 0.01);
    }

    #[test]
    fn asymptotic_icsi_vanishing_loss() {
        let mut last = f64::INFINITY;
        for gap in [1.0, 0.1, 0.01, 0.001] {
            let target = RateTarget::new(10.0, 10.0 - gap).unwrap();
            let a = asymptotic_icsi(&[1.0; 10], 100, &target, 2).unwrap();
            assert!(a.c_limit > 0.0 && a.c_limit < last);
            last = a.c_limit;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn asymptotic_icsi_rejects_bad_inputs() {
        let target = RateTarget::new(10.0, 9.0).unwrap();
        assert!(asymptotic_icsi(&[1.0; 10], 10, &target, 2).is_err());
        assert!(asymptotic_icsi(&[1.0; 10], 100, &target, 0).is_err());
        assert!(asymptotic_pcsi(&[], &target).is_err());
    }

    #[test]
    fn deterministic() {
        let cfg = SystemConfig::new(96, 50, 60, vec![1.0, 0.3, 0.7, 2.0]).unwrap();
        let target = RateTarget::new(6.0, 5.2).unwrap();
        let s = SolverSettings::default();
        let a = mar(&cfg, Scenario::ImperfectCsi, &target, 3, &s).unwrap();
        let b = mar(&cfg, Scenario::ImperfectCsi, &target, 3, &s).unwrap();
        assert_eq!(a.r_b_linear.to_bits(), b.r_b_linear.to_bits());
        assert_eq!(a.gamma_star.to_bits(), b.gamma_star.to_bits());
    }

    #[test]
    fn reoptimized_tau_tolerates_more() {
        let cfg = fig_cfg(320);
        let target = RateTarget::new(10.0, 9.0).unwrap();
        let frozen = mar(&cfg, Scenario::ImperfectCsi, &target, 2, &SolverSettings::default())
            .unwrap();
        let reopt = mar(
            &cfg,
            Scenario::ImperfectCsi,
            &target,
            2,
            &SolverSettings {
                reoptimize_tau: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(reopt.gamma_b_star >= frozen.gamma_b_star);
    }
}
