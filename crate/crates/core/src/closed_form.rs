//! Closed-form SINR and sum-rate of the MRC receiver with aliased
//! out-of-band interference.
//!
//! Every SINR here is `E|ES|² / E|EW|²`: the power of the deterministic
//! part of the combiner output over the power of everything else. Inverse
//! SINRs are reported as a sum of groups, each normalized by the
//! desired-signal power, so a group can be compared one-to-one with the
//! matching empirical power from [`crate::montecarlo`].

use crate::error::{Error, Result};
use crate::system::{check_gamma, InterferenceProfile, Scenario, SystemConfig};
use crate::units::log2_1p;

/// Which closed form to use for the imperfect-CSI SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinrForm {
    /// Exact second moments of the combiner output under LMMSE estimation.
    /// Agrees with the simulator to within sampling error.
    #[default]
    Exact,
    /// Five-group expression that adds the powers of the estimate and
    /// estimation-error parts of each interfering term as if they were
    /// uncorrelated. It under-states the SINR by a few percent (about 7% at
    /// `M = 32`, `τ = 8`, `γ = 0.5`), and is kept because published
    /// attenuation figures are computed with it.
    FiveTerm,
}

/// Inverse SINR of one user, split by origin.
///
/// `own_symbol` is the fluctuation of the effective gain applied to the
/// user's own symbol (self-interference plus, with estimated channels, the
/// own estimation error). `other_users` is the leakage of the remaining
/// users, `interference` the combined aliased interferers and `noise` the
/// combined receiver noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms {
    pub own_symbol: f64,
    pub other_users: f64,
    pub interference: f64,
    pub noise: f64,
}

/// Selects one group of [`SinrTerms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermGroup {
    OwnSymbol,
    OtherUsers,
    Interference,
    Noise,
}

impl SinrTerms {
    pub fn total(&self) -> f64 {
        self.own_symbol + self.other_users + self.interference + self.noise
    }

    pub fn sinr(&self) -> f64 {
        1.0 / self.total()
    }

    pub fn get(&self, group: TermGroup) -> f64 {
        match group {
            TermGroup::OwnSymbol => self.own_symbol,
            TermGroup::OtherUsers => self.other_users,
            TermGroup::Interference => self.interference,
            TermGroup::Noise => self.noise,
        }
    }

    /// Copy with one group multiplied by `factor`.
    pub fn scaled(mut self, group: TermGroup, factor: f64) -> Self {
        let slot = match group {
            TermGroup::OwnSymbol => &mut self.own_symbol,
            TermGroup::OtherUsers => &mut self.other_users,
            TermGroup::Interference => &mut self.interference,
            TermGroup::Noise => &mut self.noise,
        };
        *slot *= factor;
        self
    }
}

/// Perfect-CSI SINR of user `k` (zero-based):
/// `M / (1 + (1 + γ_b)/(β_k γ) + Σ_{q≠k} β_q/β_k)`.
///
/// Depends on the interferers only through their total power.
pub fn sinr_pcsi(
    cfg: &SystemConfig,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
) -> Result<f64> {
    cfg.check_user(k)?;
    check_gamma(gamma)?;
    Ok(sinr_pcsi_unchecked(cfg, k, gamma, intf.total()))
}

fn sinr_pcsi_unchecked(cfg: &SystemConfig, k: usize, gamma: f64, gamma_b: f64) -> f64 {
    let betas = cfg.betas();
    let beta_k = betas[k];
    let others: f64 = betas
        .iter()
        .enumerate()
        .filter(|&(q, _)| q != k)
        .map(|(_, b)| b / beta_k)
        .sum();
    cfg.antennas() as f64 / (1.0 + (1.0 + gamma_b) / (beta_k * gamma) + others)
}

/// Perfect-CSI inverse SINR split by origin; sums to `1 / sinr_pcsi`.
pub fn pcsi_terms(
    cfg: &SystemConfig,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
) -> Result<SinrTerms> {
    cfg.check_user(k)?;
    check_gamma(gamma)?;
    let m = cfg.antennas() as f64;
    let beta_k = cfg.betas()[k];
    let others = cfg.beta_sum() - beta_k;
    Ok(SinrTerms {
        own_symbol: 1.0 / m,
        other_users: others / (m * beta_k),
        interference: intf.total() / (m * beta_k * gamma),
        noise: 1.0 / (m * beta_k * gamma),
    })
}

/// Perfect-CSI sum-rate in bpcu.
pub fn sumrate_pcsi(cfg: &SystemConfig, gamma: f64, intf: &InterferenceProfile) -> Result<f64> {
    check_gamma(gamma)?;
    let gamma_b = intf.total();
    Ok((0..cfg.users())
        .map(|k| log2_1p(sinr_pcsi_unchecked(cfg, k, gamma, gamma_b)))
        .sum())
}

/// Exact imperfect-CSI inverse SINR of user `k` with `tau` training symbols.
///
/// With `D_k = τγβ_k + γ_b + 1` the groups are
///
/// ```text
/// own_symbol   = 1/M + (1 + γ_b)/(M τ γ β_k)
/// other_users  = D_k Σ_{q≠k} β_q / (M τ γ β_k²)
/// interference = D_k γ_b / (M τ γ² β_k²) + ΓᵀΓ / (τ γ² β_k²)
/// noise        = D_k / (M τ γ² β_k²)
/// ```
///
/// The `ΓᵀΓ` term does not shrink with `M`: the interferer channels corrupt
/// every channel estimate in the same direction, so combining adds them
/// coherently.
pub fn icsi_terms(
    cfg: &SystemConfig,
    tau: usize,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
) -> Result<SinrTerms> {
    check_icsi_args(cfg, tau, k, gamma)?;
    Ok(icsi_terms_unchecked(cfg, tau, k, gamma, intf))
}

fn icsi_terms_unchecked(
    cfg: &SystemConfig,
    tau: usize,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
) -> SinrTerms {
    let m = cfg.antennas() as f64;
    let tg = tau as f64 * gamma;
    let beta_k = cfg.betas()[k];
    let gamma_b = intf.total();
    let d_k = tg * beta_k + gamma_b + 1.0;
    let others = cfg.beta_sum() - beta_k;
    let sig = tg * gamma * beta_k * beta_k;
    SinrTerms {
        own_symbol: 1.0 / m + (1.0 + gamma_b) / (m * tg * beta_k),
        other_users: d_k * others / (m * tg * beta_k * beta_k),
        interference: d_k * gamma_b / (m * sig) + intf.sum_sq() / sig,
        noise: d_k / (m * sig),
    }
}

/// The five denominator groups of [`SinrForm::FiveTerm`], in their
/// original grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveTermGroups {
    /// Self-interference bracket.
    pub self_bracket: f64,
    /// Interferers combined through the corrupted channel estimate.
    pub beam: f64,
    /// Receiver noise.
    pub noise: f64,
    /// Other users seen through their channel estimates.
    pub multi_user: f64,
    /// Estimation-error sum over all users.
    pub estimation_error: f64,
}

impl FiveTermGroups {
    pub fn total(&self) -> f64 {
        self.self_bracket + self.beam + self.noise + self.multi_user + self.estimation_error
    }

    pub fn sinr(&self) -> f64 {
        1.0 / self.total()
    }
}

/// Groups of the five-term imperfect-CSI expression for user `k`.
pub fn icsi_five_term(
    cfg: &SystemConfig,
    tau: usize,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
) -> Result<FiveTermGroups> {
    check_icsi_args(cfg, tau, k, gamma)?;
    Ok(icsi_five_term_unchecked(cfg, tau, k, gamma, intf))
}

fn icsi_five_term_unchecked(
    cfg: &SystemConfig,
    tau: usize,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
) -> FiveTermGroups {
    let m = cfg.antennas() as f64;
    let tg = tau as f64 * gamma;
    let betas = cfg.betas();
    let beta_k = betas[k];
    let gb = intf.total();
    let gg = intf.sum_sq();
    let d = |b: f64| tg * b + gb + 1.0;
    let d_k = d(beta_k);

    let self_bracket =
        (1.0 + (2.0 * (tg * beta_k * gb + tg * beta_k + gb) + (m + 1.0) * gg) / (d_k * d_k)) / m;

    let lead = d_k / (m * tg * gamma * beta_k * beta_k);
    // No interferers: the bracket carries γ_b in a denominator.
    let beam = if gb == 0.0 {
        0.0
    } else {
        lead * gb * (1.0 + (m / gb) * gg / d_k)
    };
    let noise = lead;

    let mut multi_user = 0.0;
    let mut estimation_error = 0.0;
    for (q, &beta_q) in betas.iter().enumerate() {
        let d_q = d(beta_q);
        let ratio = d_k / d_q;
        if q != k {
            multi_user += ratio * beta_q * beta_q / (m * beta_k * beta_k)
                * (1.0 + m * gg / (d_k * d_q));
        }
        estimation_error += ratio * beta_q * (gb + 1.0) / (m * tg * beta_k * beta_k);
    }

    FiveTermGroups {
        self_bracket,
        beam,
        noise,
        multi_user,
        estimation_error,
    }
}

fn check_icsi_args(cfg: &SystemConfig, tau: usize, k: usize, gamma: f64) -> Result<()> {
    cfg.check_tau(tau)?;
    cfg.check_user(k)?;
    check_gamma(gamma)
}

/// Imperfect-CSI SINR of user `k` with `tau` training symbols.
pub fn sinr_icsi(
    cfg: &SystemConfig,
    tau: usize,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
    form: SinrForm,
) -> Result<f64> {
    check_icsi_args(cfg, tau, k, gamma)?;
    Ok(sinr_icsi_unchecked(cfg, tau, k, gamma, intf, form))
}

fn sinr_icsi_unchecked(
    cfg: &SystemConfig,
    tau: usize,
    k: usize,
    gamma: f64,
    intf: &InterferenceProfile,
    form: SinrForm,
) -> f64 {
    match form {
        SinrForm::Exact => icsi_terms_unchecked(cfg, tau, k, gamma, intf).sinr(),
        SinrForm::FiveTerm => icsi_five_term_unchecked(cfg, tau, k, gamma, intf).sinr(),
    }
}

fn pilot_prefactor(cfg: &SystemConfig, tau: usize) -> f64 {
    1.0 - tau as f64 / cfg.uplink_len() as f64
}

/// Imperfect-CSI sum-rate in bpcu, including the `(1 - τ/N_u)` training
/// overhead.
pub fn sumrate_icsi(
    cfg: &SystemConfig,
    tau: usize,
    gamma: f64,
    intf: &InterferenceProfile,
    form: SinrForm,
) -> Result<f64> {
    cfg.check_tau(tau)?;
    check_gamma(gamma)?;
    Ok(sumrate_icsi_unchecked(cfg, tau, gamma, intf, form))
}

fn sumrate_icsi_unchecked(
    cfg: &SystemConfig,
    tau: usize,
    gamma: f64,
    intf: &InterferenceProfile,
    form: SinrForm,
) -> f64 {
    let sum: f64 = (0..cfg.users())
        .map(|k| log2_1p(sinr_icsi_unchecked(cfg, tau, k, gamma, intf, form)))
        .sum();
    pilot_prefactor(cfg, tau) * sum
}

/// Imperfect-CSI sum-rate maximized over the training length by exhaustive
/// search. Returns the rate and the smallest maximizing `τ`.
pub fn sumrate_icsi_opt(
    cfg: &SystemConfig,
    gamma: f64,
    intf: &InterferenceProfile,
    form: SinrForm,
) -> Result<(f64, usize)> {
    check_gamma(gamma)?;
    let mut best = (f64::NEG_INFINITY, cfg.users());
    for tau in cfg.tau_range() {
        let rate = sumrate_icsi_unchecked(cfg, tau, gamma, intf, form);
        if rate > best.0 {
            best = (rate, tau);
        }
    }
    Ok(best)
}

/// Interference-free sum-rate in the limit of infinite transmit SNR.
///
/// Both imperfect-CSI forms share the limit of the perfect-CSI rate: every
/// term carrying `1/γ` vanishes and `D_k/D_q → β_k/β_q`. For imperfect CSI
/// the result carries the training overhead of `tau`, or of `τ = K` (the
/// maximizer) when `tau` is `None`.
pub fn sumrate_sup(cfg: &SystemConfig, scenario: Scenario, tau: Option<usize>) -> Result<f64> {
    let m = cfg.antennas() as f64;
    let betas = cfg.betas();
    let total = cfg.beta_sum();
    let unlimited: f64 = betas
        .iter()
        .map(|&b| log2_1p(m / (1.0 + (total - b) / b)))
        .sum();
    match (scenario, tau) {
        (Scenario::PerfectCsi, None) => Ok(unlimited),
        (Scenario::PerfectCsi, Some(_)) => Err(Error::ScenarioMismatch(
            "perfect CSI has no training phase".into(),
        )),
        (Scenario::ImperfectCsi, Some(tau)) => {
            cfg.check_tau(tau)?;
            Ok(pilot_prefactor(cfg, tau) * unlimited)
        }
        (Scenario::ImperfectCsi, None) => Ok(pilot_prefactor(cfg, cfg.users()) * unlimited),
    }
}

/// Large-array limit of the imperfect-CSI SINR when `√M γ → c` and
/// `√M γ_b → c_b`, with the interference split evenly over `interferers`:
/// `τ c² β_k² / (1 + c_b²/I)`.
pub fn sinr_icsi_limit(
    k: usize,
    c: f64,
    c_b: f64,
    interferers: usize,
    tau: usize,
    betas: &[f64],
) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidTarget(format!(
            "limit constant must be positive, got {c}"
        )));
    }
    if interferers == 0 {
        return Err(Error::InvalidProfile(
            "limit needs at least one interferer".into(),
        ));
    }
    if !(c_b.is_finite() && c_b >= 0.0) {
        return Err(Error::InvalidProfile(format!(
            "interference constant must be non-negative, got {c_b}"
        )));
    }
    let beta_k = *betas.get(k).ok_or(Error::InvalidUser {
        index: k,
        users: betas.len(),
    })?;
    Ok(tau as f64 * c * c * beta_k * beta_k / (1.0 + c_b * c_b / interferers as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(m: usize, betas: &[f64]) -> SystemConfig {
        SystemConfig::new(m, 100, 200, betas.to_vec()).unwrap()
    }

    fn prof(g: &[f64]) -> InterferenceProfile {
        InterferenceProfile::new(g.to_vec()).unwrap()
    }

    #[test]
    fn pcsi_hand_values() {
        let s = sinr_pcsi(&cfg(100, &[1.0]), 0, 1.0, &InterferenceProfile::empty()).unwrap();
        assert_eq!(s, 50.0);
        let s = sinr_pcsi(&cfg(64, &[1.0, 1.0]), 0, 0.1, &prof(&[1.0])).unwrap();
        assert_relative_eq!(s, 64.0 / 22.0, max_relative = 1e-14);
    }

    #[test]
    fn pcsi_terms_sum_to_sinr() {
        let c = cfg(32, &[1.0, 0.5, 0.25, 0.125]);
        let p = prof(&[0.5, 0.5]);
        for k in 0..4 {
            let t = pcsi_terms(&c, k, 0.2, &p).unwrap();
            assert_relative_eq!(
                t.sinr(),
                sinr_pcsi(&c, k, 0.2, &p).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn pcsi_rate_hand_values() {
        let c = cfg(100, &[1.0]);
        let r = sumrate_pcsi(&c, 1.0 / 99.0, &InterferenceProfile::empty()).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-13);
        let r = sumrate_pcsi(&c, 1e-300, &InterferenceProfile::empty()).unwrap();
        assert!((0.0..1e-290).contains(&r));
    }

    #[test]
    fn argument_errors() {
        let c = cfg(8, &[1.0, 1.0]);
        let e = InterferenceProfile::empty();
        assert!(matches!(
            sinr_pcsi(&c, 2, 1.0, &e),
            Err(Error::InvalidUser { .. })
        ));
        assert!(matches!(
            sinr_pcsi(&c, 0, 0.0, &e),
            Err(Error::NonPositiveGamma(_))
        ));
        assert!(matches!(
            sinr_icsi(&c, 1, 0, 1.0, &e, SinrForm::Exact),
            Err(Error::TauOutOfRange { .. })
        ));
        assert!(matches!(
            sinr_icsi(&c, 100, 0, 1.0, &e, SinrForm::Exact),
            Err(Error::TauOutOfRange { .. })
        ));
        assert!(sinr_icsi(&c, 99, 0, 1.0, &e, SinrForm::FiveTerm).is_ok());
        assert!(sumrate_sup(&c, Scenario::PerfectCsi, Some(4)).is_err());
        assert!(sinr_icsi_limit(0, 0.0, 1.0, 1, 10, &[1.0]).is_err());
        assert!(sinr_icsi_limit(0, 1.0, 1.0, 0, 10, &[1.0]).is_err());
    }

    #[test]
    fn icsi_symmetric_users() {
        let c = cfg(24, &[0.7; 5]);
        for form in [SinrForm::Exact, SinrForm::FiveTerm] {
            for p in [InterferenceProfile::empty(), prof(&[0.3, 0.3, 0.3])] {
                let s0 = sinr_icsi(&c, 7, 0, 0.4, &p, form).unwrap();
                for k in 1..5 {
                    assert_eq!(sinr_icsi(&c, 7, k, 0.4, &p, form).unwrap(), s0);
                }
            }
        }
    }

    #[test]
    fn equal_split_beats_skewed() {
        let c = SystemConfig::new(16, 100, 200, vec![1.0, 0.5]).unwrap();
        for form in [SinrForm::Exact, SinrForm::FiveTerm] {
            for k in 0..2 {
                let skew = sinr_icsi(&c, 4, k, 1.0, &prof(&[0.4]), form).unwrap();
                let even = sinr_icsi(&c, 4, k, 1.0, &prof(&[0.2, 0.2]), form).unwrap();
                assert!(even > skew, "{form:?} k={k}: {even} <= {skew}");
            }
        }
    }

    #[test]
    fn no_interferer_branch_is_finite() {
        let c = cfg(16, &[1.0, 2.0]);
        let g = icsi_five_term(&c, 3, 0, 0.5, &InterferenceProfile::empty()).unwrap();
        assert_eq!(g.beam, 0.0);
        assert!(g.total().is_finite());
        // A profile of explicit zeros takes the same path.
        let z = icsi_five_term(&c, 3, 0, 0.5, &prof(&[0.0, 0.0])).unwrap();
        assert_eq!(g, z);
        let t = icsi_terms(&c, 3, 0, 0.5, &prof(&[0.0])).unwrap();
        assert_eq!(t.interference, 0.0);
    }

    #[test]
    fn five_term_reduces_at_zero_interference() {
        // With Γ = 0 the bracket and the cross-user factors simplify by hand.
        let c = cfg(20, &[1.0, 0.5]);
        let (tau, gamma) = (5usize, 0.3);
        let tg = tau as f64 * gamma;
        let d = |b: f64| tg * b + 1.0;
        let m = 20.0;
        let k = 0;
        let bk = 1.0;
        let bq = 0.5;
        let expect = (1.0 + 2.0 * tg * bk / (d(bk) * d(bk))) / m
            + d(bk) / (m * tg * gamma * bk * bk)
            + (d(bk) / d(bq)) * bq * bq / (m * bk * bk)
            + (1.0 / (m * tg * bk))
            + (d(bk) / d(bq)) * bq / (m * tg * bk * bk);
        let got = icsi_five_term(&c, tau, k, gamma, &InterferenceProfile::empty()).unwrap();
        assert_relative_eq!(got.total(), expect, max_relative = 1e-14);
    }

    #[test]
    fn sumrate_prefactor() {
        // Minimum frame: N_u = K + 1 leaves a single admissible τ = K.
        let c = SystemConfig::new(50, 4, 4, vec![1.0, 1.0, 1.0]).unwrap();
        let p = prof(&[0.1]);
        let r = sumrate_icsi(&c, 3, 0.7, &p, SinrForm::Exact).unwrap();
        let raw: f64 = (0..3)
            .map(|k| log2_1p(sinr_icsi(&c, 3, k, 0.7, &p, SinrForm::Exact).unwrap()))
            .sum();
        assert_relative_eq!(r, raw / 4.0, max_relative = 1e-15);
        let (best, tau) = sumrate_icsi_opt(&c, 0.7, &p, SinrForm::Exact).unwrap();
        assert_eq!(tau, 3);
        assert_eq!(best, r);
    }

    #[test]
    fn tau_scan_is_a_maximum() {
        let c = cfg(320, &[1.0; 10]);
        let e = InterferenceProfile::empty();
        for form in [SinrForm::Exact, SinrForm::FiveTerm] {
            let (best, tau_star) = sumrate_icsi_opt(&c, 0.02, &e, form).unwrap();
            for tau in c.tau_range() {
                assert!(sumrate_icsi(&c, tau, 0.02, &e, form).unwrap() <= best);
            }
            assert_eq!(sumrate_icsi(&c, tau_star, 0.02, &e, form).unwrap(), best);
        }
    }

    #[test]
    fn zero_signal_rate_vanishes() {
        let c = cfg(64, &[1.0; 10]);
        let r = sumrate_icsi(&c, 10, 1e-12, &InterferenceProfile::empty(), SinrForm::Exact)
            .unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn supremum_values() {
        let s = sumrate_sup(&cfg(100, &[1.0]), Scenario::PerfectCsi, None).unwrap();
        assert_relative_eq!(s, 101f64.log2(), max_relative = 1e-15);
        let s = sumrate_sup(&cfg(100, &[1.0, 1.0]), Scenario::PerfectCsi, None).unwrap();
        assert_relative_eq!(s, 2.0 * 51f64.log2(), max_relative = 1e-15);

        let c = cfg(100, &[1.0, 1.0]);
        let sup = sumrate_sup(&c, Scenario::ImperfectCsi, Some(4)).unwrap();
        for form in [SinrForm::Exact, SinrForm::FiveTerm] {
            let proxy = sumrate_icsi(&c, 4, 1e9, &InterferenceProfile::empty(), form).unwrap();
            assert_relative_eq!(proxy, sup, max_relative = 1e-4);
        }
        let best = sumrate_sup(&c, Scenario::ImperfectCsi, None).unwrap();
        assert_eq!(best, sumrate_sup(&c, Scenario::ImperfectCsi, Some(2)).unwrap());
    }

    #[test]
    fn limit_hand_values() {
        assert_eq!(sinr_icsi_limit(0, 2.0, 0.0, 3, 10, &[0.5]).unwrap(), 10.0);
        assert_relative_eq!(
            sinr_icsi_limit(0, 1.0, 1.0, 2, 10, &[1.0]).unwrap(),
            10.0 / 1.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn extreme_inputs_stay_finite() {
        let c = SystemConfig::new(1 << 20, 100, 200, vec![1.0, 1e-3, 5.0]).unwrap();
        let p = prof(&[1e3, 1e-9]);
        for gamma in [1e-12, 1e-6, 1.0, 1e6] {
            for k in 0..3 {
                let a = sinr_pcsi(&c, k, gamma, &p).unwrap();
                assert!(a.is_finite() && a > 0.0);
                for form in [SinrForm::Exact, SinrForm::FiveTerm] {
                    let s = sinr_icsi(&c, 50, k, gamma, &p, form).unwrap();
                    assert!(s.is_finite() && s > 0.0, "{form:?} γ={gamma} k={k}: {s}");
                }
            }
            let r = sumrate_icsi(&c, 50, gamma, &p, SinrForm::Exact).unwrap();
            assert!(r.is_finite() && r > 0.0);
        }
    }
}
