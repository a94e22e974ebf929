//! Domain types shared by the closed forms, the solvers and the simulator.
//!
//! All powers are normalized to the receiver noise power, so every "power"
//! below is an SNR (linear, unitless).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel-state assumption at the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "perfect")]
    PerfectCsi,
    #[serde(rename = "imperfect")]
    ImperfectCsi,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::PerfectCsi => "perfect",
            Scenario::ImperfectCsi => "imperfect",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "perfect" | "pcsi" | "perfect_csi" | "perfectcsi" => Ok(Scenario::PerfectCsi),
            "imperfect" | "icsi" | "imperfect_csi" | "imperfectcsi" => Ok(Scenario::ImperfectCsi),
            other => Err(Error::InvalidConfig(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Antenna and user counts, frame structure and large-scale gains.
///
/// The number of users is the length of `betas`. Frame lengths are in
/// channel uses: `uplink_len` uplink channel uses out of a coherence interval
/// of `coherence_len`, with at least one data symbol left after training.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    antennas: usize,
    uplink_len: usize,
    coherence_len: usize,
    betas: Vec<f64>,
}

impl SystemConfig {
    pub fn new(
        antennas: usize,
        uplink_len: usize,
        coherence_len: usize,
        betas: Vec<f64>,
    ) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::InvalidConfig("at least one antenna required".into()));
        }
        if betas.is_empty() {
            return Err(Error::InvalidConfig("at least one user required".into()));
        }
        if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "large-scale gains must be positive and finite, got {b}"
            )));
        }
        if betas.len() + 1 > uplink_len {
            return Err(Error::InvalidConfig(format!(
                "{} users need an uplink slot of at least {} channel uses, got {uplink_len}",
                betas.len(),
                betas.len() + 1
            )));
        }
        if uplink_len > coherence_len {
            return Err(Error::InvalidConfig(format!(
                "uplink slot {uplink_len} longer than coherence interval {coherence_len}"
            )));
        }
        Ok(SystemConfig {
            antennas,
            uplink_len,
            coherence_len,
            betas,
        })
    }

    /// `users` terminals that all see the same large-scale gain `beta`.
    pub fn equal_gains(
        antennas: usize,
        users: usize,
        uplink_len: usize,
        coherence_len: usize,
        beta: f64,
    ) -> Result<Self> {
        Self::new(antennas, uplink_len, coherence_len, vec![beta; users])
    }

    /// Same configuration with a different antenna count.
    pub fn with_antennas(&self, antennas: usize) -> Result<Self> {
        Self::new(
            antennas,
            self.uplink_len,
            self.coherence_len,
            self.betas.clone(),
        )
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.betas.len()
    }

    pub fn uplink_len(&self) -> usize {
        self.uplink_len
    }

    pub fn coherence_len(&self) -> usize {
        self.coherence_len
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta_sum(&self) -> f64 {
        self.betas.iter().sum()
    }

    /// Admissible training lengths `K..=N_u - 1`.
    pub fn tau_range(&self) -> std::ops::RangeInclusive<usize> {
        self.users()..=self.uplink_len - 1
    }

    pub fn check_tau(&self, tau: usize) -> Result<()> {
        let range = self.tau_range();
        if range.contains(&tau) {
            Ok(())
        } else {
            Err(Error::TauOutOfRange {
                tau,
                min: *range.start(),
                max: *range.end(),
            })
        }
    }

    pub fn check_user(&self, k: usize) -> Result<()> {
        if k < self.users() {
            Ok(())
        } else {
            Err(Error::InvalidUser {
                index: k,
                users: self.users(),
            })
        }
    }
}

/// Aliased in-band SNRs of the out-of-band interferers.
///
/// An empty profile means no interferers. The sum and the sum of squares are
/// cached because the closed forms use nothing else.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceProfile {
    gammas: Vec<f64>,
    total: f64,
    sum_sq: f64,
}

impl InterferenceProfile {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidProfile(format!(
                "interferer SNRs must be non-negative and finite, got {g}"
            )));
        }
        let total = gammas.iter().sum();
        let sum_sq = gammas.iter().map(|g| g * g).sum();
        Ok(InterferenceProfile {
            gammas,
            total,
            sum_sq,
        })
    }

    pub fn empty() -> Self {
        InterferenceProfile {
            gammas: Vec::new(),
            total: 0.0,
            sum_sq: 0.0,
        }
    }

    /// `count` interferers sharing `total` equally.
    pub fn uniform(total: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return if total == 0.0 {
                Ok(Self::empty())
            } else {
                Err(Error::InvalidProfile(
                    "non-zero total power needs at least one interferer".into(),
                ))
            };
        }
        Self::new(vec![total / count as f64; count])
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn count(&self) -> usize {
        self.gammas.len()
    }

    /// Total aliased SNR, `1ᵀΓ`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `ΓᵀΓ`.
    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// Transmit SNR and, for imperfect CSI, the training length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub gamma: f64,
    pub tau: Option<usize>,
}

impl OperatingPoint {
    pub fn perfect(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(OperatingPoint { gamma, tau: None })
    }

    pub fn imperfect(cfg: &SystemConfig, gamma: f64, tau: usize) -> Result<Self> {
        check_gamma(gamma)?;
        cfg.check_tau(tau)?;
        Ok(OperatingPoint {
            gamma,
            tau: Some(tau),
        })
    }

    pub fn scenario(&self) -> Scenario {
        match self.tau {
            Some(_) => Scenario::ImperfectCsi,
            None => Scenario::PerfectCsi,
        }
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveGamma(gamma))
    }
}

/// Ideal bandpass filter: unit gain in band, power gain `gain` outside it.
///
/// `pre_filter` holds the received interferer powers before filtering,
/// relative to the noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct BpfModel {
    gain: f64,
    pre_filter: Vec<f64>,
}

impl BpfModel {
    pub fn new(gain: f64, pre_filter: Vec<f64>) -> Result<Self> {
        if !(gain > 0.0 && gain <= 1.0) {
            return Err(Error::InvalidProfile(format!(
                "out-of-band gain must lie in (0, 1], got {gain}"
            )));
        }
        if let Some(p) = pre_filter.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidProfile(format!(
                "pre-filter interferer powers must be positive, got {p}"
            )));
        }
        Ok(BpfModel { gain, pre_filter })
    }

    /// Largest out-of-band gain that keeps the total aliased power at
    /// `gamma_b`. Fails if that would need a gain above one.
    pub fn for_total_aliased(gamma_b: f64, pre_filter: Vec<f64>) -> Result<Self> {
        let total: f64 = pre_filter.iter().sum();
        Self::new(gamma_b / total, pre_filter)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn pre_filter(&self) -> &[f64] {
        &self.pre_filter
    }

    /// Out-of-band attenuation, `-10 log10 A`.
    pub fn attenuation_db(&self) -> f64 {
        -crate::units::to_db(self.gain)
    }

    /// Aliased SNRs `γ_i = A p_i'` seen after the filter.
    pub fn profile(&self) -> InterferenceProfile {
        InterferenceProfile::new(self.pre_filter.iter().map(|p| self.gain * p).collect())
            .expect("filtered powers stay non-negative")
    }
}

/// Sum-rate without interference (`rate`) and the rate tolerated with it
/// (`rate_prime`), both in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTarget {
    rate: f64,
    rate_prime: f64,
}

impl RateTarget {
    pub fn new(rate: f64, rate_prime: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidTarget(format!(
                "rate must be positive, got {rate}"
            )));
        }
        if !(rate_prime > 0.0 && rate_prime < rate) {
            return Err(Error::InvalidTarget(format!(
                "rate with interference must lie strictly between 0 and {rate}, got {rate_prime}"
            )));
        }
        Ok(RateTarget { rate, rate_prime })
    }

    /// Target from a fractional sum-rate loss in `(0, 1)`.
    pub fn from_fractional_loss(rate: f64, loss: f64) -> Result<Self> {
        if !(loss > 0.0 && loss < 1.0) {
            return Err(Error::InvalidTarget(format!(
                "fractional loss must lie in (0, 1), got {loss}"
            )));
        }
        Self::new(rate, (1.0 - loss) * rate)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn rate_prime(&self) -> f64 {
        self.rate_prime
    }

    pub fn fractional_loss(&self) -> f64 {
        1.0 - self.rate_prime / self.rate
    }
}
