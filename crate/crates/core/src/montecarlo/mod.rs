//! Link-level simulation of the uplink: random channels, pilots, LMMSE
//! estimation, MRC combining and the exact term decomposition of the
//! combiner output.
//!
//! This is the independent check on [`crate::closed_form`]: it never uses a
//! closed-form SINR, only sample averages of the simulated terms.
//!
//! Every trial is its own coherence interval with one data symbol, drawn
//! from its own counter-based substream of the seed. Trials are summed in
//! fixed-size chunks and the chunk sums are combined in index order, so the
//! result does not depend on how many threads run the chunks.

mod detect;
mod scene;

pub use detect::{expected_weight_energy, mrc_detect, TermSample};
pub use scene::{generate_scene, lmmse_estimate, scene_rng, CMatrix, McScene, PilotBook};

use rayon::prelude::*;

use crate::closed_form::SinrTerms;
use crate::error::{Error, Result};
use crate::system::{InterferenceProfile, OperatingPoint, Scenario, SystemConfig};

pub const DEFAULT_TRIALS: usize = 100_000;

const CHUNK: usize = 512;
const N_TERMS: usize = 8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct McOptions {
    pub pilot_book: PilotBook,
}

/// Mean-square values of the combiner terms (or their standard errors).
///
/// `own_symbol` is `E|SIF + MUI_own|²`, the whole fluctuation on the user's
/// own symbol; `other_users` is `E|MUI_other|²`. `ew` is the power of the
/// sum `SIF + MUI + BL + EN`, which is not the sum of the individual powers
/// when SIF and the own-error part of MUI are correlated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TermPowers {
    pub es: f64,
    pub sif: f64,
    pub mui: f64,
    pub bl: f64,
    pub en: f64,
    pub ew: f64,
    pub own_symbol: f64,
    pub other_users: f64,
}

impl TermPowers {
    fn from_array(a: [f64; N_TERMS]) -> Self {
        TermPowers {
            es: a[0],
            sif: a[1],
            mui: a[2],
            bl: a[3],
            en: a[4],
            ew: a[5],
            own_symbol: a[6],
            other_users: a[7],
        }
    }
}

/// Empirical SINR of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrBreakdown {
    pub user: usize,
    pub trials: usize,
    pub powers: TermPowers,
    pub std_err: TermPowers,
    /// `E|ES|² / E|EW|²`.
    pub sinr: f64,
    pub sinr_std_err: f64,
}

impl SinrBreakdown {
    /// `es / (sif + mui + bl + en)`: equal to [`Self::sinr`] only when the
    /// terms are uncorrelated.
    pub fn sinr_from_term_sum(&self) -> f64 {
        let p = &self.powers;
        p.es / (p.sif + p.mui + p.bl + p.en)
    }

    /// Empirical counterpart of [`SinrTerms`]: each group over the ES power.
    pub fn normalized_terms(&self) -> SinrTerms {
        let p = &self.powers;
        SinrTerms {
            own_symbol: p.own_symbol / p.es,
            other_users: p.other_users / p.es,
            interference: p.bl / p.es,
            noise: p.en / p.es,
        }
    }

    /// Standard error of a normalized group, ignoring the (small) noise in
    /// the ES power.
    pub fn normalized_std_err(&self, power_std_err: f64) -> f64 {
        power_std_err / self.powers.es
    }
}

#[derive(Clone, Copy)]
struct Acc {
    sum: [f64; N_TERMS],
    sum_sq: [f64; N_TERMS],
    es_ew: f64,
    n: usize,
}

impl Acc {
    fn new() -> Self {
        Acc {
            sum: [0.0; N_TERMS],
            sum_sq: [0.0; N_TERMS],
            es_ew: 0.0,
            n: 0,
        }
    }

    fn push(&mut self, s: &TermSample) {
        let v = [
            s.es.norm_sqr(),
            s.sif.norm_sqr(),
            s.mui().norm_sqr(),
            s.bl.norm_sqr(),
            s.en.norm_sqr(),
            s.ew().norm_sqr(),
            (s.sif + s.mui_own).norm_sqr(),
            s.mui_other.norm_sqr(),
        ];
        for (j, x) in v.iter().enumerate() {
            self.sum[j] += x;
            self.sum_sq[j] += x * x;
        }
        self.es_ew += v[0] * v[5];
        self.n += 1;
    }

    fn merge(&mut self, other: &Acc) {
        for j in 0..N_TERMS {
            self.sum[j] += other.sum[j];
            self.sum_sq[j] += other.sum_sq[j];
        }
        self.es_ew += other.es_ew;
        self.n += other.n;
    }

    fn finish(&self, user: usize) -> SinrBreakdown {
        let n = self.n as f64;
        let mean = self.sum.map(|s| s / n);
        let mut var = [0.0; N_TERMS];
        for j in 0..N_TERMS {
            var[j] = (self.sum_sq[j] / n - mean[j] * mean[j]).max(0.0);
        }
        let se = var.map(|v| (v / n).sqrt());
        let (es, ew) = (mean[0], mean[5]);
        let cov = self.es_ew / n - es * ew;
        let sinr = es / ew;
        // Delta method for a ratio of correlated means.
        let rel_var = var[0] / (es * es) + var[5] / (ew * ew) - 2.0 * cov / (es * ew);
        SinrBreakdown {
            user,
            trials: self.n,
            powers: TermPowers::from_array(mean),
            std_err: TermPowers::from_array(se),
            sinr,
            sinr_std_err: sinr * (rel_var.max(0.0) / n).sqrt(),
        }
    }
}

/// Empirical per-user SINR over `trials` independent coherence intervals
/// with the DFT pilot book.
pub fn empirical_sinr(
    cfg: &SystemConfig,
    op: &OperatingPoint,
    intf: &InterferenceProfile,
    scenario: Scenario,
    trials: usize,
    seed: u64,
) -> Result<Vec<SinrBreakdown>> {
    empirical_sinr_with(cfg, op, intf, scenario, trials, seed, &McOptions::default())
}

pub fn empirical_sinr_with(
    cfg: &SystemConfig,
    op: &OperatingPoint,
    intf: &InterferenceProfile,
    scenario: Scenario,
    trials: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<Vec<SinrBreakdown>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    if op.scenario() != scenario {
        return Err(Error::ScenarioMismatch(format!(
            "operating point is {} CSI, requested {scenario} CSI",
            op.scenario()
        )));
    }
    let users = cfg.users();
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Result<Vec<Acc>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Acc::new(); users];
            for trial in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let scene =
                    McScene::sample(cfg, op, intf, 1, seed, trial as u64, &opts.pilot_book)?;
                let weights = match scenario {
                    Scenario::PerfectCsi => scene.h.clone(),
                    Scenario::ImperfectCsi => lmmse_estimate(&scene)?,
                };
                for (k, per_user) in mrc_detect(&scene, &weights, scenario)?.iter().enumerate() {
                    acc[k].push(&per_user[0]);
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![Acc::new(); users];
    for chunk in partial {
        for (t, a) in total.iter_mut().zip(chunk?.iter()) {
            t.merge(a);
        }
    }
    Ok(total.iter().enumerate().map(|(k, a)| a.finish(k)).collect())
}
