use num_complex::Complex64;

use super::scene::{CMatrix, McScene};
use crate::error::{Error, Result};
use crate::system::Scenario;

/// MRC output for one user and one data symbol, split into its terms.
///
/// `mui_own` is the own-estimation-error part of the multi-user term
/// (`-√γ ĥ_kᴴ ε_k x_k`); `mui_other` collects the other users. Both are zero
/// or absent as the scenario dictates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermSample {
    pub es: Complex64,
    pub sif: Complex64,
    pub mui_own: Complex64,
    pub mui_other: Complex64,
    pub bl: Complex64,
    pub en: Complex64,
    /// Combiner output `Σ_m w*_mk r_m[t]` computed directly.
    pub output: Complex64,
}

impl TermSample {
    pub fn mui(&self) -> Complex64 {
        self.mui_own + self.mui_other
    }

    /// Everything except the desired-signal term.
    pub fn ew(&self) -> Complex64 {
        self.sif + self.mui() + self.bl + self.en
    }

    pub fn reconstructed(&self) -> Complex64 {
        self.es + self.ew()
    }
}

/// `E‖w_k‖²` for the combining vector the scenario prescribes: `M β_k` for
/// the true channel, `M τγβ_k²/(τγβ_k + 1 + γ_b)` for the LMMSE estimate.
pub fn expected_weight_energy(scene: &McScene, k: usize) -> f64 {
    let m = scene.antennas() as f64;
    let beta = scene.betas[k];
    match scene.tau {
        None => m * beta,
        Some(tau) => {
            let tg = tau as f64 * scene.gamma;
            m * tg * beta * beta / (tg * beta + 1.0 + scene.gamma_b())
        }
    }
}

/// Combines the data block with `weights` (`M × K`, column `k` combines user
/// `k`) and splits each output into ES, SIF, MUI, BL and EN. Returns
/// `terms[k][t]`.
pub fn mrc_detect(
    scene: &McScene,
    weights: &CMatrix,
    scenario: Scenario,
) -> Result<Vec<Vec<TermSample>>> {
    if weights.shape() != scene.h.shape() {
        return Err(Error::DimensionMismatch(format!(
            "weights are {}x{}, channel is {}x{}",
            weights.nrows(),
            weights.ncols(),
            scene.h.nrows(),
            scene.h.ncols()
        )));
    }
    match (scenario, scene.tau) {
        (Scenario::PerfectCsi, None) | (Scenario::ImperfectCsi, Some(_)) => {}
        (Scenario::PerfectCsi, Some(_)) => {
            return Err(Error::ScenarioMismatch(
                "perfect-CSI detection on a scene with a training phase".into(),
            ))
        }
        (Scenario::ImperfectCsi, None) => {
            return Err(Error::ScenarioMismatch(
                "imperfect-CSI detection on a scene without a training phase".into(),
            ))
        }
    }

    let users = scene.users();
    let amp = Complex64::from(scene.gamma.sqrt());
    // Inner products of the combining vectors with every received component.
    let with_h = weights.ad_mul(&scene.h);
    let with_g = weights.ad_mul(&scene.g);
    let with_noise = weights.ad_mul(&scene.data_noise);
    let output = weights.ad_mul(&scene.received_data());
    let bl_all = &with_g * &scene.data_interference;

    let mut terms = Vec::with_capacity(users);
    for k in 0..users {
        let col = weights.column(k);
        let energy = col.norm_squared();
        let expected = expected_weight_energy(scene, k);
        // ŵ_kᴴ ε_k = ‖w_k‖² - w_kᴴ h_k
        let own_error = Complex64::from(energy) - with_h[(k, k)];
        let per_symbol = (0..scene.data_len())
            .map(|t| {
                let x_k = scene.data_symbols[(k, t)];
                let mut other = Complex64::new(0.0, 0.0);
                for q in (0..users).filter(|&q| q != k) {
                    other += with_h[(k, q)] * scene.data_symbols[(q, t)];
                }
                TermSample {
                    es: amp * expected * x_k,
                    sif: amp * (energy - expected) * x_k,
                    mui_own: -amp * own_error * x_k,
                    mui_other: amp * other,
                    bl: bl_all[(k, t)],
                    en: with_noise[(k, t)],
                    output: output[(k, t)],
                }
            })
            .collect();
        terms.push(per_symbol);
    }
    Ok(terms)
}
