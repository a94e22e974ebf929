use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::system::{InterferenceProfile, OperatingPoint, SystemConfig};

pub type CMatrix = DMatrix<Complex64>;

/// Orthonormal pilot sequences, one column per user.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PilotBook {
    /// First `K` columns of the unitary `τ × τ` DFT matrix.
    #[default]
    Dft,
    /// Caller-supplied `τ × K` book; must satisfy `ΦᵀΦ* = I`.
    Custom(CMatrix),
}

impl PilotBook {
    pub fn matrix(&self, tau: usize, users: usize) -> Result<CMatrix> {
        match self {
            PilotBook::Dft => Ok(dft_book(tau, users)),
            PilotBook::Custom(phi) => {
                if phi.nrows() != tau || phi.ncols() != users {
                    return Err(Error::DimensionMismatch(format!(
                        "pilot book is {}x{}, need {tau}x{users}",
                        phi.nrows(),
                        phi.ncols()
                    )));
                }
                let gram = phi.transpose() * phi.conjugate();
                let err = (gram - CMatrix::identity(users, users)).camax();
                if err > 1e-12 {
                    return Err(Error::DimensionMismatch(format!(
                        "pilot book columns are not orthonormal (max error {err:e})"
                    )));
                }
                Ok(phi.clone())
            }
        }
    }
}

fn dft_book(tau: usize, users: usize) -> CMatrix {
    let scale = 1.0 / (tau as f64).sqrt();
    CMatrix::from_fn(tau, users, |t, k| {
        let angle = -2.0 * std::f64::consts::PI * ((t * k) % tau) as f64 / tau as f64;
        Complex64::from_polar(scale, angle)
    })
}

/// RNG for substream `stream` of `seed`. Substreams are independent
/// ChaCha8 streams, so trial `i` can be drawn without drawing trials
/// `0..i` first.
pub fn scene_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `rows × cols` matrix with independent `CN(0, var(col))` entries, drawn
/// column by column.
fn cn_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: impl Fn(usize) -> f64,
) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        let v = var(j);
        for i in 0..rows {
            out[(i, j)] = cn(rng, v);
        }
    }
    out
}

/// `rows × cols` matrix with row `i` drawn from `CN(0, var(i))`.
fn cn_matrix_by_row<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: impl Fn(usize) -> f64,
) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            out[(i, j)] = cn(rng, var(i));
        }
    }
    out
}

/// One coherence interval: channels, pilots, interferer symbols, noise and
/// data symbols, plus the parameters they were drawn with.
///
/// Interferer channels `g` are drawn once and shared by the pilot and data
/// phases. Without a training phase (perfect CSI) the pilot matrices are
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct McScene {
    /// `M × K`, column `k` is `CN(0, β_k)`.
    pub h: CMatrix,
    /// `M × I`, `CN(0, 1)`.
    pub g: CMatrix,
    /// `τ × K` pilot book.
    pub phi: CMatrix,
    /// `τ × I`, entry `(t, i)` is `u_i[t] ~ CN(0, γ_i)`.
    pub pilot_interference: CMatrix,
    /// `M × τ`, `CN(0, 1)`.
    pub pilot_noise: CMatrix,
    /// `K × T`, `CN(0, 1)`.
    pub data_symbols: CMatrix,
    /// `I × T`, row `i` is `CN(0, γ_i)`.
    pub data_interference: CMatrix,
    /// `M × T`, `CN(0, 1)`.
    pub data_noise: CMatrix,
    pub gamma: f64,
    pub tau: Option<usize>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl McScene {
    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn interferers(&self) -> usize {
        self.g.ncols()
    }

    pub fn data_len(&self) -> usize {
        self.data_symbols.ncols()
    }

    pub fn gamma_b(&self) -> f64 {
        self.gammas.iter().sum()
    }

    /// Draws a scene from substream `stream` of `seed`.
    pub fn sample(
        cfg: &SystemConfig,
        op: &OperatingPoint,
        intf: &InterferenceProfile,
        data_len: usize,
        seed: u64,
        stream: u64,
        book: &PilotBook,
    ) -> Result<Self> {
        if data_len == 0 {
            return Err(Error::DimensionMismatch("need at least one data symbol".into()));
        }
        crate::system::check_gamma(op.gamma)?;
        let (m, k, i) = (cfg.antennas(), cfg.users(), intf.count());
        let tau = match op.tau {
            Some(tau) => {
                cfg.check_tau(tau)?;
                tau
            }
            None => 0,
        };
        let phi = if tau > 0 {
            book.matrix(tau, k)?
        } else {
            CMatrix::zeros(0, k)
        };
        let betas = cfg.betas();
        let gammas = intf.gammas();
        let mut rng = scene_rng(seed, stream);

        let h = cn_matrix(&mut rng, m, k, |q| betas[q]);
        let g = cn_matrix(&mut rng, m, i, |_| 1.0);
        let pilot_interference = cn_matrix(&mut rng, tau, i, |j| gammas[j]);
        let pilot_noise = cn_matrix(&mut rng, m, tau, |_| 1.0);
        let data_symbols = cn_matrix(&mut rng, k, data_len, |_| 1.0);
        let data_interference = cn_matrix_by_row(&mut rng, i, data_len, |j| gammas[j]);
        let data_noise = cn_matrix(&mut rng, m, data_len, |_| 1.0);

        Ok(McScene {
            h,
            g,
            phi,
            pilot_interference,
            pilot_noise,
            data_symbols,
            data_interference,
            data_noise,
            gamma: op.gamma,
            tau: op.tau,
            betas: betas.to_vec(),
            gammas: gammas.to_vec(),
            seed,
            stream,
        })
    }

    /// Received pilot block `R_p = √(τγ) H Φᵀ + Σ_i g_i u_iᵀ + W` (`M × τ`).
    pub fn received_pilots(&self) -> Result<CMatrix> {
        let tau = self.tau.ok_or_else(|| {
            Error::ScenarioMismatch("scene has no training phase".into())
        })?;
        let amp = Complex64::from((tau as f64 * self.gamma).sqrt());
        let mut rp = &self.h * self.phi.transpose() * amp;
        if self.interferers() > 0 {
            rp += &self.g * self.pilot_interference.transpose();
        }
        rp += &self.pilot_noise;
        Ok(rp)
    }

    /// Received data block `r[t] = √γ H x[t] + G u[t] + w[t]` (`M × T`).
    pub fn received_data(&self) -> CMatrix {
        let amp = Complex64::from(self.gamma.sqrt());
        let mut r = &self.h * &self.data_symbols * amp;
        if self.interferers() > 0 {
            r += &self.g * &self.data_interference;
        }
        r += &self.data_noise;
        r
    }
}

/// Scene from substream 0 of `seed` with the DFT pilot book.
pub fn generate_scene(
    cfg: &SystemConfig,
    op: &OperatingPoint,
    intf: &InterferenceProfile,
    data_len: usize,
    seed: u64,
) -> Result<McScene> {
    McScene::sample(cfg, op, intf, data_len, seed, 0, &PilotBook::Dft)
}

/// LMMSE channel estimate `Ĥ = R_p Φ* D̃` with
/// `D̃ = (1/√(τγ)) (I + ((1 + γ_b)/(τγ)) D⁻¹)⁻¹` and `D = diag(β)`.
pub fn lmmse_estimate(scene: &McScene) -> Result<CMatrix> {
    let tau = scene.tau.ok_or_else(|| {
        Error::ScenarioMismatch("LMMSE estimation needs a training phase".into())
    })?;
    if scene.phi.nrows() != tau || scene.pilot_noise.ncols() != tau {
        return Err(Error::DimensionMismatch(format!(
            "pilot blocks do not have {tau} channel uses"
        )));
    }
    let tg = tau as f64 * scene.gamma;
    let gamma_b = scene.gamma_b();
    let scale: Vec<f64> = scene
        .betas
        .iter()
        .map(|&b| 1.0 / (tg.sqrt() * (1.0 + (1.0 + gamma_b) / (tg * b))))
        .collect();
    let mut est = scene.received_pilots()? * scene.phi.conjugate();
    for (k, s) in scale.iter().enumerate() {
        est.column_mut(k).scale_mut(*s);
    }
    Ok(est)
}
