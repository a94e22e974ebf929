use std::f64::consts::LN_2;

/// Power ratio in dB.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `log2(1 + x)`, accurate for small `x`.
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}
