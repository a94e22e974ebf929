/// Out-of-band attenuation a bandpass filter must provide when the
/// interference arrives `excess_interference_db` above the wanted signal and
/// the system tolerates an aliased-to-in-band ratio of `mar_db`.
///
/// A positive `mar_db` means more interference than signal is tolerable,
/// which is unusual; it is logged and still handled by magnitude.
pub fn attenuation_budget(mar_db: f64, excess_interference_db: f64) -> f64 {
    if mar_db > 0.0 {
        log::warn!("MAR of {mar_db} dB is above 0 dB; using its magnitude");
    }
    excess_interference_db + mar_db.abs()
}
