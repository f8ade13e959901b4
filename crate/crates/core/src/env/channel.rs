use super::config::{CellConfig, MAX_CQI};

/// Path loss in dB at distance `d` meters, with the distance floored at
/// `min_distance`.
pub fn path_loss_db(d: f64, min_distance: f64) -> f64 {
    128.1 + 37.6 * (d.max(min_distance) / 1000.0).log10()
}

/// SNR of a UE at `position` with the given fading term.
pub fn snr_db(position: [f64; 2], fading_db: f64, config: &CellConfig) -> f64 {
    let c = config.area_side / 2.0;
    let d = (position[0] - c).hypot(position[1] - c);
    let ch = &config.channel;
    ch.tx_power_dbm - path_loss_db(d, ch.min_distance) - ch.noise_dbm + fading_db
}

/// Quantizes the SNR onto the CQI ladder.
pub fn compute_cqi(position: [f64; 2], fading_db: f64, config: &CellConfig) -> u8 {
    let ch = &config.channel;
    let level = ((snr_db(position, fading_db, config) - ch.snr_min_db) / ch.snr_step_db).round();
    level.clamp(0.0, f64::from(MAX_CQI)) as u8
}
