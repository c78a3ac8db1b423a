//! Unit conversions between the config file's engineering units and SI.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts * 1e3)
}

/// Thermal noise power kTB at 290 K, in dBm (-174 dBm/Hz).
pub fn thermal_noise_dbm(bandwidth_hz: f64) -> f64 {
    -174.0 + linear_to_db(bandwidth_hz)
}

pub fn hours_to_seconds(h: f64) -> f64 {
    h * 3600.0
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}
