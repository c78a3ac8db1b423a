//! Scenario parameters: service area, human bodies, radio, and UAV fleet.
//!
//! A scenario is stored in a flat `section.key = value` text file. Every key
//! has a fixed unit (see [`KEYS`]); values are kept in those units here and
//! converted to SI exactly once, by the helpers in [`crate::units`], when the
//! physics modules build their own views (`LinkBudget`, cycle timing).
//!
//! Defaults for the area/body/fleet quantities that are not fixed by the
//! radio and UAV datasheet values (`lambda`, body dimensions, heights, `T`,
//! `ell`, `N`) are modelling choices, not measured ground truth.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaModel {
    /// Service-area radius, m.
    pub radius_m: f64,
    /// User (and blocker) density, users/m².
    pub user_density: f64,
    /// 2D distance from the area to the charging station, m.
    pub ell_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyModel {
    pub blocker_height_m: f64,
    pub ue_height_m: f64,
    pub body_radius_m: f64,
    /// Distance between the handset and the body holding it, m.
    pub ue_body_distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub ap_gain_db: f64,
    pub ue_gain_db: f64,
    /// Extra attenuation of a body-blocked LoS path, dB.
    pub blockage_loss_db: f64,
    pub path_loss_exponent: f64,
    /// Thermal noise power over the whole band, dBm.
    pub noise_dbm: f64,
    pub noise_figure_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetModel {
    /// Total number of drones N.
    pub drones: usize,
    pub airborne_height_m: f64,
    pub landed_height_m: f64,
    /// Flight time on a full battery, h.
    pub flight_time_h: f64,
    pub charge_time_h: f64,
    pub cruise_speed_kmh: f64,
    pub en_route_power_w: f64,
    pub hover_power_w: f64,
    /// Power drawn by the access-point payload, W.
    pub payload_power_w: f64,
    /// Largest fleet considered when searching for a minimum drone count.
    pub max_drones: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScenarioConfig {
    pub area: AreaModel,
    pub body: BodyModel,
    pub radio: RadioModel,
    pub fleet: FleetModel,
}

impl Default for AreaModel {
    fn default() -> Self {
        Self {
            radius_m: 50.0,
            user_density: 0.078,
            ell_m: 1000.0,
        }
    }
}

impl Default for BodyModel {
    fn default() -> Self {
        Self {
            blocker_height_m: 1.7,
            ue_height_m: 1.3,
            body_radius_m: 0.22,
            ue_body_distance_m: 0.3,
        }
    }
}

impl Default for RadioModel {
    fn default() -> Self {
        Self {
            carrier_ghz: 28.0,
            bandwidth_hz: 1e9,
            tx_power_dbm: 23.0,
            ap_gain_db: 15.0,
            ue_gain_db: 5.0,
            blockage_loss_db: 20.0,
            path_loss_exponent: 2.1,
            noise_dbm: -84.0,
            noise_figure_db: 5.0,
        }
    }
}

impl Default for FleetModel {
    fn default() -> Self {
        Self {
            drones: 4,
            airborne_height_m: 6.0,
            landed_height_m: 8.0,
            flight_time_h: 1.0,
            charge_time_h: 1.0,
            cruise_speed_kmh: 40.0,
            en_route_power_w: 871.0,
            hover_power_w: 1024.0,
            payload_power_w: 47.0,
            max_drones: 12,
        }
    }
}

impl RadioModel {
    /// Replaces the bandwidth and recomputes the thermal noise floor for it
    /// (-174 dBm/Hz).
    pub fn with_bandwidth_scaled_noise(mut self, bandwidth_hz: f64) -> Self {
        self.bandwidth_hz = bandwidth_hz;
        self.noise_dbm = crate::units::thermal_noise_dbm(bandwidth_hz);
        self
    }
}

impl FleetModel {
    /// Largest charging-station distance for which a cycle is feasible, m.
    pub fn max_feasible_ell_m(&self) -> f64 {
        self.flight_time_h * self.cruise_speed_kmh * 1000.0 / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Invariant,
    /// The cycle cannot complete: the battery runs out en route.
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: &'static str,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::Invariant => write!(f, "{}: {} violated", self.field, self.rule),
            ViolationKind::Feasibility => write!(f, "{}: {}", self.field, self.rule),
        }
    }
}

/// A documented configuration key: dotted name, unit, description.
pub struct KeySpec {
    pub key: &'static str,
    pub unit: &'static str,
    pub doc: &'static str,
}

pub const KEYS: &[KeySpec] = &[
    KeySpec { key: "area.radius_m", unit: "m", doc: "service-area radius R" },
    KeySpec { key: "area.lambda_per_m2", unit: "1/m²", doc: "user density λ (users double as blockers)" },
    KeySpec { key: "area.ell_m", unit: "m", doc: "distance to the charging station ℓ" },
    KeySpec { key: "body.h_b_m", unit: "m", doc: "blocker (body) height" },
    KeySpec { key: "body.h_u_m", unit: "m", doc: "UE height" },
    KeySpec { key: "body.r_b_m", unit: "m", doc: "body cylinder radius" },
    KeySpec { key: "body.r_u_m", unit: "m", doc: "UE-to-body distance" },
    KeySpec { key: "radio.f_c_ghz", unit: "GHz", doc: "carrier frequency" },
    KeySpec { key: "radio.bandwidth_hz", unit: "Hz", doc: "system bandwidth B" },
    KeySpec { key: "radio.p_a_dbm", unit: "dBm", doc: "AP transmit power" },
    KeySpec { key: "radio.g_a_db", unit: "dB", doc: "AP antenna gain" },
    KeySpec { key: "radio.g_u_db", unit: "dB", doc: "UE antenna gain" },
    KeySpec { key: "radio.blockage_loss_db", unit: "dB", doc: "extra loss of a body-blocked LoS path" },
    KeySpec { key: "radio.gamma", unit: "-", doc: "path-loss exponent" },
    KeySpec { key: "radio.n0_dbm", unit: "dBm", doc: "thermal noise over B" },
    KeySpec { key: "radio.nf_db", unit: "dB", doc: "UE noise figure" },
    KeySpec { key: "fleet.n", unit: "count", doc: "total drones N" },
    KeySpec { key: "fleet.h_a_m", unit: "m", doc: "airborne service height (used with --height config)" },
    KeySpec { key: "fleet.h_l_m", unit: "m", doc: "landed service height (used with --height config)" },
    KeySpec { key: "fleet.t_h", unit: "h", doc: "flight time on batteries T" },
    KeySpec { key: "fleet.t_c_h", unit: "h", doc: "full charge time" },
    KeySpec { key: "fleet.nu_kmh", unit: "km/h", doc: "cruise speed ν" },
    KeySpec { key: "fleet.p_e_w", unit: "W", doc: "engine power en route" },
    KeySpec { key: "fleet.p_h_w", unit: "W", doc: "engine power while hovering" },
    KeySpec { key: "fleet.p_t_w", unit: "W", doc: "AP payload power" },
    KeySpec { key: "fleet.n_cap", unit: "count", doc: "upper bound for minimum-fleet searches" },
];

impl ScenarioConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        let float = || {
            value
                .parse::<f64>()
                .map_err(|_| format!("`{key}`: expected a number, got `{value}`"))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| format!("`{key}`: expected a non-negative integer, got `{value}`"))
        };
        match key {
            "area.radius_m" => self.area.radius_m = float()?,
            "area.lambda_per_m2" => self.area.user_density = float()?,
            "area.ell_m" => self.area.ell_m = float()?,
            "body.h_b_m" => self.body.blocker_height_m = float()?,
            "body.h_u_m" => self.body.ue_height_m = float()?,
            "body.r_b_m" => self.body.body_radius_m = float()?,
            "body.r_u_m" => self.body.ue_body_distance_m = float()?,
            "radio.f_c_ghz" => self.radio.carrier_ghz = float()?,
            "radio.bandwidth_hz" => self.radio.bandwidth_hz = float()?,
            "radio.p_a_dbm" => self.radio.tx_power_dbm = float()?,
            "radio.g_a_db" => self.radio.ap_gain_db = float()?,
            "radio.g_u_db" => self.radio.ue_gain_db = float()?,
            "radio.blockage_loss_db" => self.radio.blockage_loss_db = float()?,
            "radio.gamma" => self.radio.path_loss_exponent = float()?,
            "radio.n0_dbm" => self.radio.noise_dbm = float()?,
            "radio.nf_db" => self.radio.noise_figure_db = float()?,
            "fleet.n" => self.fleet.drones = count()?,
            "fleet.h_a_m" => self.fleet.airborne_height_m = float()?,
            "fleet.h_l_m" => self.fleet.landed_height_m = float()?,
            "fleet.t_h" => self.fleet.flight_time_h = float()?,
            "fleet.t_c_h" => self.fleet.charge_time_h = float()?,
            "fleet.nu_kmh" => self.fleet.cruise_speed_kmh = float()?,
            "fleet.p_e_w" => self.fleet.en_route_power_w = float()?,
            "fleet.p_h_w" => self.fleet.hover_power_w = float()?,
            "fleet.p_t_w" => self.fleet.payload_power_w = float()?,
            "fleet.n_cap" => self.fleet.max_drones = count()?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn values(&self) -> [String; 26] {
        let (a, b, r, f) = (&self.area, &self.body, &self.radio, &self.fleet);
        [
            a.radius_m.to_string(),
            a.user_density.to_string(),
            a.ell_m.to_string(),
            b.blocker_height_m.to_string(),
            b.ue_height_m.to_string(),
            b.body_radius_m.to_string(),
            b.ue_body_distance_m.to_string(),
            r.carrier_ghz.to_string(),
            r.bandwidth_hz.to_string(),
            r.tx_power_dbm.to_string(),
            r.ap_gain_db.to_string(),
            r.ue_gain_db.to_string(),
            r.blockage_loss_db.to_string(),
            r.path_loss_exponent.to_string(),
            r.noise_dbm.to_string(),
            r.noise_figure_db.to_string(),
            f.drones.to_string(),
            f.airborne_height_m.to_string(),
            f.landed_height_m.to_string(),
            f.flight_time_h.to_string(),
            f.charge_time_h.to_string(),
            f.cruise_speed_kmh.to_string(),
            f.en_route_power_w.to_string(),
            f.hover_power_w.to_string(),
            f.payload_power_w.to_string(),
            f.max_drones.to_string(),
        ]
    }

    /// Writes every key, in [`KEYS`] order. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (spec, value) in KEYS.iter().zip(self.values()) {
            out.push_str(&format!("{} = {}\n", spec.key, value));
        }
        out
    }
}

/// Parses config text without validating it. Unspecified keys keep their
/// defaults; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `section.key = value`, got `{content}`"),
        })?;
        config
            .set(key.trim(), value)
            .map_err(|message| Error::Parse { line, message })?;
    }
    Ok(config)
}

/// Reads, parses, and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = parse_config(&text)?;
    let violations = validate(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::Invalid(violations))
    }
}

/// Checks every invariant and returns the ones that fail (empty when valid).
pub fn validate(config: &ScenarioConfig) -> Vec<Violation> {
    use ViolationKind::*;
    let (a, b, r, f) = (&config.area, &config.body, &config.radio, &config.fleet);
    let mut out = Vec::new();
    let mut check = |ok: bool, field, rule, kind| {
        if !ok {
            out.push(Violation { field, rule, kind });
        }
    };

    let floats = [
        a.radius_m,
        a.user_density,
        a.ell_m,
        b.blocker_height_m,
        b.ue_height_m,
        b.body_radius_m,
        b.ue_body_distance_m,
        r.carrier_ghz,
        r.bandwidth_hz,
        r.tx_power_dbm,
        r.ap_gain_db,
        r.ue_gain_db,
        r.blockage_loss_db,
        r.path_loss_exponent,
        r.noise_dbm,
        r.noise_figure_db,
        f.airborne_height_m,
        f.landed_height_m,
        f.flight_time_h,
        f.charge_time_h,
        f.cruise_speed_kmh,
        f.en_route_power_w,
        f.hover_power_w,
        f.payload_power_w,
    ];
    check(floats.iter().all(|v| v.is_finite()), "*", "all values finite", Invariant);

    check(a.radius_m > 0.0, "area.radius_m", "R > 0", Invariant);
    check(a.user_density >= 0.0, "area.lambda_per_m2", "lambda ≥ 0", Invariant);
    check(a.ell_m >= 0.0, "area.ell_m", "ell ≥ 0", Invariant);

    check(b.ue_height_m > 0.0, "body.h_u_m", "h_U > 0", Invariant);
    check(b.blocker_height_m > b.ue_height_m, "body.h_b_m", "h_B > h_U", Invariant);
    check(b.body_radius_m > 0.0, "body.r_b_m", "r_B > 0", Invariant);
    check(b.ue_body_distance_m > 0.0, "body.r_u_m", "r_U > 0", Invariant);

    check(r.carrier_ghz > 0.0, "radio.f_c_ghz", "f_C > 0", Invariant);
    check(r.bandwidth_hz > 0.0, "radio.bandwidth_hz", "B > 0", Invariant);
    check(r.blockage_loss_db >= 0.0, "radio.blockage_loss_db", "blockage loss ≥ 0 dB", Invariant);
    check(r.path_loss_exponent > 0.0, "radio.gamma", "gamma > 0", Invariant);

    check(f.drones >= 1, "fleet.n", "N ≥ 1", Invariant);
    check(f.max_drones >= 1, "fleet.n_cap", "N cap ≥ 1", Invariant);
    check(f.airborne_height_m > b.ue_height_m, "fleet.h_a_m", "h_A > h_U", Invariant);
    check(f.landed_height_m > b.ue_height_m, "fleet.h_l_m", "h_L > h_U", Invariant);
    check(f.flight_time_h > 0.0, "fleet.t_h", "T > 0", Invariant);
    check(f.charge_time_h >= 0.0, "fleet.t_c_h", "T_C ≥ 0", Invariant);
    check(f.cruise_speed_kmh > 0.0, "fleet.nu_kmh", "nu > 0", Invariant);
    check(f.en_route_power_w > 0.0, "fleet.p_e_w", "P_E > 0", Invariant);
    check(f.hover_power_w > 0.0, "fleet.p_h_w", "P_H > 0", Invariant);
    check(f.payload_power_w > 0.0, "fleet.p_t_w", "P_T > 0", Invariant);

    check(
        a.ell_m < f.max_feasible_ell_m(),
        "area.ell_m",
        "infeasible cycle: 2ℓ/ν ≥ T",
        Feasibility,
    );
    out
}
