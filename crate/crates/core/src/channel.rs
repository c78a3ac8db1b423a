//! Noise-limited mmWave link: received power in the blocked and non-blocked
//! LoS states, body-blockage probability, and distance-dependent spectral
//! efficiency.
//!
//! The attenuation coefficient follows the 3GPP UMi street-canyon LoS
//! convention with the carrier in GHz and distances in metres:
//! `A_N = 10^-3.24 · f_C^-2`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::scenario::{BodyModel, RadioModel};
use crate::units::{db_to_linear, dbm_to_watts};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// P_A·G_A·G_U, W.
    pub eirp_w: f64,
    pub a_nonblocked: f64,
    pub a_blocked: f64,
    pub gamma: f64,
    /// N0·N_F, W.
    pub noise_w: f64,
}

impl LinkBudget {
    pub fn from_radio(radio: &RadioModel) -> Self {
        let a_nonblocked = 10f64.powf(-3.24) * radio.carrier_ghz.powi(-2);
        Self {
            eirp_w: dbm_to_watts(radio.tx_power_dbm + radio.ap_gain_db + radio.ue_gain_db),
            a_nonblocked,
            a_blocked: a_nonblocked * db_to_linear(-radio.blockage_loss_db),
            gamma: radio.path_loss_exponent,
            noise_w: dbm_to_watts(radio.noise_dbm + radio.noise_figure_db),
        }
    }

    fn power(&self, d: f64, blocked: bool) -> f64 {
        let a = if blocked { self.a_blocked } else { self.a_nonblocked };
        self.eirp_w * a * d.powf(-self.gamma)
    }

    /// log₂(1 + SNR) in the (non-blocked, blocked) states at 3D distance `d`.
    pub fn se_pair(&self, d: f64) -> (f64, f64) {
        (
            (self.power(d, false) / self.noise_w).ln_1p() / std::f64::consts::LN_2,
            (self.power(d, true) / self.noise_w).ln_1p() / std::f64::consts::LN_2,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageGeometry {
    /// AP height above the UE plane, m.
    pub relative_height_m: f64,
    /// Length of the body shadow per metre of ground distance.
    pub shadow_slope: f64,
    /// Half-width of the self-blocked cone, rad.
    pub self_block_angle: f64,
    pub body_radius_m: f64,
}

impl BlockageGeometry {
    /// Geometry for an AP at `height_m` above ground.
    pub fn new(body: &BodyModel, height_m: f64) -> Result<Self> {
        let relative_height_m = height_m - body.ue_height_m;
        if !(relative_height_m > 0.0) || !relative_height_m.is_finite() {
            return Err(Error::Domain(format!(
                "AP height {height_m} m must exceed the UE height {} m",
                body.ue_height_m
            )));
        }
        let r_b = body.body_radius_m;
        Ok(Self {
            relative_height_m,
            shadow_slope: (body.blocker_height_m - body.ue_height_m) / relative_height_m,
            self_block_angle: (r_b / (r_b + body.ue_body_distance_m)).asin(),
            body_radius_m: r_b,
        })
    }

    pub fn self_blockage_probability(&self) -> f64 {
        self.self_block_angle / TAU
    }

    /// Ground length, starting at the UE, within which a body centre blocks
    /// the link.
    pub fn shadow_length(&self, x: f64) -> f64 {
        x * self.shadow_slope
    }

    /// Ground area in which a body centre blocks the link, m².
    pub fn zone_area(&self, x: f64) -> f64 {
        2.0 * self.body_radius_m * (self.shadow_length(x) + self.body_radius_m)
    }

    pub fn distance_3d(&self, x: f64) -> f64 {
        x.hypot(self.relative_height_m)
    }
}

/// Received power, W, at 3D distance `d`.
pub fn received_power(budget: &LinkBudget, d: f64, blocked: bool) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("3D link distance must be positive, got {d}")));
    }
    Ok(budget.power(d, blocked))
}

/// Probability that the LoS path of a UE at ground distance `x` from its AP
/// is blocked, by its own body or by another pedestrian.
pub fn blockage_probability(geom: &BlockageGeometry, x: f64, density: f64) -> f64 {
    let survive_self = 1.0 - geom.self_blockage_probability();
    1.0 - survive_self * (-density * geom.zone_area(x)).exp()
}

/// Mean of log₂(1 + SNR) over the blockage state at ground distance `x`.
pub fn spectral_efficiency(budget: &LinkBudget, geom: &BlockageGeometry, x: f64, density: f64) -> f64 {
    let p = blockage_probability(geom, x, density);
    let (clear, blocked) = budget.se_pair(geom.distance_3d(x));
    p * blocked + (1.0 - p) * clear
}
