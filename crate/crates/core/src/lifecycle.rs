//! Operation-cycle energy accounting.
//!
//! Each drone repeats: fly to the area (T_F = ℓ/ν), serve (T_S), fly back
//! (T_F), recharge (T_C). The battery holds E = T·P_E. In flight the drone
//! draws P_E; while serving it draws P_T when landed and P_T + P_H when
//! airborne. The long-run share of time a drone spends serving is
//! ρ = T_S / (T_S + 2T_F + T_C).

use crate::error::{Error, Result};
use crate::geometry::DeploymentOption;
use crate::scenario::FleetModel;
use crate::units::{hours_to_seconds, kmh_to_mps};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleResult {
    pub option: DeploymentOption,
    /// Serving-time fraction ρ ∈ [0, 1).
    pub rho: f64,
    /// One-way flight time T_F, h.
    pub flight_time_h: f64,
    /// Serving time per cycle T_S, h.
    pub serving_time_h: f64,
    /// Drones guaranteed to be serving at any instant, ⌊N·ρ⌋.
    pub serving: usize,
}

/// Power drawn while serving, W.
pub fn serving_power_w(option: DeploymentOption, fleet: &FleetModel) -> f64 {
    match option {
        DeploymentOption::Landed => fleet.payload_power_w,
        DeploymentOption::Airborne => fleet.payload_power_w + fleet.hover_power_w,
    }
}

/// Serving fraction and guaranteed serving count for a charging station at
/// distance `ell_m`.
pub fn serving_fraction(option: DeploymentOption, fleet: &FleetModel, ell_m: f64) -> Result<CycleResult> {
    if !(ell_m >= 0.0) {
        return Err(Error::Domain(format!("charging-station distance must be ≥ 0, got {ell_m}")));
    }
    let bound_m = fleet.max_feasible_ell_m();
    if ell_m >= bound_m {
        return Err(Error::Infeasible { ell_m, bound_m });
    }

    let t = hours_to_seconds(fleet.flight_time_h);
    let t_c = hours_to_seconds(fleet.charge_time_h);
    let nu = kmh_to_mps(fleet.cruise_speed_kmh);
    let p_e = fleet.en_route_power_w;
    let p_drain = serving_power_w(option, fleet);

    let numerator = t * p_e * nu - 2.0 * p_e * ell_m;
    let denominator = t * p_e * nu + 2.0 * ell_m * (p_drain - p_e) + t_c * nu * p_drain;
    let rho = numerator / denominator;

    let t_f = ell_m / nu;
    let t_s = (t * p_e - 2.0 * t_f * p_e) / p_drain;
    Ok(CycleResult {
        option,
        rho,
        flight_time_h: t_f / 3600.0,
        serving_time_h: t_s / 3600.0,
        serving: serving_count(fleet.drones, rho),
    })
}

/// ⌊N·ρ⌋.
pub fn serving_count(drones: usize, rho: f64) -> usize {
    (drones as f64 * rho).floor().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use DeploymentOption::*;

    #[test]
    fn rho_without_commute() {
        let f = FleetModel::default();
        let l = serving_fraction(Landed, &f, 0.0).unwrap();
        let a = serving_fraction(Airborne, &f, 0.0).unwrap();
        assert!((l.rho - 871.0 / 918.0).abs() < 1e-12);
        assert!((l.rho - 0.94880).abs() < 1e-5);
        assert!((a.rho - 871.0 / 1942.0).abs() < 1e-12);
        assert_eq!(l.serving, 3);
        assert_eq!(a.serving, 1);
    }

    #[test]
    fn counts() {
        assert_eq!(serving_count(4, 0.62), 2);
        assert_eq!(serving_count(4, 0.94880), 3);
        assert_eq!(serving_count(7, 0.0), 0);
        assert_eq!(serving_count(4, 0.75), 3);
    }

    #[test]
    fn infeasible_commute_is_an_error() {
        let f = FleetModel::default();
        match serving_fraction(Landed, &f, 25_000.0) {
            Err(Error::Infeasible { bound_m, .. }) => assert!((bound_m - 20_000.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let msg = serving_fraction(Airborne, &f, 20_000.0).unwrap_err().to_string();
        assert!(msg.contains("ℓ ≥ Tν/2"), "{msg}");
        assert!(serving_fraction(Landed, &f, -1.0).is_err());
    }

    #[test]
    fn rho_vanishes_at_the_bound() {
        let f = FleetModel::default();
        for option in DeploymentOption::ALL {
            let r = serving_fraction(option, &f, 20_000.0 - 1e-3).unwrap();
            assert!(r.rho > 0.0 && r.rho < 1e-6, "{}", r.rho);
        }
    }

    fn fleet() -> impl Strategy<Value = FleetModel> {
        (0.2..5.0f64, 0.0..3.0f64, 5.0..80.0f64, 100.0..2000.0f64, 100.0..2000.0f64, 1.0..300.0f64).prop_map(
            |(t, tc, nu, pe, ph, pt)| FleetModel {
                flight_time_h: t,
                charge_time_h: tc,
                cruise_speed_kmh: nu,
                en_route_power_w: pe,
                hover_power_w: ph,
                payload_power_w: pt,
                ..FleetModel::default()
            },
        )
    }

    proptest! {
        #[test]
        fn budget_closes_and_rho_is_time_share(f in fleet(), frac in 0.0..0.999f64) {
            let ell = frac * f.max_feasible_ell_m();
            for option in DeploymentOption::ALL {
                let r = serving_fraction(option, &f, ell).unwrap();
                let (t_s, t_f) = (r.serving_time_h, r.flight_time_h);
                let spent = t_s * serving_power_w(option, &f) + 2.0 * t_f * f.en_route_power_w;
                let budget = f.flight_time_h * f.en_route_power_w;
                prop_assert!((spent - budget).abs() <= 1e-9 * budget);
                let share = t_s / (t_s + 2.0 * t_f + f.charge_time_h);
                prop_assert!((r.rho - share).abs() <= 1e-12);
                prop_assert!(r.rho >= 0.0 && r.rho < 1.0);
                prop_assert!(r.serving <= f.drones);
            }
        }

        #[test]
        fn landed_always_serves_longer(f in fleet(), frac in 0.0..0.999f64) {
            let ell = frac * f.max_feasible_ell_m();
            let l = serving_fraction(Landed, &f, ell).unwrap().rho;
            let a = serving_fraction(Airborne, &f, ell).unwrap().rho;
            prop_assert!(l > a);
        }

        #[test]
        fn monotone_in_distance_charge_time_and_battery(f in fleet(), frac in 0.0..0.9f64, d in 0.01..0.09f64) {
            let bound = f.max_feasible_ell_m();
            for option in DeploymentOption::ALL {
                let r = |f: &FleetModel, ell: f64| serving_fraction(option, f, ell).unwrap().rho;
                let ell = frac * bound;
                prop_assert!(r(&f, ell + d * bound) < r(&f, ell));
                let slower_charge = FleetModel { charge_time_h: f.charge_time_h + 0.5, ..f };
                prop_assert!(r(&slower_charge, ell) < r(&f, ell));
                let bigger_battery = FleetModel { flight_time_h: f.flight_time_h * 1.2, ..f };
                prop_assert!(r(&bigger_battery, ell) > r(&f, ell));
            }
        }
    }
}
