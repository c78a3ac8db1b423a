//! Access-point placement and the distribution of the UE-to-AP ground
//! distance.
//!
//! Both deployment options place `M` serving APs on a ring: airborne APs sit
//! at the centres of an optimal circle-in-circle packing, landed APs sit on
//! the service-area perimeter. AP `k` is at angle `2πk/M` and serves the
//! sector of angle `2π/M` centred on it. Because the APs share one ring
//! radius and are equally spaced, that sector is exactly the AP's Voronoi
//! cell, so "nearest AP" and "sector AP" coincide.

mod arc;
mod pdf;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

pub use arc::arc_length_in_sector;
pub use pdf::{pdf_closed_form, pdf_numeric, sample_distance, LinkDistancePdf, DEFAULT_RESOLUTION};

/// Largest serving count with a tabulated packing.
pub const MAX_SERVING: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeploymentOption {
    /// Drones hover over the area while serving.
    Airborne,
    /// Drones perch on the area's perimeter with engines off.
    Landed,
}

impl DeploymentOption {
    pub const ALL: [DeploymentOption; 2] = [DeploymentOption::Airborne, DeploymentOption::Landed];

    pub fn as_str(self) -> &'static str {
        match self {
            DeploymentOption::Airborne => "airborne",
            DeploymentOption::Landed => "landed",
        }
    }
}

impl fmt::Display for DeploymentOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeploymentOption {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "airborne" => Ok(DeploymentOption::Airborne),
            "landed" => Ok(DeploymentOption::Landed),
            _ => Err(format!("unknown deployment option `{s}`")),
        }
    }
}

/// Radius of each of `count` equal circles in the densest packing inside a
/// circle of radius `radius`.
pub fn packing_radius(count: usize, radius: f64) -> Result<f64> {
    let sqrt5 = 5f64.sqrt();
    let ratio = match count {
        1 => 1.0,
        2 => 0.5,
        3 => 2.0 * 3f64.sqrt() - 3.0,
        4 => 2f64.sqrt() - 1.0,
        5 => 1.0 / (1.0 + (2.0 + 2.0 / sqrt5).sqrt()),
        // Same as seven circles with the central one removed.
        6 => 1.0 / 3.0,
        _ => return Err(Error::UnsupportedCount(count)),
    };
    Ok(ratio * radius)
}

/// Distance from the area centre to each AP's ground projection.
pub fn ring_radius(option: DeploymentOption, count: usize, radius: f64) -> Result<f64> {
    match option {
        DeploymentOption::Airborne if count == 1 => Ok(0.0),
        DeploymentOption::Airborne => Ok(radius - packing_radius(count, radius)?),
        DeploymentOption::Landed => {
            check_count(count)?;
            Ok(radius)
        }
    }
}

pub(crate) fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        Err(Error::Domain("degenerate sector: zero serving APs".into()))
    } else if count > MAX_SERVING {
        Err(Error::UnsupportedCount(count))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentLayout {
    pub option: DeploymentOption,
    pub serving: usize,
    /// AP ground positions, m, in the area's centred frame.
    pub positions: Vec<[f64; 2]>,
    /// Service height above ground, m.
    pub height_m: f64,
    /// Packed-circle radius r_A (airborne) or edge distance r_L = R sin(π/M)
    /// (landed).
    pub pack_radius_m: f64,
    pub sector_angle: f64,
}

impl DeploymentLayout {
    /// Index of and ground distance to the closest AP. Ties go to the lower
    /// index.
    pub fn nearest(&self, p: [f64; 2]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, a) in self.positions.iter().enumerate() {
            let d = (p[0] - a[0]).hypot(p[1] - a[1]);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

pub fn make_layout(
    option: DeploymentOption,
    count: usize,
    config: &ScenarioConfig,
    height_m: f64,
) -> Result<DeploymentLayout> {
    layout_for_radius(option, count, config.area.radius_m, height_m)
}

pub fn layout_for_radius(
    option: DeploymentOption,
    count: usize,
    radius: f64,
    height_m: f64,
) -> Result<DeploymentLayout> {
    check_count(count)?;
    let ring = ring_radius(option, count, radius)?;
    let sector_angle = 2.0 * std::f64::consts::PI / count as f64;
    let positions = (0..count)
        .map(|k| {
            let phi = sector_angle * k as f64;
            [ring * phi.cos(), ring * phi.sin()]
        })
        .collect();
    let pack_radius_m = match option {
        DeploymentOption::Airborne => packing_radius(count, radius)?,
        DeploymentOption::Landed => radius * (sector_angle / 2.0).sin(),
    };
    Ok(DeploymentLayout {
        option,
        serving: count,
        positions,
        height_m,
        pack_radius_m,
        sector_angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn packing_table_values() {
        assert!((packing_radius(5, 50.0).unwrap() - 18.5096).abs() < 1e-4);
        assert_eq!(packing_radius(1, 50.0).unwrap(), 50.0);
        assert!((packing_radius(4, 50.0).unwrap() - 20.7107).abs() < 1e-4);
        assert!(matches!(packing_radius(7, 50.0), Err(Error::UnsupportedCount(7))));
        assert!(packing_radius(0, 50.0).is_err());
    }

    /// For a ring of M ≥ 2 tangent circles that also touch the boundary,
    /// r = R sin(π/M) / (1 + sin(π/M)). The tabulated optima are all ring
    /// packings.
    #[test]
    fn packing_table_matches_ring_tangency() {
        for m in 2..=6 {
            let s = (std::f64::consts::PI / m as f64).sin();
            let expected = 50.0 * s / (1.0 + s);
            let got = packing_radius(m, 50.0).unwrap();
            assert!((got - expected).abs() < 1e-12, "M={m}: {got} vs {expected}");
        }
    }

    fn feasible_radius(centres: &[[f64; 2]], big: f64) -> f64 {
        let mut r = f64::INFINITY;
        for (i, a) in centres.iter().enumerate() {
            r = r.min(big - a[0].hypot(a[1]));
            for b in &centres[i + 1..] {
                r = r.min(0.5 * (a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        r
    }

    #[test]
    fn layouts_are_feasible_packings() {
        for m in 1..=6 {
            let layout = layout_for_radius(DeploymentOption::Airborne, m, 50.0, 10.0).unwrap();
            let r = feasible_radius(&layout.positions, 50.0);
            assert!((r - layout.pack_radius_m).abs() < 1e-9, "M={m}");
        }
    }

    /// Random local search never beats the table and gets close to it.
    #[test]
    fn local_search_does_not_beat_packing_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 2..=4 {
            let table = packing_radius(m, 1.0).unwrap();
            let mut best_overall: f64 = 0.0;
            for _ in 0..20 {
                let mut c: Vec<[f64; 2]> = (0..m)
                    .map(|_| [rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)])
                    .collect();
                let mut best = feasible_radius(&c, 1.0);
                let mut step = 0.2;
                for _ in 0..4000 {
                    let i = rng.random_range(0..m);
                    let old = c[i];
                    c[i][0] += rng.random_range(-step..step);
                    c[i][1] += rng.random_range(-step..step);
                    let r = feasible_radius(&c, 1.0);
                    if r > best {
                        best = r;
                    } else {
                        c[i] = old;
                        step = (step * 0.999).max(1e-4);
                    }
                }
                assert!(best <= table + 1e-9, "M={m}: {best} > {table}");
                best_overall = best_overall.max(best);
            }
            assert!(best_overall > 0.97 * table, "M={m}: search reached {best_overall}");
        }
    }

    #[test]
    fn landed_square() {
        let l = layout_for_radius(DeploymentOption::Landed, 4, 50.0, 8.0).unwrap();
        let expected = [[50.0, 0.0], [0.0, 50.0], [-50.0, 0.0], [0.0, -50.0]];
        for (p, e) in l.positions.iter().zip(expected) {
            assert!((p[0] - e[0]).abs() < 1e-12 && (p[1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn airborne_ring_and_centre() {
        let l = layout_for_radius(DeploymentOption::Airborne, 5, 50.0, 8.0).unwrap();
        assert_eq!(l.positions.len(), 5);
        for p in &l.positions {
            assert!((p[0].hypot(p[1]) - 31.4904).abs() < 1e-4);
        }
        let one = layout_for_radius(DeploymentOption::Airborne, 1, 50.0, 8.0).unwrap();
        assert_eq!(one.positions, vec![[0.0, 0.0]]);
    }

    #[test]
    fn positions_are_distinct() {
        for option in DeploymentOption::ALL {
            for m in 2..=6 {
                let l = layout_for_radius(option, m, 50.0, 8.0).unwrap();
                for i in 0..m {
                    for j in i + 1..m {
                        let (a, b) = (l.positions[i], l.positions[j]);
                        assert!((a[0] - b[0]).hypot(a[1] - b[1]) > 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn nearest_ap_is_sector_ap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for option in DeploymentOption::ALL {
            for m in 2..=6 {
                let l = layout_for_radius(option, m, 50.0, 8.0).unwrap();
                for _ in 0..2000 {
                    let r = 50.0 * rng.random::<f64>().sqrt();
                    let t = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    let (idx, _) = l.nearest([r * t.cos(), r * t.sin()]);
                    let sector = ((t / l.sector_angle).round() as i64).rem_euclid(m as i64) as usize;
                    assert_eq!(idx, sector);
                }
            }
        }
    }

    #[test]
    fn option_parsing() {
        assert_eq!("Landed".parse::<DeploymentOption>().unwrap(), DeploymentOption::Landed);
        assert!("hover".parse::<DeploymentOption>().is_err());
        assert_eq!(DeploymentOption::Airborne.to_string(), "airborne");
    }
}
