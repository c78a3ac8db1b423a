//! Analytic capacity metrics.
//!
//! Mean spectral efficiency integrates the per-distance SE against the
//! link-distance PDF. Network capacity is `M·B·S̄` for the `M` drones
//! guaranteed to be serving. User capacity shares each AP's band equally
//! among a Poisson number `K` of users, and recomputes blockage with the
//! realised density `K/(πR²)`.
//!
//! Mean SE and user capacity depend on the serving count and height but not
//! on the cycle parameters (`ℓ`, `T`, `N`), so [`Analyzer`] caches them per
//! `(option, M)` and sweeps over cycle parameters reuse them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::ln_gamma;

use crate::channel::{spectral_efficiency, BlockageGeometry, LinkBudget};
use crate::error::{Error, Result};
use crate::geometry::{pdf_closed_form, pdf_numeric, DeploymentOption, LinkDistancePdf, DEFAULT_RESOLUTION, MAX_SERVING};
use crate::lifecycle::serving_fraction;
use crate::quadrature::QuadOptions;
use crate::scenario::{FleetModel, ScenarioConfig};

/// Highest height considered by the automatic height search, m.
pub const MAX_SEARCH_HEIGHT_M: f64 = 100.0;

/// Serving count at which `HeightMode::OptimizedOnce` picks its height.
pub const REFERENCE_SERVING: usize = 5;

const HEIGHT_TOL_M: f64 = 0.05;

/// Default search interval: from 0.2 m above the UEs to 100 m.
pub fn height_search_range(config: &ScenarioConfig) -> (f64, f64) {
    (config.body.ue_height_m + 0.2, MAX_SEARCH_HEIGHT_M)
}

/// Closed-form PDF when one exists, arc-length PDF otherwise. Built once per
/// `(option, M, R)` and shared.
pub fn link_pdf(option: DeploymentOption, count: usize, radius: f64) -> Result<Arc<LinkDistancePdf>> {
    type Key = (DeploymentOption, usize, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<LinkDistancePdf>>>> = OnceLock::new();
    let key = (option, count, radius.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(pdf) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(Arc::clone(pdf));
    }
    let pdf = match pdf_closed_form(option, count, radius) {
        Err(Error::NoClosedForm { .. }) => pdf_numeric(option, count, radius, DEFAULT_RESOLUTION)?,
        other => other?,
    };
    let pdf = Arc::new(pdf);
    cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(key, Arc::clone(&pdf));
    Ok(pdf)
}

/// Mean SE of a uniformly placed UE served by the nearest of `count` APs at
/// `height_m`, bit/s/Hz.
pub fn mean_se(option: DeploymentOption, count: usize, config: &ScenarioConfig, height_m: f64) -> Result<f64> {
    mean_se_with(option, count, config, height_m, QuadOptions::default())
}

pub fn mean_se_with(
    option: DeploymentOption,
    count: usize,
    config: &ScenarioConfig,
    height_m: f64,
    opts: QuadOptions,
) -> Result<f64> {
    let pdf = link_pdf(option, count, config.area.radius_m)?;
    let budget = LinkBudget::from_radio(&config.radio);
    let geom = BlockageGeometry::new(&config.body, height_m)?;
    let density = config.area.user_density;
    pdf.expectation(|x| spectral_efficiency(&budget, &geom, x, density), opts)
}

/// Poisson probabilities for `K = first, first + 1, ...`, truncated so the
/// omitted tail above is negligible and `K = 0` is never included.
#[derive(Debug, Clone)]
pub struct PoissonWeights {
    pub first: usize,
    pub weights: Vec<f64>,
}

pub fn poisson_weights(mean: f64) -> PoissonWeights {
    let spread = 12.0 * mean.sqrt() + 20.0;
    let first = ((mean - spread).floor().max(1.0)) as usize;
    let last = (mean + spread).ceil() as usize;
    let ln_mean = mean.ln();
    let weights = (first..=last)
        .map(|k| (k as f64 * ln_mean - mean - ln_gamma(k as f64 + 1.0)).exp())
        .collect();
    PoissonWeights { first, weights }
}

/// Mean per-user rate, bit/s, with `count` serving APs at `height_m`.
pub fn user_capacity_for(
    option: DeploymentOption,
    count: usize,
    config: &ScenarioConfig,
    height_m: f64,
) -> Result<f64> {
    let lambda = config.area.user_density;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "user capacity needs a positive user density, got {lambda}"
        )));
    }
    let area = PI * config.area.radius_m.powi(2);
    let pw = poisson_weights(lambda * area);
    // Σ w_K / K, the part that does not depend on x.
    let inv_k: Vec<f64> = pw
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| w / (pw.first + i) as f64)
        .collect();
    let sum_inv_k: f64 = inv_k.iter().sum();

    let pdf = link_pdf(option, count, config.area.radius_m)?;
    let budget = LinkBudget::from_radio(&config.radio);
    let geom = BlockageGeometry::new(&config.body, height_m)?;
    let survive_self = 1.0 - geom.self_blockage_probability();

    let per_user = pdf.expectation(
        |x| {
            let (clear, blocked) = budget.se_pair(geom.distance_3d(x));
            let step = (-geom.zone_area(x) / area).exp();
            // Σ_K (w_K/K)·exp(−K·zone/area), with the exponential advanced
            // one K at a time.
            let mut e = step.powi(pw.first as i32);
            let mut unblocked = 0.0;
            for w in &inv_k {
                unblocked += w * e;
                e *= step;
            }
            clear * sum_inv_k - (clear - blocked) * (sum_inv_k - survive_self * unblocked)
        },
        QuadOptions::default(),
    )?;
    Ok(config.radio.bandwidth_hz * count as f64 * per_user)
}

/// Golden-section search for the height maximising mean SE over `range`.
/// Returns `(height, mean_se)`. The endpoints are also checked, so a
/// monotone curve yields the better endpoint.
pub fn optimize_height(
    option: DeploymentOption,
    count: usize,
    config: &ScenarioConfig,
    range: (f64, f64),
) -> Result<(f64, f64)> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo > config.body.ue_height_m) {
        return Err(Error::Domain(format!(
            "height range [{lo}, {hi}] must be finite, ordered and above the UE height"
        )));
    }
    let f = |h: f64| -> Result<f64> {
        let v = mean_se(option, count, config, h)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("non-finite mean SE at height {h} m")))
        }
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > HEIGHT_TOL_M {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid)?);
    for h in [lo, hi] {
        let v = f(h)?;
        if v > best.1 {
            best = (h, v);
        }
    }
    Ok(best)
}

/// How service heights are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum HeightMode {
    /// The same height for every option and serving count.
    Fixed(f64),
    /// `fleet.h_a_m` for airborne, `fleet.h_l_m` for landed.
    Config,
    /// Optimised separately for each option and serving count.
    #[default]
    Optimized,
    /// Optimised once per option at [`REFERENCE_SERVING`] APs.
    OptimizedOnce,
}

impl fmt::Display for HeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeightMode::Fixed(h) => write!(f, "{h}"),
            HeightMode::Config => f.write_str("config"),
            HeightMode::Optimized => f.write_str("auto"),
            HeightMode::OptimizedOnce => f.write_str("auto-once"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::MonteCarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    pub option: DeploymentOption,
    pub serving: usize,
    /// Serving fraction, when the report comes from a full cycle.
    pub rho: Option<f64>,
    /// `None` when no drone is guaranteed to be serving.
    pub height_m: Option<f64>,
    pub mean_se: f64,
    pub network_capacity_bps: f64,
    /// `None` when the user density is zero.
    pub user_capacity_bps: Option<f64>,
    pub provenance: Provenance,
}

impl CapacityReport {
    /// No drone is guaranteed to be present: all capacities are zero.
    pub fn no_coverage(&self) -> bool {
        self.serving == 0
    }
}

/// Per-`(option, M)` metrics shared by every cycle configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServingMetrics {
    pub height_m: f64,
    pub mean_se: f64,
    pub user_capacity_bps: Option<f64>,
}

/// Evaluates capacities for one scenario, caching the per-`(option, M)`
/// quantities. Safe to share between threads.
#[derive(Debug)]
pub struct Analyzer {
    config: ScenarioConfig,
    heights: HeightMode,
    metrics: Mutex<HashMap<(DeploymentOption, usize), ServingMetrics>>,
    reference_heights: Mutex<HashMap<DeploymentOption, f64>>,
}

impl Analyzer {
    pub fn new(config: ScenarioConfig, heights: HeightMode) -> Self {
        Self {
            config,
            heights,
            metrics: Mutex::default(),
            reference_heights: Mutex::default(),
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn height_mode(&self) -> HeightMode {
        self.heights
    }

    /// Service height for `count` APs of `option`, m.
    pub fn height(&self, option: DeploymentOption, count: usize) -> Result<f64> {
        let range = height_search_range(&self.config);
        match self.heights {
            HeightMode::Fixed(h) => Ok(h),
            HeightMode::Config => Ok(match option {
                DeploymentOption::Airborne => self.config.fleet.airborne_height_m,
                DeploymentOption::Landed => self.config.fleet.landed_height_m,
            }),
            HeightMode::Optimized => Ok(optimize_height(option, count, &self.config, range)?.0),
            HeightMode::OptimizedOnce => {
                if let Some(h) = self.reference_heights.lock().unwrap_or_else(|e| e.into_inner()).get(&option) {
                    return Ok(*h);
                }
                let h = optimize_height(option, REFERENCE_SERVING, &self.config, range)?.0;
                self.reference_heights
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .insert(option, h);
                Ok(h)
            }
        }
    }

    pub fn serving_metrics(&self, option: DeploymentOption, count: usize) -> Result<ServingMetrics> {
        if let Some(m) = self.metrics.lock().unwrap_or_else(|e| e.into_inner()).get(&(option, count)) {
            return Ok(*m);
        }
        let height_m = self.height(option, count)?;
        let metrics = ServingMetrics {
            height_m,
            mean_se: mean_se(option, count, &self.config, height_m)?,
            user_capacity_bps: if self.config.area.user_density > 0.0 {
                Some(user_capacity_for(option, count, &self.config, height_m)?)
            } else {
                None
            },
        };
        self.metrics
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert((option, count), metrics);
        Ok(metrics)
    }

    /// Report for exactly `count` serving APs, bypassing the cycle.
    pub fn report_for_count(&self, option: DeploymentOption, count: usize) -> Result<CapacityReport> {
        self.build_report(option, count, None)
    }

    /// Report for the drones guaranteed to serve under `fleet` with the
    /// charging station at `ell_m`.
    pub fn report(&self, option: DeploymentOption, fleet: &FleetModel, ell_m: f64) -> Result<CapacityReport> {
        let cycle = serving_fraction(option, fleet, ell_m)?;
        self.build_report(option, cycle.serving, Some(cycle.rho))
    }

    fn build_report(&self, option: DeploymentOption, count: usize, rho: Option<f64>) -> Result<CapacityReport> {
        if count == 0 {
            return Ok(CapacityReport {
                option,
                serving: 0,
                rho,
                height_m: None,
                mean_se: 0.0,
                network_capacity_bps: 0.0,
                user_capacity_bps: (self.config.area.user_density > 0.0).then_some(0.0),
                provenance: Provenance::Analytic,
            });
        }
        let m = self.serving_metrics(option, count)?;
        Ok(CapacityReport {
            option,
            serving: count,
            rho,
            height_m: Some(m.height_m),
            mean_se: m.mean_se,
            network_capacity_bps: count as f64 * self.config.radio.bandwidth_hz * m.mean_se,
            user_capacity_bps: m.user_capacity_bps,
            provenance: Provenance::Analytic,
        })
    }

    /// Smallest fleet (up to `fleet.n_cap`) whose guaranteed serving drones
    /// give at least `target_bps` per user, with flight time `flight_time_h`.
    pub fn min_drones_for_target(
        &self,
        option: DeploymentOption,
        target_bps: f64,
        flight_time_h: f64,
    ) -> Result<usize> {
        if !(target_bps > 0.0) {
            return Err(Error::Domain(format!("target rate must be positive, got {target_bps}")));
        }
        if !(self.config.area.user_density > 0.0) {
            return Err(Error::Domain("user capacity needs a positive user density".into()));
        }
        let max_drones = self.config.fleet.max_drones;
        let mut best_bps: f64 = 0.0;
        for drones in 1..=max_drones {
            let fleet = FleetModel {
                drones,
                flight_time_h,
                ..self.config.fleet
            };
            let cycle = serving_fraction(option, &fleet, self.config.area.ell_m)?;
            if cycle.serving > MAX_SERVING {
                break;
            }
            if cycle.serving == 0 {
                continue;
            }
            let rate = self
                .serving_metrics(option, cycle.serving)?
                .user_capacity_bps
                .unwrap_or(0.0);
            best_bps = best_bps.max(rate);
            if rate >= target_bps {
                return Ok(drones);
            }
        }
        Err(Error::UnreachableTarget {
            target_bps,
            best_bps,
            max_drones,
        })
    }

    /// Airborne network capacity strictly above landed.
    fn airborne_better(&self, fleet: &FleetModel, ell_m: f64) -> Result<bool> {
        let a = self.report(DeploymentOption::Airborne, fleet, ell_m)?;
        let l = self.report(DeploymentOption::Landed, fleet, ell_m)?;
        Ok(a.network_capacity_bps > l.network_capacity_bps)
    }

    /// For each flight time, the charging-station distance ℓ* at which
    /// airborne stops beating landed in network capacity.
    pub fn tradeoff_boundary(
        &self,
        flight_times_h: &[f64],
        ell_range_m: (f64, f64),
        drones: usize,
    ) -> Result<Vec<BoundaryPoint>> {
        const SCAN: usize = 256;
        let (ell_lo, ell_hi) = ell_range_m;
        if !(ell_lo >= 0.0 && ell_lo < ell_hi) {
            return Err(Error::Domain(format!("bad ℓ range [{ell_lo}, {ell_hi}]")));
        }
        let mut out = Vec::with_capacity(flight_times_h.len());
        for &t_h in flight_times_h {
            let fleet = FleetModel {
                drones,
                flight_time_h: t_h,
                ..self.config.fleet
            };
            let bound = fleet.max_feasible_ell_m();
            if ell_lo >= bound {
                out.push(BoundaryPoint {
                    t_h,
                    ell_star_m: None,
                    status: BoundaryStatus::Infeasible,
                });
                continue;
            }
            let hi = ell_hi.min(bound * (1.0 - 1e-9));
            let grid: Vec<f64> = (0..=SCAN)
                .map(|i| ell_lo + (hi - ell_lo) * i as f64 / SCAN as f64)
                .collect();
            let signs = grid
                .iter()
                .map(|&ell| self.airborne_better(&fleet, ell))
                .collect::<Result<Vec<_>>>()?;
            let changes: Vec<usize> = (1..signs.len()).filter(|&i| signs[i] != signs[i - 1]).collect();

            let point = match changes.as_slice() {
                [] if signs[0] => BoundaryPoint {
                    t_h,
                    ell_star_m: None,
                    status: BoundaryStatus::AirborneAlways,
                },
                [] => BoundaryPoint {
                    t_h,
                    ell_star_m: None,
                    status: BoundaryStatus::LandedAlways,
                },
                [i, rest @ ..] => {
                    let (mut a, mut b) = (grid[i - 1], grid[*i]);
                    let left = signs[i - 1];
                    while b - a > 1.0 {
                        let mid = 0.5 * (a + b);
                        if self.airborne_better(&fleet, mid)? == left {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    let status = if rest.is_empty() && left {
                        BoundaryStatus::Crossing
                    } else {
                        BoundaryStatus::MultipleCrossings
                    };
                    BoundaryPoint {
                        t_h,
                        ell_star_m: Some(0.5 * (a + b)),
                        status,
                    }
                }
            };
            out.push(point);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryStatus {
    /// Airborne wins below ℓ*, landed above.
    Crossing,
    LandedAlways,
    AirborneAlways,
    /// No feasible ℓ in the requested range.
    Infeasible,
    /// More than one sign change, or landed winning below ℓ*; ℓ* is the
    /// first change.
    MultipleCrossings,
}

impl BoundaryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryStatus::Crossing => "crossing",
            BoundaryStatus::LandedAlways => "landed_always",
            BoundaryStatus::AirborneAlways => "airborne_always",
            BoundaryStatus::Infeasible => "infeasible",
            BoundaryStatus::MultipleCrossings => "multiple_crossings",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub t_h: f64,
    pub ell_star_m: Option<f64>,
    pub status: BoundaryStatus,
}

/// Network-capacity report for the scenario's own fleet and ℓ.
pub fn network_capacity(option: DeploymentOption, config: &ScenarioConfig, heights: HeightMode) -> Result<CapacityReport> {
    Analyzer::new(*config, heights).report(option, &config.fleet, config.area.ell_m)
}

/// Mean user rate, bit/s, for the scenario's own fleet and ℓ.
pub fn user_capacity(option: DeploymentOption, config: &ScenarioConfig, heights: HeightMode) -> Result<f64> {
    if !(config.area.user_density > 0.0) {
        return Err(Error::Domain("user capacity needs a positive user density".into()));
    }
    Ok(network_capacity(option, config, heights)?
        .user_capacity_bps
        .unwrap_or(0.0))
}

pub fn min_drones_for_target(
    config: &ScenarioConfig,
    heights: HeightMode,
    target_bps: f64,
    flight_time_h: f64,
    option: DeploymentOption,
) -> Result<usize> {
    Analyzer::new(*config, heights).min_drones_for_target(option, target_bps, flight_time_h)
}

pub fn tradeoff_boundary(
    config: &ScenarioConfig,
    heights: HeightMode,
    flight_times_h: &[f64],
    ell_range_m: (f64, f64),
    drones: usize,
) -> Result<Vec<BoundaryPoint>> {
    Analyzer::new(*config, heights).tradeoff_boundary(flight_times_h, ell_range_m, drones)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::blockage_probability;
    use crate::units::dbm_to_watts;
    use DeploymentOption::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    #[test]
    fn constant_integrand_gives_point_se() {
        let mut c = cfg();
        c.radio.blockage_loss_db = 0.0;
        c.radio.path_loss_exponent = 0.0;
        let b = LinkBudget::from_radio(&c.radio);
        let expected = (1.0 + b.eirp_w * b.a_nonblocked / b.noise_w).log2();
        for option in DeploymentOption::ALL {
            for m in 1..=6 {
                let s = mean_se(option, m, &c, 7.0).unwrap();
                assert!((s - expected).abs() < 1e-8 * expected, "{option} {m}: {s} vs {expected}");
            }
        }
        assert!(b.noise_w == dbm_to_watts(-79.0));
    }

    #[test]
    fn halving_tolerance_is_stable() {
        let c = cfg();
        for (option, m) in [(Airborne, 5), (Landed, 2), (Airborne, 1)] {
            let coarse = mean_se_with(option, m, &c, 6.0, QuadOptions::rel(1e-8)).unwrap();
            let fine = mean_se_with(option, m, &c, 6.0, QuadOptions::rel(5e-9)).unwrap();
            assert!(((coarse - fine) / fine).abs() < 1e-6);
        }
    }

    #[test]
    fn poisson_truncation_keeps_the_mass() {
        for mean in [1e-6, 0.3, 5.0, 50.0, 612.6, 5000.0] {
            let w = poisson_weights(mean);
            let total: f64 = w.weights.iter().sum();
            assert!(total >= 1.0 - (-mean).exp() - 1e-9, "mean {mean}: {total}");
            assert!(total <= 1.0 + 1e-10);
            assert!(w.first >= 1);
        }
    }

    #[test]
    fn single_user_regime_matches_two_term_sum() {
        let mut c = cfg();
        let area = PI * 50.0 * 50.0;
        let mean = 1e-6;
        c.area.user_density = mean / area;
        let h = 6.0;
        let got = user_capacity_for(Airborne, 5, &c, h).unwrap();

        let pdf = link_pdf(Airborne, 5, 50.0).unwrap();
        let b = LinkBudget::from_radio(&c.radio);
        let g = BlockageGeometry::new(&c.body, h).unwrap();
        let se_at = |k: f64| {
            pdf.expectation(|x| spectral_efficiency(&b, &g, x, k / area), QuadOptions::rel(1e-12))
                .unwrap()
        };
        let w1 = mean * (-mean).exp();
        let w2 = mean * mean / 2.0 * (-mean).exp();
        let hand = 1e9 * 5.0 * (w1 * se_at(1.0) + w2 / 2.0 * se_at(2.0));
        assert!(((got - hand) / hand).abs() < 1e-9, "{got} vs {hand}");
    }

    #[test]
    fn large_population_follows_law_of_large_numbers() {
        for mean in [60.0, 612.6, 2356.0] {
            let mut c = cfg();
            c.area.user_density = mean / (PI * 2500.0);
            let s = mean_se(Landed, 4, &c, 8.0).unwrap();
            let lln = 1e9 * 4.0 * s / mean;
            let got = user_capacity_for(Landed, 4, &c, 8.0).unwrap();
            assert!(((got - lln) / lln).abs() < 0.02, "mean {mean}: {got} vs {lln}");
        }
    }

    /// At a mean of 50 users the gap to B·M·S̄/mean is the Jensen term
    /// E[mean/K] − 1 ≈ 1/mean + 2/mean², slightly above 2%.
    #[test]
    fn small_population_gap_is_the_jensen_term() {
        let mean = 50.0;
        let mut c = cfg();
        c.area.user_density = mean / (PI * 2500.0);
        let s = mean_se(Landed, 4, &c, 8.0).unwrap();
        let lln = 1e9 * 4.0 * s / mean;
        let got = user_capacity_for(Landed, 4, &c, 8.0).unwrap();
        let w = poisson_weights(mean);
        let jensen: f64 = w
            .weights
            .iter()
            .enumerate()
            .map(|(i, wk)| wk * mean / (w.first + i) as f64)
            .sum();
        assert!((jensen - 1.020852).abs() < 1e-6);
        assert!((got / lln - jensen).abs() < 1e-3, "{} vs {jensen}", got / lln);
    }

    #[test]
    fn user_capacity_decreases_with_density() {
        let mut prev = f64::INFINITY;
        for lambda in [0.001, 0.01, 0.03, 0.078, 0.1, 0.3] {
            let mut c = cfg();
            c.area.user_density = lambda;
            let u = user_capacity_for(Airborne, 3, &c, 6.0).unwrap();
            assert!(u < prev, "λ={lambda}");
            prev = u;
        }
        let mut c = cfg();
        c.area.user_density = 0.0;
        assert!(matches!(user_capacity_for(Airborne, 3, &c, 6.0), Err(Error::Domain(_))));
        assert!(user_capacity(Airborne, &c, HeightMode::Fixed(6.0)).is_err());
    }

    #[test]
    fn capacities_scale_with_bandwidth() {
        let c = cfg();
        let mut wide = c;
        wide.radio.bandwidth_hz *= 2.0;
        for option in DeploymentOption::ALL {
            let a = network_capacity(option, &c, HeightMode::Fixed(7.0)).unwrap();
            let b = network_capacity(option, &wide, HeightMode::Fixed(7.0)).unwrap();
            assert!((b.network_capacity_bps - 2.0 * a.network_capacity_bps).abs() < 1e-6 * b.network_capacity_bps);
            let (ua, ub) = (a.user_capacity_bps.unwrap(), b.user_capacity_bps.unwrap());
            assert!((ub - 2.0 * ua).abs() < 1e-9 * ub);
        }
    }

    #[test]
    fn report_is_consistent() {
        let c = cfg();
        let r = network_capacity(Landed, &c, HeightMode::Optimized).unwrap();
        assert_eq!(r.serving, 3);
        assert_eq!(r.provenance, Provenance::Analytic);
        let expected = 3.0 * c.radio.bandwidth_hz * r.mean_se;
        assert!((r.network_capacity_bps - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn empty_fleet_share_reports_zero() {
        let mut c = cfg();
        c.fleet.drones = 2;
        let r = network_capacity(Airborne, &c, HeightMode::Optimized).unwrap();
        assert!(r.no_coverage());
        assert_eq!(r.network_capacity_bps, 0.0);
        assert_eq!(r.user_capacity_bps, Some(0.0));
        assert_eq!(r.height_m, None);
    }

    #[test]
    fn landed_wins_the_short_battery_cycle() {
        let c = cfg();
        let a = network_capacity(Airborne, &c, HeightMode::Optimized).unwrap();
        let l = network_capacity(Landed, &c, HeightMode::Optimized).unwrap();
        assert!(l.network_capacity_bps > a.network_capacity_bps);
    }

    #[test]
    fn capacity_changes_only_when_the_count_does() {
        let c = cfg();
        let an = Analyzer::new(c, HeightMode::Fixed(7.0));
        let fleet = FleetModel { drones: 4, ..c.fleet };
        let mut prev: Option<CapacityReport> = None;
        for i in 0..400 {
            let ell = 19_900.0 * i as f64 / 400.0;
            let r = an.report(Landed, &fleet, ell).unwrap();
            assert_eq!(r.serving, (4.0 * r.rho.unwrap()).floor() as usize);
            if let Some(p) = prev {
                if p.serving == r.serving {
                    assert_eq!(p.network_capacity_bps, r.network_capacity_bps);
                } else {
                    assert!(r.serving < p.serving);
                }
            }
            prev = Some(r);
        }
    }

    #[test]
    fn pure_path_loss_prefers_lowest_height() {
        let mut c = cfg();
        c.area.user_density = 0.0;
        c.radio.blockage_loss_db = 0.0;
        let (h, _) = optimize_height(Airborne, 5, &c, (1.5, 50.0)).unwrap();
        assert_eq!(h, 1.5);
    }

    #[test]
    fn optimum_is_interior_and_stable() {
        let c = cfg();
        let (ha, sa) = optimize_height(Airborne, 5, &c, (1.5, 100.0)).unwrap();
        let (hl, _) = optimize_height(Landed, 5, &c, (1.5, 100.0)).unwrap();
        assert!(ha > 2.0 && ha < 50.0 && hl > 2.0 && hl < 50.0);
        assert!((ha - hl).abs() > 0.5);
        let (ha2, _) = optimize_height(Airborne, 5, &c, (1.5, 50.0)).unwrap();
        assert!((ha - ha2).abs() < 0.1);
        assert!(sa >= mean_se(Airborne, 5, &c, ha + 0.5).unwrap());
        assert!(sa >= mean_se(Airborne, 5, &c, ha - 0.5).unwrap());
        assert!(optimize_height(Airborne, 5, &c, (1.0, 10.0)).is_err());
    }

    #[test]
    fn tiny_target_needs_one_serving_drone() {
        let c = cfg();
        let an = Analyzer::new(c, HeightMode::Optimized);
        // Landed ρ ≈ 0.93 at ℓ = 1 km: two drones guarantee one on station.
        assert_eq!(an.min_drones_for_target(Landed, 1e-3, 1.0).unwrap(), 2);
        // Airborne ρ ≈ 0.42: three drones are needed for one.
        assert_eq!(an.min_drones_for_target(Airborne, 1e-3, 1.0).unwrap(), 3);
        assert!(matches!(
            an.min_drones_for_target(Landed, 1e12, 1.0),
            Err(Error::UnreachableTarget { .. })
        ));
    }

    #[test]
    fn min_drones_nonincreasing_in_battery() {
        let an = Analyzer::new(cfg(), HeightMode::Optimized);
        for option in DeploymentOption::ALL {
            let mut prev = usize::MAX;
            for t in [1.0, 1.5, 2.0, 3.0, 4.0, 6.0] {
                let n = an.min_drones_for_target(option, 30e6, t).unwrap();
                assert!(n <= prev, "{option} T={t}");
                prev = n;
            }
        }
    }

    #[test]
    fn boundary_moves_out_with_battery() {
        let an = Analyzer::new(cfg(), HeightMode::Optimized);
        let ts: Vec<f64> = (0..=10).map(|i| 1.0 + 0.5 * i as f64).collect();
        let pts = an.tradeoff_boundary(&ts, (0.0, 10_000.0), 4).unwrap();
        let crossings: Vec<_> = pts.iter().filter(|p| p.status == BoundaryStatus::Crossing).collect();
        assert!(!crossings.is_empty());
        for w in crossings.windows(2) {
            assert!(w[1].ell_star_m.unwrap() >= w[0].ell_star_m.unwrap() - 1.0);
        }
        assert_eq!(pts[0].status, BoundaryStatus::LandedAlways);
    }

    #[test]
    fn infeasible_band_is_reported() {
        let an = Analyzer::new(cfg(), HeightMode::Fixed(7.0));
        let pts = an.tradeoff_boundary(&[0.1], (5_000.0, 10_000.0), 4).unwrap();
        assert_eq!(pts[0].status, BoundaryStatus::Infeasible);
    }

    #[test]
    fn blockage_uses_realised_density() {
        // With the pedestrian term removed, K no longer matters for SE, so the
        // user capacity reduces to B·M·S̄·Σ w_K/K.
        let mut c = cfg();
        c.body.blocker_height_m = c.body.ue_height_m + 1e-12;
        c.body.body_radius_m = 1e-9;
        let g = BlockageGeometry::new(&c.body, 6.0).unwrap();
        assert!(blockage_probability(&g, 30.0, 1.0) < 1e-8);
        let s = mean_se(Airborne, 4, &c, 6.0).unwrap();
        let w = poisson_weights(c.area.user_density * PI * 2500.0);
        let inv_k: f64 = w
            .weights
            .iter()
            .enumerate()
            .map(|(i, wk)| wk / (w.first + i) as f64)
            .sum();
        let got = user_capacity_for(Airborne, 4, &c, 6.0).unwrap();
        let expected = 1e9 * 4.0 * s * inv_k;
        assert!(((got - expected) / expected).abs() < 1e-7);
    }
}
