//! Monte Carlo counterpart of the analytic model.
//!
//! Users and pedestrians are dropped explicitly and every link is checked
//! geometrically for blockage. A body blocks a link when its centre lies in
//! the zone `0 ≤ along ≤ L + r_B`, `|across| ≤ r_B`, measured from the UE
//! towards its AP, where `L = x·(h_B − h_U)/h_T` is the shadow length. This
//! is the zone whose area `2r_B(L + r_B)` the analytic blockage formula
//! uses, so the simulation checks the implementation of the model rather
//! than its physical fidelity. Self-blockage is an independent Bernoulli
//! draw.
//!
//! Replication `r` draws from ChaCha8 stream `r` of the configured seed, so
//! results do not depend on how replications are scheduled across threads.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use crate::channel::{BlockageGeometry, LinkBudget};
use crate::error::{Error, Result};
use crate::geometry::{layout_for_radius, DeploymentLayout, DeploymentOption};
use crate::scenario::ScenarioConfig;

/// z for a two-sided 95% normal interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub replications: usize,
    pub seed: u64,
    pub drops_per_replication: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            replications: 10,
            seed: 42,
            drops_per_replication: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub n_samples: u64,
}

impl SimEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.ci95_halfwidth
    }

    pub fn relative_error(&self, reference: f64) -> f64 {
        ((self.mean - reference) / reference).abs()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
    /// Underlying observations, when one sample aggregates several.
    units: u64,
}

impl Moments {
    fn push(&mut self, v: f64, units: u64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.units += units;
    }
}

fn stream_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Runs `drop` `drops_per_replication` times per replication, in parallel
/// over replications, and reduces in replication order.
fn replicate<F>(sim: &SimConfig, drop: F) -> Result<SimEstimate>
where
    F: Fn(&mut ChaCha8Rng, &mut Moments) + Sync,
{
    if sim.replications == 0 || sim.drops_per_replication == 0 {
        return Err(Error::Domain("simulation needs at least one replication and one drop".into()));
    }
    let reps: Vec<Moments> = (0..sim.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(sim.seed, r);
            let mut m = Moments::default();
            for _ in 0..sim.drops_per_replication {
                drop(&mut rng, &mut m);
            }
            m
        })
        .collect();

    let mut total = Moments::default();
    for m in &reps {
        total.n += m.n;
        total.sum += m.sum;
        total.sum_sq += m.sum_sq;
        total.units += m.units;
    }
    if total.n == 0 {
        return Err(Error::Domain("simulation produced no samples".into()));
    }
    let mean = total.sum / total.n as f64;

    let rep_means: Vec<f64> = reps.iter().filter(|m| m.n > 0).map(|m| m.sum / m.n as f64).collect();
    let ci95_halfwidth = if rep_means.len() >= 2 {
        let k = rep_means.len() as f64;
        let centre = rep_means.iter().sum::<f64>() / k;
        let var = rep_means.iter().map(|v| (v - centre).powi(2)).sum::<f64>() / (k - 1.0);
        Z95 * (var / k).sqrt()
    } else if total.n >= 2 {
        let n = total.n as f64;
        let var = ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        Z95 * (var / n).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(SimEstimate {
        mean,
        ci95_halfwidth,
        n_samples: total.units,
    })
}

/// Zone in which a body centre blocks a link, relative to the UE.
#[derive(Debug, Clone, Copy)]
struct BlockingZone {
    dir: [f64; 2],
    reach: f64,
    half_width: f64,
}

impl BlockingZone {
    fn new(dir: [f64; 2], x: f64, geom: &BlockageGeometry) -> Self {
        Self {
            dir,
            reach: geom.shadow_length(x) + geom.body_radius_m,
            half_width: geom.body_radius_m,
        }
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        let along = p[0] * self.dir[0] + p[1] * self.dir[1];
        let across = -p[0] * self.dir[1] + p[1] * self.dir[0];
        along >= 0.0 && along <= self.reach && across.abs() <= self.half_width
    }

    /// Radius of the smallest UE-centred disc holding the zone.
    fn extent(&self) -> f64 {
        self.reach.hypot(self.half_width)
    }

    fn x_range(&self, origin: [f64; 2]) -> (f64, f64) {
        let tip = origin[0] + self.dir[0] * self.reach;
        let side = (self.dir[1] * self.half_width).abs();
        (origin[0].min(tip) - side, origin[0].max(tip) + side)
    }
}

/// Drops pedestrians as a PPP of `density` in a disc around the UE and
/// reports whether any falls in `zone`. Points are generated outward by
/// radius from a private generator, so enlarging the disc only appends
/// points and never changes earlier draws.
fn pedestrians_block(rng: &mut ChaCha8Rng, zone: &BlockingZone, density: f64, disc_scale: f64) -> bool {
    let mut local = ChaCha8Rng::seed_from_u64(rng.random());
    if density <= 0.0 {
        return false;
    }
    let disc = disc_scale * (2.0 * zone.extent() + 1.0);
    let mut cumulative = 0.0;
    let mut blocked = false;
    loop {
        let e: f64 = Exp1.sample(&mut local);
        cumulative += e;
        let r = (cumulative / (PI * density)).sqrt();
        if r > disc {
            return blocked;
        }
        let t = local.random::<f64>() * TAU;
        if zone.contains([r * t.cos(), r * t.sin()]) {
            blocked = true;
        }
    }
}

fn check_distance(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("ground distance must be finite and ≥ 0, got {x}")))
    }
}

/// Estimates the blockage probability of a link of ground length `x` to an
/// AP at `height_m`.
pub fn simulate_blockage(config: &ScenarioConfig, sim: &SimConfig, x: f64, height_m: f64) -> Result<SimEstimate> {
    blockage_with_disc(config, sim, x, height_m, 1.0)
}

fn blockage_with_disc(
    config: &ScenarioConfig,
    sim: &SimConfig,
    x: f64,
    height_m: f64,
    disc_scale: f64,
) -> Result<SimEstimate> {
    check_distance(x)?;
    let geom = BlockageGeometry::new(&config.body, height_m)?;
    let zone = BlockingZone::new([1.0, 0.0], x, &geom);
    let p_self = geom.self_blockage_probability();
    let density = config.area.user_density;
    replicate(sim, |rng, m| {
        let own = rng.random::<f64>() < p_self;
        let others = pedestrians_block(rng, &zone, density, disc_scale);
        m.push(if own || others { 1.0 } else { 0.0 }, 1);
    })
}

fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let t = rng.random::<f64>() * TAU;
    [r * t.cos(), r * t.sin()]
}

fn unit_towards(from: [f64; 2], to: [f64; 2], dist: f64) -> [f64; 2] {
    if dist > 0.0 {
        [(to[0] - from[0]) / dist, (to[1] - from[1]) / dist]
    } else {
        [1.0, 0.0]
    }
}

fn layout(option: DeploymentOption, count: usize, config: &ScenarioConfig, height_m: f64) -> Result<DeploymentLayout> {
    layout_for_radius(option, count, config.area.radius_m, height_m)
}

/// Estimates mean SE by dropping single UEs uniformly in the area, serving
/// each from its nearest AP and sampling blockage explicitly.
pub fn simulate_mean_se(
    option: DeploymentOption,
    count: usize,
    config: &ScenarioConfig,
    height_m: f64,
    sim: &SimConfig,
) -> Result<SimEstimate> {
    let layout = layout(option, count, config, height_m)?;
    let budget = LinkBudget::from_radio(&config.radio);
    let geom = BlockageGeometry::new(&config.body, height_m)?;
    let p_self = geom.self_blockage_probability();
    let (radius, density) = (config.area.radius_m, config.area.user_density);
    replicate(sim, |rng, m| {
        let ue = uniform_in_disc(rng, radius);
        let (ap, x) = layout.nearest(ue);
        let zone = BlockingZone::new(unit_towards(ue, layout.positions[ap], x), x, &geom);
        let own = rng.random::<f64>() < p_self;
        let others = pedestrians_block(rng, &zone, density, 1.0);
        let (clear, blocked) = budget.se_pair(geom.distance_3d(x));
        m.push(if own || others { blocked } else { clear }, 1);
    })
}

/// Estimates the mean per-user rate. Each drop places `K ~ Poisson(λπR²)`
/// users; the other users are the blockers, together with pedestrians of
/// the same density just outside the area so that the blocker field is
/// homogeneous. Drops with `K = 0` yield no sample.
pub fn simulate_user_capacity(
    option: DeploymentOption,
    count: usize,
    config: &ScenarioConfig,
    height_m: f64,
    sim: &SimConfig,
) -> Result<SimEstimate> {
    let lambda = config.area.user_density;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "user capacity needs a positive user density, got {lambda}"
        )));
    }
    let layout = layout(option, count, config, height_m)?;
    let budget = LinkBudget::from_radio(&config.radio);
    let geom = BlockageGeometry::new(&config.body, height_m)?;
    let radius = config.area.radius_m;
    let area = PI * radius * radius;
    let users = Poisson::new(lambda * area).map_err(|e| Error::Domain(e.to_string()))?;
    // Farthest any shadow can reach outside the area.
    let margin = geom.shadow_length(2.0 * radius) + 2.0 * geom.body_radius_m;
    let ring_area = PI * ((radius + margin).powi(2) - radius * radius);
    let rate_scale = config.radio.bandwidth_hz * count as f64;

    replicate(sim, |rng, m| {
        let k = users.sample(rng) as usize;
        if k == 0 {
            return;
        }
        let sum_se = user_drop(rng, k, &layout, &budget, &geom, radius, margin, ring_area);
        let kf = k as f64;
        m.push(rate_scale / kf * sum_se / kf, k as u64);
    })
}

/// One drop of `k` users; returns the sum of their SEs.
#[allow(clippy::too_many_arguments)]
fn user_drop(
    rng: &mut ChaCha8Rng,
    k: usize,
    layout: &DeploymentLayout,
    budget: &LinkBudget,
    geom: &BlockageGeometry,
    radius: f64,
    margin: f64,
    ring_area: f64,
) -> f64 {
    let area = PI * radius * radius;
    let ues: Vec<[f64; 2]> = (0..k).map(|_| uniform_in_disc(rng, radius)).collect();

    let outside = Poisson::new(k as f64 / area * ring_area)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    let outer = radius + margin;
    let mut bodies: Vec<([f64; 2], usize)> = ues.iter().copied().zip(0..).collect();
    for _ in 0..outside {
        let r = (radius * radius + rng.random::<f64>() * (outer * outer - radius * radius)).sqrt();
        let t = rng.random::<f64>() * TAU;
        bodies.push(([r * t.cos(), r * t.sin()], usize::MAX));
    }
    bodies.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));

    let p_self = geom.self_blockage_probability();
    let mut sum_se = 0.0;
    for (i, &ue) in ues.iter().enumerate() {
        let (ap, x) = layout.nearest(ue);
        let zone = BlockingZone::new(unit_towards(ue, layout.positions[ap], x), x, geom);
        let (lo, hi) = zone.x_range(ue);
        let start = bodies.partition_point(|b| b.0[0] < lo);
        let others = bodies[start..]
            .iter()
            .take_while(|b| b.0[0] <= hi)
            .any(|&(p, id)| id != i && zone.contains([p[0] - ue[0], p[1] - ue[1]]));
        let own = rng.random::<f64>() < p_self;
        let (clear, blocked) = budget.se_pair(geom.distance_3d(x));
        sum_se += if own || others { blocked } else { clear };
    }
    sum_se
}

/// Ground distances from `n` uniform drops in a disc of radius `radius` to
/// the nearest AP of the layout.
pub fn sample_nearest_distances(
    option: DeploymentOption,
    count: usize,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let layout = layout_for_radius(option, count, radius, radius)?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n)
        .map(|_| layout.nearest(uniform_in_disc(&mut rng, radius)).1)
        .collect())
}
