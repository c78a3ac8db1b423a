//! PDF of the ground distance between a uniformly placed UE and its serving
//! AP: the length of the arc of radius `x` around the AP that lies inside the
//! AP's sector, divided by the sector area.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use rand::Rng;

use super::{arc_length_in_sector, check_count, packing_radius, ring_radius, DeploymentOption};
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadOptions};

pub const DEFAULT_RESOLUTION: usize = 4096;

/// Maximum allowed |∫f − 1| when a PDF is built.
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Density {
    /// Five hovering APs, three branches split at r_A and d_A.
    AirborneFive { radius: f64, ring: f64 },
    /// Perimeter APs, M ≥ 3, three branches split at r_L and d_L.
    LandedRing { radius: f64, beta: f64 },
    /// Any layout: exact arc length inside the sector.
    ArcLength {
        ap_dist: f64,
        radius: f64,
        half_angle: Option<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct LinkDistancePdf {
    option: DeploymentOption,
    serving: usize,
    sector_area: f64,
    breakpoints: Vec<f64>,
    density: Density,
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl LinkDistancePdf {
    fn build(
        option: DeploymentOption,
        serving: usize,
        radius: f64,
        breakpoints: Vec<f64>,
        density: Density,
        resolution: usize,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("area radius must be positive, got {radius}")));
        }
        let mut pdf = Self {
            option,
            serving,
            sector_area: PI * radius * radius / serving as f64,
            grid: build_grid(&breakpoints, resolution.max(16)),
            breakpoints,
            density,
            cdf: Vec::new(),
        };
        let mut cdf = Vec::with_capacity(pdf.grid.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in pdf.grid.windows(2) {
            acc += quadrature::integrate(|x| pdf.density(x), w, QuadOptions::rel(1e-13))?.value;
            cdf.push(acc);
        }
        if (acc - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { integral: acc });
        }
        pdf.cdf = cdf;
        Ok(pdf)
    }

    pub fn option(&self) -> DeploymentOption {
        self.option
    }

    pub fn serving(&self) -> usize {
        self.serving
    }

    /// Ordered branch boundaries, starting at 0 and ending at `x_max`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn x_max(&self) -> f64 {
        *self.breakpoints.last().expect("breakpoints are never empty")
    }

    /// Tabulation grid; contains every breakpoint.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.density, Density::ArcLength { .. })
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(x >= 0.0) || x > self.x_max() {
            return 0.0;
        }
        match self.density {
            Density::ArcLength {
                ap_dist,
                radius,
                half_angle,
            } => arc_length_in_sector(x, ap_dist, radius, half_angle) / self.sector_area,
            _ => {
                let branch = self
                    .breakpoints
                    .windows(2)
                    .position(|w| x < w[1])
                    .unwrap_or(self.breakpoints.len() - 2);
                self.closed_branch(branch, x)
            }
        }
    }

    /// Evaluates closed-form branch `branch` at `x`, without checking that
    /// `x` belongs to it.
    fn closed_branch(&self, branch: usize, x: f64) -> f64 {
        let q = self.sector_area;
        match self.density {
            Density::AirborneFive { radius, ring } => {
                let alpha = PI / 5.0;
                if branch == 0 || x <= 0.0 {
                    return TAU * x / q;
                }
                if x >= ring {
                    return 0.0;
                }
                // Distance from the centre to the nearer crossing of the
                // circle with a sector edge; written in the cancellation-free
                // form (D² − x²) / (D cos α + √(x² − D² sin² α)).
                let root = (x * x - (ring * alpha.sin()).powi(2)).max(0.0).sqrt();
                let z = (ring * ring - x * x) / (ring * alpha.cos() + root);
                let at_crossing = acos_clamped((x * x + z * z - ring * ring) / (2.0 * x * z));
                if branch == 1 {
                    let outside = 2.0
                        * x
                        * (PI - acos_clamped((x * x + ring * ring - radius * radius) / (2.0 * x * ring)));
                    let beyond_edge = x * (2.0 * at_crossing - PI);
                    (TAU * x - outside - 2.0 * beyond_edge) / q
                } else {
                    2.0 * x * (PI - at_crossing - alpha) / q
                }
            }
            Density::LandedRing { radius, beta } => {
                let lens = 2.0 * x * acos_clamped(x / (2.0 * radius));
                match branch {
                    0 => lens / q,
                    1 => {
                        (lens - 4.0 * x * acos_clamped(radius * beta.sin() / x)) / q
                    }
                    _ => x * (PI - 2.0 * beta - 2.0 * acos_clamped(radius * beta.sin() / x)) / q,
                }
            }
            Density::ArcLength { .. } => self.density(x),
        }
    }

    /// Left and right limits of the closed-form density at each interior
    /// breakpoint. Empty for arc-length PDFs.
    pub fn branch_limits(&self) -> Vec<(f64, f64, f64)> {
        if !self.is_closed_form() {
            return Vec::new();
        }
        (1..self.breakpoints.len() - 1)
            .map(|i| {
                let x = self.breakpoints[i];
                (x, self.closed_branch(i - 1, x), self.closed_branch(i, x))
            })
            .collect()
    }

    /// P(X ≤ x), exact up to quadrature error (no interpolation).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.x_max() {
            return self.total_mass();
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let lo = self.grid[i];
        if x == lo {
            return self.cdf[i];
        }
        let partial = quadrature::integrate(|t| self.density(t), &[lo, x], QuadOptions::rel(1e-13))
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        self.cdf[i] + partial
    }

    /// ∫ f over the whole support, as accumulated at construction.
    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().expect("cdf table is never empty")
    }

    /// E[g(X)], integrated branch by branch.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G, opts: QuadOptions) -> Result<f64> {
        Ok(quadrature::integrate(|x| g(x) * self.density(x), &self.breakpoints, opts)?.value)
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|x| x, QuadOptions::rel(1e-12))
            .expect("density is bounded on a finite support")
    }

    /// Draws one distance by inverting the tabulated CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>() * self.total_mass();
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        if c1 > c0 {
            x0 + (x1 - x0) * (u - c0) / (c1 - c0)
        } else {
            x0
        }
    }

    /// Writes `x,f_x` rows at the tabulation grid.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,f_x")?;
        for &x in &self.grid {
            writeln!(out, "{},{}", x, self.density(x))?;
        }
        Ok(())
    }
}

fn acos_clamped(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// Uniform points inside each branch, proportional to branch length, plus
/// geometric refinement towards both ends of every branch.
fn build_grid(breakpoints: &[f64], resolution: usize) -> Vec<f64> {
    let span = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    let mut grid = Vec::with_capacity(resolution + 32 * breakpoints.len());
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((resolution as f64 * (b - a) / span).round() as usize).max(8);
        let h = (b - a) / n as f64;
        for i in 0..n {
            grid.push(a + h * i as f64);
        }
        for k in 1..=10 {
            let off = h * 0.5f64.powi(k);
            grid.push(a + off);
            grid.push(b - off);
        }
    }
    grid.push(breakpoints[breakpoints.len() - 1]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn dedup_sorted(mut v: Vec<f64>, scale: f64) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * scale);
    v
}

/// PDF built from the closed-form branch formulas. Available for airborne
/// with five APs and for landed with three or more.
pub fn pdf_closed_form(option: DeploymentOption, count: usize, radius: f64) -> Result<LinkDistancePdf> {
    match (option, count) {
        (DeploymentOption::Airborne, 5) => {
            let pack = packing_radius(5, radius)?;
            let ring = radius - pack;
            let alpha = PI / 5.0;
            let psi = (PI - alpha) / 2.0;
            let chord = 2.0 * radius * (alpha / 2.0).sin();
            // Cosine theorem in the triangle (AP, nearest perimeter point,
            // sector corner).
            let corner = (pack * pack + chord * chord - 2.0 * pack * chord * psi.cos()).sqrt();
            LinkDistancePdf::build(
                option,
                count,
                radius,
                vec![0.0, pack, corner, ring],
                Density::AirborneFive { radius, ring },
                DEFAULT_RESOLUTION,
            )
        }
        (DeploymentOption::Landed, 3..=6) => {
            let beta = PI / count as f64;
            let edge = radius * beta.sin();
            let corner = radius * (2.0 - 2.0 * beta.cos()).sqrt();
            LinkDistancePdf::build(
                option,
                count,
                radius,
                dedup_sorted(vec![0.0, edge, corner, radius], radius),
                Density::LandedRing { radius, beta },
                DEFAULT_RESOLUTION,
            )
        }
        _ => Err(Error::NoClosedForm { option, count }),
    }
}

/// PDF for any supported layout via exact arc-length geometry.
pub fn pdf_numeric(
    option: DeploymentOption,
    count: usize,
    radius: f64,
    resolution: usize,
) -> Result<LinkDistancePdf> {
    check_count(count)?;
    let ap_dist = ring_radius(option, count, radius)?;
    let half_angle = (count > 1).then(|| PI / count as f64);
    LinkDistancePdf::build(
        option,
        count,
        radius,
        arc_breakpoints(ap_dist, radius, half_angle),
        Density::ArcLength {
            ap_dist,
            radius,
            half_angle,
        },
        resolution,
    )
}

/// Radii at which the circle around the AP starts or stops touching a
/// sector boundary piece, or passes through a sector vertex.
fn arc_breakpoints(ap_dist: f64, radius: f64, half_angle: Option<f64>) -> Vec<f64> {
    let mut pts = vec![0.0, radius - ap_dist];
    let x_max = match half_angle {
        None => radius + ap_dist,
        Some(h) => {
            let corner = (radius * radius + ap_dist * ap_dist - 2.0 * radius * ap_dist * h.cos()).sqrt();
            pts.push(corner);
            pts.push(ap_dist);
            pts.push(ap_dist * h.sin());
            corner.max(ap_dist)
        }
    };
    pts.push(x_max);
    pts.retain(|&x| (0.0..=x_max).contains(&x));
    dedup_sorted(pts, radius)
}

/// One i.i.d. draw from `pdf`.
pub fn sample_distance<R: Rng + ?Sized>(pdf: &LinkDistancePdf, rng: &mut R) -> f64 {
    pdf.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const R: f64 = 50.0;

    fn sup_diff_away_from_breaks(a: &LinkDistancePdf, b: &LinkDistancePdf) -> f64 {
        let n = 20_000;
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            let x = a.x_max() * i as f64 / n as f64;
            if a.breakpoints().iter().any(|&p| (x - p).abs() < 1e-6) {
                continue;
            }
            worst = worst.max((a.density(x) - b.density(x)).abs());
        }
        worst
    }

    #[test]
    fn airborne_five_first_branch() {
        let pdf = pdf_closed_form(DeploymentOption::Airborne, 5, R).unwrap();
        let q = PI * R * R / 5.0;
        for x in [0.0, 1.0, 10.0, 18.5] {
            assert!((pdf.density(x) - TAU * x / q).abs() < 1e-15);
        }
        assert!((pdf.breakpoints()[1] - 18.5096).abs() < 1e-4);
    }

    #[test]
    fn landed_four_corner_distance() {
        let pdf = pdf_closed_form(DeploymentOption::Landed, 4, R).unwrap();
        assert!((pdf.breakpoints()[2] - 38.2683).abs() < 1e-4);
        assert!((pdf.total_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_arc_length() {
        let cases = [
            (DeploymentOption::Airborne, 5),
            (DeploymentOption::Landed, 3),
            (DeploymentOption::Landed, 4),
            (DeploymentOption::Landed, 5),
            (DeploymentOption::Landed, 6),
        ];
        for (option, m) in cases {
            let closed = pdf_closed_form(option, m, R).unwrap();
            let numeric = pdf_numeric(option, m, R, 4096).unwrap();
            assert_eq!(closed.breakpoints().len(), numeric.breakpoints().len(), "{option} {m}");
            for (a, b) in closed.breakpoints().iter().zip(numeric.breakpoints()) {
                assert!((a - b).abs() < 1e-9, "{option} {m}: {a} vs {b}");
            }
            let d = sup_diff_away_from_breaks(&closed, &numeric);
            assert!(d < 1e-6, "{option} {m}: sup diff {d}");
        }
    }

    #[test]
    fn closed_branches_are_continuous() {
        for (option, m) in [
            (DeploymentOption::Airborne, 5),
            (DeploymentOption::Landed, 3),
            (DeploymentOption::Landed, 4),
            (DeploymentOption::Landed, 6),
        ] {
            let pdf = pdf_closed_form(option, m, R).unwrap();
            for (x, left, right) in pdf.branch_limits() {
                assert!((left - right).abs() < 1e-9, "{option} {m} at {x}: {left} vs {right}");
            }
        }
    }

    #[test]
    fn corner_distance_matches_coordinates() {
        let pdf = pdf_closed_form(DeploymentOption::Airborne, 5, R).unwrap();
        let d_a = pdf.breakpoints()[2];
        let layout = super::super::layout_for_radius(DeploymentOption::Airborne, 5, R, 5.0).unwrap();
        let ap = layout.positions[0];
        let corner = [R * (PI / 5.0).cos(), R * (PI / 5.0).sin()];
        let direct = (ap[0] - corner[0]).hypot(ap[1] - corner[1]);
        assert!((d_a - direct).abs() < 1e-9);
    }

    #[test]
    fn unsupported_closed_forms() {
        assert!(matches!(
            pdf_closed_form(DeploymentOption::Airborne, 4, R),
            Err(Error::NoClosedForm { .. })
        ));
        assert!(pdf_closed_form(DeploymentOption::Landed, 2, R).is_err());
        assert!(pdf_numeric(DeploymentOption::Landed, 0, R, 256).is_err());
        assert!(pdf_numeric(DeploymentOption::Landed, 7, R, 256).is_err());
    }

    #[test]
    fn single_centre_ap_is_triangular() {
        let pdf = pdf_numeric(DeploymentOption::Airborne, 1, R, 1024).unwrap();
        for x in [0.5, 10.0, 33.0, 49.9] {
            assert!((pdf.density(x) - 2.0 * x / (R * R)).abs() < 1e-14);
        }
        assert_eq!(pdf.x_max(), R);
        assert!((pdf.mean() - 2.0 * R / 3.0).abs() < 1e-9);
    }

    #[test]
    fn supports() {
        let expect = |o, m| pdf_numeric(o, m, R, 512).unwrap().x_max();
        use DeploymentOption::*;
        assert!((expect(Airborne, 5) - (R - packing_radius(5, R).unwrap())).abs() < 1e-12);
        assert!((expect(Airborne, 6) - 2.0 * R / 3.0).abs() < 1e-12);
        assert!((expect(Landed, 4) - R).abs() < 1e-12);
        assert!((expect(Landed, 1) - 2.0 * R).abs() < 1e-12);
        assert!((expect(Landed, 2) - 2f64.sqrt() * R).abs() < 1e-12);
        for o in [Airborne, Landed] {
            for m in 1..=6 {
                let pdf = pdf_numeric(o, m, R, 512).unwrap();
                assert_eq!(pdf.density(pdf.x_max() + 1e-9), 0.0);
                assert_eq!(pdf.density(-1e-9), 0.0);
            }
        }
    }

    #[test]
    fn samples_stay_in_support_and_match_mean() {
        let pdf = pdf_closed_form(DeploymentOption::Airborne, 5, R).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_distance(&pdf, &mut rng);
            assert!((0.0..=pdf.x_max()).contains(&x));
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let sd = (sum2 / n as f64 - mean * mean).sqrt();
        let exact = pdf.mean();
        assert!((mean - exact).abs() < 3.0 * sd / (n as f64).sqrt(), "{mean} vs {exact}");
    }

    #[test]
    fn cdf_is_monotone_and_consistent_with_table() {
        let pdf = pdf_numeric(DeploymentOption::Landed, 2, R, 1024).unwrap();
        let mut prev = 0.0;
        for i in 0..=500 {
            let x = pdf.x_max() * i as f64 / 500.0;
            let c = pdf.cdf(x);
            assert!(c >= prev - 1e-15);
            prev = c;
        }
        assert!((pdf.cdf(pdf.x_max()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csv_dump_has_header_and_grid() {
        let pdf = pdf_numeric(DeploymentOption::Landed, 3, R, 64).unwrap();
        let mut buf = Vec::new();
        pdf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,f_x\n"));
        assert_eq!(text.lines().count(), pdf.grid().len() + 1);
    }
}
