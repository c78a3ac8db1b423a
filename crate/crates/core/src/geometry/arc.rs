use std::f64::consts::TAU;

/// Length of the part of the circle of radius `x` around `(ap_dist, 0)` that
/// lies inside the sector `{|p| ≤ radius, |arg p| ≤ half_angle}`. A
/// `half_angle` of `None` means the whole disc.
///
/// All boundary crossings (outer circle, both edge lines) are found in
/// closed form as angles around the AP; each sub-arc between consecutive
/// crossings is then entirely inside or outside and is classified by its
/// midpoint.
pub fn arc_length_in_sector(x: f64, ap_dist: f64, radius: f64, half_angle: Option<f64>) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(8);

    // |A + x u(t)|² = R²  <=>  2 x D cos t = R² − D² − x²
    push_crossings(&mut cuts, 2.0 * x * ap_dist, 0.0, radius * radius - ap_dist * ap_dist - x * x);

    if let Some(h) = half_angle {
        for edge in [h, -h] {
            // Normal of the edge line through the origin.
            let (nx, ny) = (-edge.sin(), edge.cos());
            push_crossings(&mut cuts, x * nx, x * ny, -nx * ap_dist);
        }
    }

    cuts.push(0.0);
    cuts.push(TAU);
    cuts.sort_by(f64::total_cmp);

    let mut inside = 0.0;
    for w in cuts.windows(2) {
        let span = w[1] - w[0];
        if span <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let px = ap_dist + x * mid.cos();
        let py = x * mid.sin();
        if px * px + py * py > radius * radius {
            continue;
        }
        if let Some(h) = half_angle {
            if py.atan2(px).abs() > h {
                continue;
            }
        }
        inside += span;
    }
    inside * x
}

/// Angles t in [0, 2π) solving a cos t + b sin t = c.
fn push_crossings(out: &mut Vec<f64>, a: f64, b: f64, c: f64) {
    let norm = a.hypot(b);
    if norm == 0.0 || c.abs() > norm {
        return;
    }
    let phase = b.atan2(a);
    let delta = (c / norm).clamp(-1.0, 1.0).acos();
    for t in [phase + delta, phase - delta] {
        out.push(t.rem_euclid(TAU));
    }
}
