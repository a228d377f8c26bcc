//! Oracle helpers shared by the integration suite. Everything here derives
//! from set geometry directly — no calls into the library's closed-form
//! projections — so agreement between the two is meaningful evidence.
#![allow(dead_code)]

use iqvi_core::sets::ConvexSet;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Membership decided from the defining inequalities of each variant.
pub fn member(set: &ConvexSet, p: &[f64], tol: f64) -> bool {
    match set {
        ConvexSet::Ball { center, radius } => dist(p, center) <= radius + tol,
        ConvexSet::Box { lower, upper } => p
            .iter()
            .zip(lower.iter().zip(upper))
            .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
        ConvexSet::Halfspace { normal, offset } => dot(normal, p) <= offset + tol,
        ConvexSet::Simplex { scale, .. } => {
            p.iter().all(|v| *v >= -tol) && (p.iter().sum::<f64>() - scale).abs() <= tol
        }
        ConvexSet::Interval { lower, upper } => p[0] >= lower - tol && p[0] <= upper + tol,
    }
}

/// Nearest feasible point by shrinking grid search: scan a cube around
/// `start_center`, recenter on the best feasible point, shrink, repeat.
/// Suitable for full-dimensional sets in one or two dimensions.
pub fn shrinking_grid_project<F: Fn(&[f64]) -> bool>(
    point: &[f64],
    start_center: &[f64],
    start_radius: f64,
    feasible: F,
    rounds: usize,
) -> Option<Vec<f64>> {
    const PER_AXIS: usize = 24;
    let n = point.len();
    let mut center = start_center.to_vec();
    let mut radius = start_radius;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..rounds {
        let mut idx = vec![0usize; n];
        loop {
            let candidate: Vec<f64> = (0..n)
                .map(|c| center[c] - radius + 2.0 * radius * (idx[c] as f64) / (PER_AXIS as f64))
                .collect();
            if feasible(&candidate) {
                let d = dist(point, &candidate);
                if best.as_ref().map_or(true, |(_, bd)| d < *bd) {
                    best = Some((candidate, d));
                }
            }
            // odometer increment over the n-dimensional grid
            let mut c = 0;
            loop {
                if c == n {
                    break;
                }
                idx[c] += 1;
                if idx[c] <= PER_AXIS {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == n {
                break;
            }
        }
        if let Some((b, _)) = &best {
            center = b.clone();
        }
        radius = (4.0 * radius) / (PER_AXIS as f64);
    }
    best.map(|(b, _)| b)
}
