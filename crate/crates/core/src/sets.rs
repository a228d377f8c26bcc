//! Catalog of closed convex sets with exact Euclidean projections.
//!
//! Every variant projects in closed form; there is no iterative QP anywhere.
//! A point projects onto:
//! - `Ball`: radial pull-back onto the sphere when outside,
//! - `Box` / `Interval`: componentwise clamping,
//! - `Halfspace`: shift along the normal by the constraint violation,
//! - `Simplex`: sort-and-threshold (descending values, ties broken by
//!   coordinate index so results are deterministic).

use crate::linalg::{dist, dot, norm};
use crate::{ensure_dim, ensure_finite, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default tolerance for membership queries.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `{x : ||x - center|| <= radius}`
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : lower_i <= x_i <= upper_i}`
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x : <normal, x> <= offset}`
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// `{x : x_i >= 0, sum x_i = scale}`
    Simplex { dim: usize, scale: f64 },
    /// `{x in R : lower <= x <= upper}`
    Interval { lower: f64, upper: f64 },
}

impl ConvexSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidInput("ball center must be nonempty".into()));
        }
        ensure_finite(&center, "ball center")
            .map_err(|_| Error::InvalidInput("ball center must be finite".into()))?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn hyper_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidInput(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidInput(format!(
                    "box bounds must satisfy lower <= upper, violated at index {i}: [{l}, {u}]"
                )));
            }
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::InvalidInput("halfspace normal must be nonempty".into()));
        }
        ensure_finite(&normal, "halfspace normal")
            .map_err(|_| Error::InvalidInput("halfspace normal must be finite".into()))?;
        if !offset.is_finite() {
            return Err(Error::InvalidInput("halfspace offset must be finite".into()));
        }
        if norm(&normal) == 0.0 {
            return Err(Error::InvalidInput("halfspace normal must be nonzero".into()));
        }
        Ok(Self::Halfspace { normal, offset })
    }

    pub fn simplex(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("simplex dimension must be >= 1".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!(
                "simplex scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self::Simplex { dim, scale })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(Error::InvalidInput(format!(
                "interval must satisfy lower <= upper with finite bounds, got [{lower}, {upper}]"
            )));
        }
        Ok(Self::Interval { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::Halfspace { normal, .. } => normal.len(),
            Self::Simplex { dim, .. } => *dim,
            Self::Interval { .. } => 1,
        }
    }

    /// Exact Euclidean projection of `point` onto the set.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), point.len())?;
        ensure_finite(point, "projection input")?;
        Ok(match self {
            Self::Ball { center, radius } => {
                let d = dist(point, center);
                if d <= *radius {
                    point.to_vec()
                } else {
                    center
                        .iter()
                        .zip(point)
                        .map(|(c, p)| c + (p - c) * (radius / d))
                        .collect()
                }
            }
            Self::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(p, (l, u))| p.clamp(*l, *u))
                .collect(),
            Self::Halfspace { normal, offset } => {
                let violation = dot(normal, point) - offset;
                if violation <= 0.0 {
                    point.to_vec()
                } else {
                    let nn = dot(normal, normal);
                    point
                        .iter()
                        .zip(normal)
                        .map(|(p, a)| p - a * (violation / nn))
                        .collect()
                }
            }
            Self::Simplex { dim, scale } => project_simplex(point, *dim, *scale),
            Self::Interval { lower, upper } => vec![point[0].clamp(*lower, *upper)],
        })
    }

    /// True when `point` lies within `tol` of the set.
    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool> {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "membership tolerance must be nonnegative, got {tol}"
            )));
        }
        let proj = self.project(point)?;
        Ok(dist(point, &proj) <= tol)
    }

    /// Deterministic sample of `count` points from the set.
    ///
    /// Every fourth point (indices 0, 4, 8, ...) is obtained by projecting an
    /// exterior draw, so at least `ceil(count / 4)` samples sit on the
    /// boundary; the rest are interior-style draws. All outputs satisfy
    /// `contains(point, 1e-12)`.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::InvalidInput("sample count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let boundary = i % 4 == 0;
            out.push(self.sample_one(&mut rng, boundary)?);
        }
        Ok(out)
    }

    fn sample_one(&self, rng: &mut ChaCha8Rng, boundary: bool) -> Result<Vec<f64>> {
        let n = self.dim();
        Ok(match self {
            Self::Ball { center, radius } => {
                let dir = unit_vector(rng, n);
                if boundary {
                    let exterior: Vec<f64> = center
                        .iter()
                        .zip(&dir)
                        .map(|(c, d)| c + d * radius * (1.5 + rng.gen::<f64>()))
                        .collect();
                    self.project(&exterior)?
                } else {
                    let r = radius * rng.gen::<f64>();
                    center.iter().zip(&dir).map(|(c, d)| c + d * r).collect()
                }
            }
            Self::Box { lower, upper } => {
                let inside: Vec<f64> = lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                    .collect();
                if boundary {
                    let mut exterior = inside;
                    let k = rng.gen_range(0..n);
                    if rng.gen::<bool>() {
                        exterior[k] = upper[k] + 0.5 + rng.gen::<f64>();
                    } else {
                        exterior[k] = lower[k] - 0.5 - rng.gen::<f64>();
                    }
                    self.project(&exterior)?
                } else {
                    inside
                }
            }
            Self::Halfspace { normal, offset } => {
                let scale = 1.0 + offset.abs();
                let g: Vec<f64> = (0..n).map(|_| gaussian(rng) * scale).collect();
                let nn = dot(normal, normal);
                let slack = dot(normal, &g) - offset;
                if boundary {
                    let push = (0.5 + rng.gen::<f64>()) * scale - slack;
                    let exterior: Vec<f64> =
                        g.iter().zip(normal).map(|(x, a)| x + a * (push / nn)).collect();
                    self.project(&exterior)?
                } else {
                    let pull = slack + rng.gen::<f64>() * scale;
                    g.iter().zip(normal).map(|(x, a)| x - a * (pull / nn)).collect()
                }
            }
            Self::Simplex { dim, scale } => {
                if boundary {
                    let exterior: Vec<f64> =
                        (0..*dim).map(|_| gaussian(rng) * scale).collect();
                    self.project(&exterior)?
                } else {
                    let draws: Vec<f64> =
                        (0..*dim).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                    let total: f64 = draws.iter().sum();
                    draws.iter().map(|e| scale * e / total).collect()
                }
            }
            Self::Interval { lower, upper } => {
                if boundary {
                    let exterior = if rng.gen::<bool>() {
                        upper + 0.5 + rng.gen::<f64>()
                    } else {
                        lower - 0.5 - rng.gen::<f64>()
                    };
                    self.project(&[exterior])?
                } else {
                    vec![lower + (upper - lower) * rng.gen::<f64>()]
                }
            }
        })
    }
}

/// Sort-and-threshold projection onto `{x >= 0, sum x = scale}`.
fn project_simplex(point: &[f64], dim: usize, scale: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        point[j]
            .partial_cmp(&point[i])
            .expect("finite coordinates")
            .then(i.cmp(&j))
    });
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &i) in order.iter().enumerate() {
        cumsum += point[i];
        let candidate = (cumsum - scale) / (k + 1) as f64;
        if point[i] - candidate > 0.0 {
            tau = candidate;
        }
    }
    point.iter().map(|p| (p - tau).max(0.0)).collect()
}

/// Standard normal draw via Box-Muller.
pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let len = norm(&g);
        if len > 1e-6 {
            return g.iter().map(|x| x / len).collect();
        }
    }
}

/// Distance from `point` to the set, i.e. to its projection.
pub fn distance_to(set: &ConvexSet, point: &[f64]) -> Result<f64> {
    let proj = set.project(point)?;
    Ok(dist(point, &proj))
}
