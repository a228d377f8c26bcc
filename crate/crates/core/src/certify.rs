//! Independent verification tools: sampled variational certificates for
//! candidate solutions, exhaustive low-dimensional residual search, and
//! probes that re-derive projection correctness and set-drift constants
//! without going through the solver code paths.

use crate::linalg::{dist, dot, sub};
use crate::problem::{MovingSet, ProblemInstance};
use crate::sets::{gaussian, ConvexSet};
use crate::{ensure_dim, ensure_finite, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateVerdict {
    Certified,
    Refuted,
    Inconclusive,
}

/// Sampled evidence that `x` solves the problem: `f(x)` must lie in
/// `Phi(x)` (small `membership_gap`) and `<x, y - f(x)>` must be
/// nonnegative over sampled `y in Phi(x)` (nonnegative `min_inner`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionCertificate {
    pub membership_gap: f64,
    pub min_inner: f64,
    pub samples_used: usize,
    pub verdict: CertificateVerdict,
}

/// Certifies when both checks pass at `tol`, refutes when either fails by
/// a factor of ten, and reports inconclusive in between.
pub fn certify_solution(
    problem: &ProblemInstance,
    x: &[f64],
    seed: u64,
    samples: usize,
    tol: f64,
) -> Result<SolutionCertificate> {
    ensure_dim(problem.dim(), x.len())?;
    ensure_finite(x, "candidate solution")?;
    if samples < 16 {
        return Err(Error::InvalidInput(format!(
            "need at least 16 samples for a certificate, got {samples}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let fx = problem.mapping().eval(x)?;
    let projected = problem.moving_set().project(x, &fx)?;
    let membership_gap = dist(&fx, &projected);
    let ys = problem.moving_set().sample(x, seed, samples)?;
    let mut min_inner = f64::INFINITY;
    for y in &ys {
        min_inner = min_inner.min(dot(x, &sub(y, &fx)));
    }
    let verdict = if membership_gap <= tol && min_inner >= -tol {
        CertificateVerdict::Certified
    } else if membership_gap > 10.0 * tol || min_inner < -10.0 * tol {
        CertificateVerdict::Refuted
    } else {
        CertificateVerdict::Inconclusive
    };
    Ok(SolutionCertificate {
        membership_gap,
        min_inner,
        samples_used: ys.len(),
        verdict,
    })
}

/// Exhaustive residual minimization over a box, for one or two dimensions
/// only. Scans a grid with relative spacing `resolution`, then polishes
/// the best cell with coordinate-wise ternary search down to 1e-6.
///
/// Returns the best point found and its residual. The polish step is a
/// local refinement of the winning grid cell; global coverage comes from
/// the scan, so `resolution` governs how fine a structure it can resolve.
pub fn grid_oracle(
    problem: &ProblemInstance,
    lower: &[f64],
    upper: &[f64],
    resolution: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = problem.dim();
    ensure_dim(n, lower.len())?;
    ensure_dim(n, upper.len())?;
    if n > 2 {
        return Err(Error::InvalidInput(format!(
            "exhaustive search supports 1 or 2 dimensions, got {n}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1e-2) {
        return Err(Error::InvalidInput(format!(
            "resolution must lie in (0, 1e-2], got {resolution}"
        )));
    }
    for (l, u) in lower.iter().zip(upper) {
        if !(l.is_finite() && u.is_finite() && l < u) {
            return Err(Error::InvalidInput(
                "search box must satisfy lower < upper".into(),
            ));
        }
    }

    let steps = (1.0 / resolution).round() as usize;
    let coord = |c: usize, i: usize| lower[c] + (upper[c] - lower[c]) * (i as f64) / (steps as f64);
    let mut best_x = lower.to_vec();
    let mut best_r = f64::INFINITY;
    let consider = |x: &[f64], best_x: &mut Vec<f64>, best_r: &mut f64| -> Result<()> {
        let r = problem.residual(x)?;
        if r < *best_r {
            *best_r = r;
            *best_x = x.to_vec();
        }
        Ok(())
    };
    match n {
        1 => {
            for i in 0..=steps {
                consider(&[coord(0, i)], &mut best_x, &mut best_r)?;
            }
        }
        _ => {
            for i in 0..=steps {
                for j in 0..=steps {
                    consider(&[coord(0, i), coord(1, j)], &mut best_x, &mut best_r)?;
                }
            }
        }
    }

    // Polish each coordinate inside the winning cell.
    let cell: Vec<f64> = lower
        .iter()
        .zip(upper)
        .map(|(l, u)| (u - l) * resolution)
        .collect();
    for _ in 0..6 {
        for c in 0..n {
            let mut lo = (best_x[c] - cell[c]).max(lower[c]);
            let mut hi = (best_x[c] + cell[c]).min(upper[c]);
            let mut probe = best_x.clone();
            while hi - lo > 1e-7 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                probe[c] = m1;
                let r1 = problem.residual(&probe)?;
                probe[c] = m2;
                let r2 = problem.residual(&probe)?;
                if r1 <= r2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            probe[c] = 0.5 * (lo + hi);
            let r = problem.residual(&probe)?;
            if r < best_r {
                best_r = r;
                best_x = probe;
            }
        }
    }
    Ok((best_x, best_r))
}

/// Checks a claimed projection of `point` onto `set` against sampled set
/// members: the candidate must belong to the set, satisfy the variational
/// inequality `<point - z, y - z> <= 1e-9` for every sample `y`, and no
/// sample may be strictly closer to `point`.
pub fn projection_oracle_accepts(
    set: &ConvexSet,
    point: &[f64],
    candidate: &[f64],
    seed: u64,
    samples: usize,
) -> Result<bool> {
    ensure_dim(set.dim(), point.len())?;
    ensure_dim(set.dim(), candidate.len())?;
    if samples < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 samples for the projection check, got {samples}"
        )));
    }
    if !set.contains(candidate, 1e-6)? {
        return Ok(false);
    }
    let gap = sub(point, candidate);
    let cand_sq = dot(&gap, &gap);
    for y in set.sample(seed, samples)? {
        if dot(&gap, &sub(&y, candidate)) > 1e-9 {
            return Ok(false);
        }
        let d = dist(point, &y);
        if d * d < cand_sq - 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Validates `set.project(point)` through [`projection_oracle_accepts`].
pub fn projection_oracle(set: &ConvexSet, point: &[f64], seed: u64, samples: usize) -> Result<bool> {
    let candidate = set.project(point)?;
    projection_oracle_accepts(set, point, &candidate, seed, samples)
}

/// Empirically probes the set-drift constant: the largest observed
/// `||P_{Phi(x)}(z) - P_{Phi(y)}(z)|| / ||x - y||` over seeded random
/// triples `(x, y, z)`. A sound declared constant dominates this value.
pub fn kappa_probe(phi: &MovingSet, seed: u64, triples: usize) -> Result<f64> {
    if triples < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 probe triples, got {triples}"
        )));
    }
    let n = phi.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |scale: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| scale * gaussian(rng)).collect()
    };
    let mut max_ratio: f64 = 0.0;
    for _ in 0..triples {
        let x = draw(3.0, &mut rng);
        let y = draw(3.0, &mut rng);
        let z = draw(6.0, &mut rng);
        let dxy = dist(&x, &y);
        if dxy <= 1e-9 {
            continue;
        }
        let px = phi.project(&x, &z)?;
        let py = phi.project(&y, &z)?;
        max_ratio = max_ratio.max(dist(&px, &py) / dxy);
    }
    Ok(max_ratio)
}
