//! Closed-form condition checks tying problem constants to solver
//! guarantees.
//!
//! Three checkers share one report shape:
//! - `check_existence`: a unique solution exists and the fixed-point map is
//!   a contraction with factor `theta`,
//! - `check_stability`: the continuous-time flow decays toward the solution
//!   (negative decay coefficient, divergent gain integral),
//! - `check_discrete`: the explicit iteration contracts per step for every
//!   gain in a declared window `(A, B)`.
//!
//! Every entry records the two sides of a strict inequality `lhs < rhs`, so
//! `margin() = rhs - lhs` says how much room a condition has.

use crate::problem::{LambdaSchedule, Mapping, ProblemInstance};
use crate::{linalg, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// The constants every checker consumes.
///
/// `lipschitz` and `beta` describe the mapping `f`; `kappa` bounds the
/// projection drift of the moving set; `shift_lipschitz` is the Lipschitz
/// constant of the translation map (equal to `kappa` for the translation
/// model); `alpha` is the regularization weight.
///
/// Only signs and finiteness are validated here: an expert may probe the
/// checkers with constants no catalog mapping would produce (for instance
/// `beta > lipschitz`), and the checkers must answer honestly for those too.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub lipschitz: f64,
    pub beta: f64,
    pub kappa: f64,
    pub shift_lipschitz: f64,
    pub alpha: f64,
}

impl ConstantsBundle {
    pub fn new(
        lipschitz: f64,
        beta: f64,
        kappa: f64,
        shift_lipschitz: f64,
        alpha: f64,
    ) -> Result<Self> {
        for (name, v, positive) in [
            ("lipschitz", lipschitz, false),
            ("beta", beta, false),
            ("kappa", kappa, false),
            ("shift_lipschitz", shift_lipschitz, false),
            ("alpha", alpha, true),
        ] {
            if !v.is_finite() || v < 0.0 || (positive && v == 0.0) {
                return Err(Error::InvalidInput(format!(
                    "constant {name} must be {} and finite, got {v}",
                    if positive { "positive" } else { "nonnegative" }
                )));
            }
        }
        Ok(Self {
            lipschitz,
            beta,
            kappa,
            shift_lipschitz,
            alpha,
        })
    }

    /// Reads certified constants off a problem instance.
    pub fn from_problem(p: &ProblemInstance) -> Self {
        let kappa = p.moving_set().kappa();
        Self {
            lipschitz: p.mapping().lipschitz(),
            beta: p.mapping().strong_monotonicity(),
            kappa,
            shift_lipschitz: kappa,
            alpha: p.alpha(),
        }
    }
}

/// One strict inequality `lhs < rhs` with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl ConditionEntry {
    fn strict(label: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            label: label.to_string(),
            lhs,
            rhs,
            satisfied: lhs < rhs,
        }
    }

    /// Slack of the inequality; negative when violated.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Outcome of a checker: named inequalities, derived scalars, and the
/// conjunction of all entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
    pub derived: BTreeMap<String, f64>,
    pub verdict: bool,
}

impl ConditionReport {
    fn assemble(entries: Vec<ConditionEntry>, derived: BTreeMap<String, f64>) -> Self {
        let verdict = entries.iter().all(|e| e.satisfied);
        Self {
            entries,
            derived,
            verdict,
        }
    }

    pub fn entry(&self, label: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `L^2 - 2 beta alpha + alpha^2`, the radicand inside `theta`. Negative
/// only when the constants are mutually inconsistent (it is at least
/// `(alpha - beta)^2` whenever `L >= beta`).
pub fn theta_radicand(c: &ConstantsBundle) -> f64 {
    c.lipschitz * c.lipschitz - 2.0 * c.beta * c.alpha + c.alpha * c.alpha
}

/// Contraction factor of the fixed-point map:
/// `theta = (sqrt(max(L^2 - 2 beta alpha + alpha^2, 0)) + kappa) / alpha`.
///
/// The radicand is clamped at zero; check `theta_radicand` to detect the
/// inconsistent-constants case.
pub fn theta(c: &ConstantsBundle) -> f64 {
    (theta_radicand(c).max(0.0).sqrt() + c.kappa) / c.alpha
}

const EXISTENCE_LABEL: &str = "L^2 - 2 alpha (beta - kappa) < kappa^2";
const THETA_LABEL: &str = "theta < 1";

fn existence_entries(c: &ConstantsBundle) -> Vec<ConditionEntry> {
    let lhs = c.lipschitz * c.lipschitz - 2.0 * c.alpha * (c.beta - c.kappa);
    vec![
        ConditionEntry::strict(EXISTENCE_LABEL, lhs, c.kappa * c.kappa),
        ConditionEntry::strict(THETA_LABEL, theta(c), 1.0),
    ]
}

/// Existence and uniqueness of a solution via the contraction argument.
pub fn check_existence(c: &ConstantsBundle) -> ConditionReport {
    let mut derived = BTreeMap::new();
    derived.insert("theta".to_string(), theta(c));
    derived.insert("theta_radicand".to_string(), theta_radicand(c));
    ConditionReport::assemble(existence_entries(c), derived)
}

/// Decay coefficient of the squared distance to the solution along the
/// flow: `1 + 2 kappa - 2 beta + alpha^2 + L^2 - 2 alpha beta`.
pub fn lambda_coefficient(c: &ConstantsBundle) -> f64 {
    1.0 + 2.0 * c.kappa - 2.0 * c.beta + c.alpha * c.alpha
        + c.lipschitz * c.lipschitz
        - 2.0 * c.alpha * c.beta
}

/// Asymptotic stability of the continuous flow: negative decay coefficient,
/// a positive gain floor (so the gain integral diverges), plus the existence
/// condition.
pub fn check_stability(c: &ConstantsBundle, schedule: &LambdaSchedule) -> ConditionReport {
    let coeff = lambda_coefficient(c);
    let lambda_star = schedule.lower_bound();
    let mut entries = vec![
        ConditionEntry::strict(
            "1 + 2 kappa - 2 beta + alpha^2 + L^2 - 2 alpha beta < 0",
            coeff,
            0.0,
        ),
        ConditionEntry::strict("0 < lambda floor (divergent gain integral)", 0.0, lambda_star),
    ];
    entries.extend(existence_entries(c));
    let mut derived = BTreeMap::new();
    derived.insert("lambda_coefficient".to_string(), coeff);
    derived.insert("lambda_star".to_string(), lambda_star);
    derived.insert("zeta".to_string(), -lambda_star * coeff);
    derived.insert("theta".to_string(), theta(c));
    derived.insert("theta_radicand".to_string(), theta_radicand(c));
    ConditionReport::assemble(entries, derived)
}

/// Step-size coefficients of the discrete iteration, defined when
/// `beta > l`: `C1 = (2 alpha (beta - l) - (L^2 + l^2)) / alpha` and
/// `C2 = alpha (beta - l)`.
fn discrete_coefficients(c: &ConstantsBundle) -> Option<(f64, f64)> {
    let gap = c.beta - c.shift_lipschitz;
    if gap <= 0.0 {
        return None;
    }
    let l2 = c.lipschitz * c.lipschitz + c.shift_lipschitz * c.shift_lipschitz;
    let c1 = (2.0 * c.alpha * gap - l2) / c.alpha;
    let c2 = c.alpha * gap;
    Some((c1, c2))
}

/// Per-step convergence of the explicit iteration for every gain in the
/// window `(a_bound, b_bound)`.
///
/// When `beta <= l` the first entry already fails and the remaining
/// quantities are undefined, so the report carries that single entry.
pub fn check_discrete(c: &ConstantsBundle, a_bound: f64, b_bound: f64) -> Result<ConditionReport> {
    if !(a_bound.is_finite() && b_bound.is_finite() && a_bound > 0.0 && a_bound < b_bound) {
        return Err(Error::InvalidInput(format!(
            "gain window must satisfy 0 < A < B, got A = {a_bound}, B = {b_bound}"
        )));
    }
    let ell = c.shift_lipschitz;
    let first = ConditionEntry::strict("l < beta", ell, c.beta);
    let Some((c1, c2)) = discrete_coefficients(c) else {
        return Ok(ConditionReport::assemble(vec![first], BTreeMap::new()));
    };
    let gap = c.beta - ell;
    let l2 = c.lipschitz * c.lipschitz + ell * ell;
    let alpha_lower = l2 / (2.0 * gap);
    let window_cap = (2.0 * c.alpha * gap - l2) / (c.alpha * c.alpha * gap);
    let r = 1.0 + b_bound * b_bound * c2 - a_bound * c1;
    let entries = vec![
        first,
        ConditionEntry::strict("(L^2 + l^2) / (2 (beta - l)) < alpha", alpha_lower, c.alpha),
        ConditionEntry::strict(
            "B^2 / A < (2 alpha (beta - l) - (L^2 + l^2)) / (alpha^2 (beta - l))",
            b_bound * b_bound / a_bound,
            window_cap,
        ),
        ConditionEntry::strict("r = 1 + B^2 C2 - A C1 < 1", r, 1.0),
    ];
    let mut derived = BTreeMap::new();
    derived.insert("C1".to_string(), c1);
    derived.insert("C2".to_string(), c2);
    derived.insert("r".to_string(), r);
    Ok(ConditionReport::assemble(entries, derived))
}

/// Per-step contraction factor `Q(alpha, lambda) = sqrt(1 + lambda^2 C2 -
/// lambda C1)`.
///
/// Errors when `beta <= l` (coefficients undefined) or when the radicand is
/// negative, which only happens for constants outside any catalog mapping's
/// reach (`beta > L`).
pub fn q_factor(c: &ConstantsBundle, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "gain must be positive and finite, got {lambda}"
        )));
    }
    let Some((c1, c2)) = discrete_coefficients(c) else {
        return Err(Error::Regime(
            "per-step factor undefined: beta <= l".into(),
        ));
    };
    let q2 = 1.0 + lambda * lambda * c2 - lambda * c1;
    if q2 < 0.0 {
        return Err(Error::Regime(format!(
            "per-step factor radicand is negative ({q2}); constants lie outside the step-size regime"
        )));
    }
    Ok(q2.sqrt())
}

/// Gain minimizing `Q`: `C1 / (2 C2)`. Errors when the coefficients are
/// undefined or `C1 <= 0` (no contraction for any gain).
pub fn optimal_lambda(c: &ConstantsBundle) -> Result<f64> {
    let Some((c1, c2)) = discrete_coefficients(c) else {
        return Err(Error::Regime("step coefficients undefined: beta <= l".into()));
    };
    if c1 <= 0.0 {
        return Err(Error::Regime(format!(
            "no contracting gain exists: C1 = {c1} <= 0"
        )));
    }
    Ok(c1 / (2.0 * c2))
}

/// Open interval of regularization weights for which `check_existence`
/// holds, unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRange {
    /// Exclusive lower endpoint.
    pub lower: f64,
}

impl AlphaRange {
    pub fn contains(&self, alpha: f64) -> bool {
        alpha > self.lower
    }
}

/// Weights `alpha > max(kappa, (L^2 - kappa^2) / (2 (beta - kappa)))`;
/// empty when `beta <= kappa`.
pub fn feasible_alpha_range(lipschitz: f64, beta: f64, kappa: f64) -> Option<AlphaRange> {
    if !(lipschitz.is_finite() && beta.is_finite() && kappa.is_finite()) {
        return None;
    }
    if !(lipschitz >= 0.0 && beta >= 0.0 && kappa >= 0.0 && beta > kappa) {
        return None;
    }
    let threshold = (lipschitz * lipschitz - kappa * kappa) / (2.0 * (beta - kappa));
    Some(AlphaRange {
        lower: kappa.max(threshold),
    })
}

/// Convergence rate `sqrt(1 - (alpha beta - L^2) / alpha^2)` of the
/// constant-set iteration with gain `1 / alpha`; requires `alpha > L^2 / beta`.
pub fn he_rate(c: &ConstantsBundle) -> Result<f64> {
    if c.beta <= 0.0 {
        return Err(Error::Regime(
            "constant-set rate needs a strongly monotone mapping (beta > 0)".into(),
        ));
    }
    let l2 = c.lipschitz * c.lipschitz;
    if c.alpha * c.beta <= l2 {
        return Err(Error::Regime(format!(
            "constant-set rate needs alpha > L^2 / beta = {}, got alpha = {}",
            l2 / c.beta,
            c.alpha
        )));
    }
    Ok((1.0 - (c.alpha * c.beta - l2) / (c.alpha * c.alpha)).max(0.0).sqrt())
}

/// Empirical bounds on a mapping's constants from sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalConstants {
    /// Max observed `||f(x) - f(y)|| / ||x - y||`; a lower bound on the
    /// true Lipschitz constant.
    pub lipschitz: f64,
    /// Min observed `<f(x) - f(y), x - y> / ||x - y||^2`; an upper bound on
    /// the true strong monotonicity modulus.
    pub monotonicity: f64,
    pub pairs_used: usize,
}

/// Samples `pairs` point pairs uniformly from the box `[lower, upper]` and
/// reports extremal difference ratios. Deterministic per seed.
pub fn estimate_constants(
    f: &Mapping,
    lower: &[f64],
    upper: &[f64],
    seed: u64,
    pairs: usize,
) -> Result<EmpiricalConstants> {
    if pairs < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 pairs for a meaningful estimate, got {pairs}"
        )));
    }
    let n = f.dim();
    crate::ensure_dim(n, lower.len())?;
    crate::ensure_dim(n, upper.len())?;
    let mut width = 0.0f64;
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        if !(l.is_finite() && u.is_finite() && l <= u) {
            return Err(Error::InvalidInput(format!(
                "sampling box must satisfy lower <= upper at index {i}"
            )));
        }
        width = width.max(u - l);
    }
    if width == 0.0 {
        return Err(Error::InvalidInput("sampling box is a single point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        lower
            .iter()
            .zip(upper)
            .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
            .collect()
    };
    let mut max_ratio = 0.0f64;
    let mut min_inner = f64::INFINITY;
    let mut used = 0usize;
    for _ in 0..pairs {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let d = linalg::dist(&x, &y);
        if d <= 1e-12 * width {
            continue;
        }
        let fx = f.eval(&x)?;
        let fy = f.eval(&y)?;
        let diff = linalg::sub(&fx, &fy);
        max_ratio = max_ratio.max(linalg::norm(&diff) / d);
        min_inner = min_inner.min(linalg::dot(&diff, &linalg::sub(&x, &y)) / (d * d));
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidInput(
            "all sampled pairs were degenerate".into(),
        ));
    }
    Ok(EmpiricalConstants {
        lipschitz: max_ratio,
        monotonicity: min_inner,
        pairs_used: used,
    })
}
