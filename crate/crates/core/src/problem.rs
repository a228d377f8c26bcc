//! Problem data: mappings with declared constants, state-dependent
//! constraint sets, gain schedules, and the assembled problem instance.
//!
//! A `ProblemInstance` bundles a mapping `f`, a moving set `Phi` and a
//! regularization weight `alpha > 0`. Solving means driving the residual
//! `||f(x) - P_{Phi(x)}(f(x) - alpha * x)||` to zero; a zero residual is
//! equivalent to `f(x)` lying in `Phi(x)` with `<x, y - f(x)> >= 0` for all
//! `y` in `Phi(x)`.

use crate::linalg::{self, dist, norm};
use crate::sets::ConvexSet;
use crate::{ensure_dim, ensure_finite, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Named scalar functions with analytically known constants, applied
/// coordinatewise by [`Mapping::componentwise`].
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    /// `x -> slope * x + intercept`
    Linear { slope: f64, intercept: f64 },
    /// `x -> 1 / (1 + |x|)`; Lipschitz constant 1, not monotone.
    InvOnePlusAbs,
}

impl ScalarFn {
    pub fn linear(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope.is_finite() && intercept.is_finite()) {
            return Err(Error::InvalidInput("linear coefficients must be finite".into()));
        }
        Ok(Self::Linear { slope, intercept })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Linear { slope, intercept } => slope * x + intercept,
            Self::InvOnePlusAbs => 1.0 / (1.0 + x.abs()),
        }
    }

    /// Tight Lipschitz constant on all of R.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Linear { slope, .. } => slope.abs(),
            Self::InvOnePlusAbs => 1.0,
        }
    }

    /// Strong monotonicity modulus; 0 means no monotonicity claim.
    pub fn strong_monotonicity(&self) -> f64 {
        match self {
            Self::Linear { slope, .. } => slope.max(0.0),
            Self::InvOnePlusAbs => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MapKind {
    Affine { matrix: Vec<Vec<f64>>, shift: Vec<f64> },
    ScaledIdentity { factor: f64 },
    Componentwise { funcs: Vec<ScalarFn> },
}

/// A Lipschitz mapping `R^n -> R^n` with constants fixed at construction.
///
/// `lipschitz` is a certified upper bound on `||f(x) - f(y)|| / ||x - y||`;
/// `strong_monotonicity` is a certified lower bound on
/// `<f(x) - f(y), x - y> / ||x - y||^2` whenever it is positive, and 0 when
/// the mapping makes no monotonicity claim.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    kind: MapKind,
    dim: usize,
    lipschitz: f64,
    strong_monotonicity: f64,
}

impl Mapping {
    /// `x -> M x + q`; constants computed from the matrix at build time
    /// (spectral norm, and smallest eigenvalue of the symmetric part
    /// clamped at zero).
    pub fn affine(matrix: Vec<Vec<f64>>, shift: Vec<f64>) -> Result<Self> {
        let n = shift.len();
        if n == 0 {
            return Err(Error::InvalidInput("affine shift must be nonempty".into()));
        }
        ensure_finite(&shift, "affine shift")
            .map_err(|_| Error::InvalidInput("affine shift must be finite".into()))?;
        linalg::check_square(&matrix, n)?;
        let lipschitz = linalg::spectral_norm(&matrix)?;
        let strong_monotonicity = linalg::min_symmetric_part_eigenvalue(&matrix)?.max(0.0);
        Ok(Self {
            kind: MapKind::Affine { matrix, shift },
            dim: n,
            lipschitz,
            strong_monotonicity,
        })
    }

    /// `x -> factor * x` on `R^dim`.
    pub fn scaled_identity(dim: usize, factor: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("mapping dimension must be >= 1".into()));
        }
        if !factor.is_finite() {
            return Err(Error::InvalidInput("scale factor must be finite".into()));
        }
        Ok(Self {
            kind: MapKind::ScaledIdentity { factor },
            dim,
            lipschitz: factor.abs(),
            strong_monotonicity: factor.max(0.0),
        })
    }

    /// One catalog function per coordinate.
    pub fn componentwise(funcs: Vec<ScalarFn>) -> Result<Self> {
        if funcs.is_empty() {
            return Err(Error::InvalidInput(
                "componentwise mapping needs at least one function".into(),
            ));
        }
        let dim = funcs.len();
        let lipschitz = funcs.iter().map(ScalarFn::lipschitz).fold(0.0, f64::max);
        let strong_monotonicity = funcs
            .iter()
            .map(ScalarFn::strong_monotonicity)
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            kind: MapKind::Componentwise { funcs },
            dim,
            lipschitz,
            strong_monotonicity,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Certified Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Certified strong monotonicity modulus (0 = no claim).
    pub fn strong_monotonicity(&self) -> f64 {
        self.strong_monotonicity
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim, x.len())?;
        ensure_finite(x, "mapping input")?;
        Ok(match &self.kind {
            MapKind::Affine { matrix, shift } => {
                linalg::add(&linalg::mat_vec(matrix, x), shift)
            }
            MapKind::ScaledIdentity { factor } => linalg::scale(x, *factor),
            MapKind::Componentwise { funcs } => {
                funcs.iter().zip(x).map(|(f, xi)| f.eval(*xi)).collect()
            }
        })
    }
}

/// Projection rule for expert-supplied moving sets: `(x, z) -> P_{Phi(x)}(z)`.
pub type ProjectionRule = Arc<dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// State-dependent closed convex set `x -> Phi(x)`.
///
/// `kappa()` bounds the projection drift:
/// `||P_{Phi(x)}(z) - P_{Phi(y)}(z)|| <= kappa * ||x - y||` for every `z`.
/// For the translation model `Phi(x) = s(x) + Omega` the bound holds with
/// the Lipschitz constant of `s` because `I - P_Omega` is nonexpansive.
#[derive(Clone)]
pub enum MovingSet {
    /// `Phi(x) = s(x) + Omega`
    Translation { shift: Mapping, base: ConvexSet },
    /// `Phi(x) = Omega` for all `x`
    Constant { base: ConvexSet },
    /// Expert escape hatch: a projection rule with a declared drift bound.
    /// Not expressible in config files; library use only.
    DeclaredKappa {
        dim: usize,
        kappa: f64,
        rule: ProjectionRule,
    },
}

impl fmt::Debug for MovingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Translation { shift, base } => f
                .debug_struct("Translation")
                .field("shift", shift)
                .field("base", base)
                .finish(),
            Self::Constant { base } => {
                f.debug_struct("Constant").field("base", base).finish()
            }
            Self::DeclaredKappa { dim, kappa, .. } => f
                .debug_struct("DeclaredKappa")
                .field("dim", dim)
                .field("kappa", kappa)
                .finish_non_exhaustive(),
        }
    }
}

impl MovingSet {
    pub fn translation(shift: Mapping, base: ConvexSet) -> Result<Self> {
        ensure_dim(shift.dim(), base.dim())?;
        Ok(Self::Translation { shift, base })
    }

    pub fn constant(base: ConvexSet) -> Self {
        Self::Constant { base }
    }

    pub fn declared(dim: usize, kappa: f64, rule: ProjectionRule) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("moving set dimension must be >= 1".into()));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "declared kappa must be nonnegative and finite, got {kappa}"
            )));
        }
        Ok(Self::DeclaredKappa { dim, kappa, rule })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Translation { base, .. } | Self::Constant { base } => base.dim(),
            Self::DeclaredKappa { dim, .. } => *dim,
        }
    }

    /// Drift bound for the projection as the state moves.
    pub fn kappa(&self) -> f64 {
        match self {
            Self::Translation { shift, .. } => shift.lipschitz(),
            Self::Constant { .. } => 0.0,
            Self::DeclaredKappa { kappa, .. } => *kappa,
        }
    }

    /// `P_{Phi(x)}(z)`. For the translation model this is
    /// `s(x) + P_Omega(z - s(x))`.
    pub fn project(&self, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        ensure_dim(self.dim(), z.len())?;
        match self {
            Self::Translation { shift, base } => {
                let s = shift.eval(x)?;
                let inner = base.project(&linalg::sub(z, &s))?;
                Ok(linalg::add(&s, &inner))
            }
            Self::Constant { base } => base.project(z),
            Self::DeclaredKappa { rule, .. } => {
                let p = rule(x, z)?;
                ensure_dim(self.dim(), p.len())?;
                ensure_finite(&p, "declared projection rule output")?;
                Ok(p)
            }
        }
    }

    /// Deterministic sample of points from `Phi(x)`, mixing interior and
    /// boundary draws. For declared rules the points are rule-projections of
    /// pseudorandom draws around `x`.
    pub fn sample(&self, x: &[f64], seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        ensure_dim(self.dim(), x.len())?;
        match self {
            Self::Translation { shift, base } => {
                let s = shift.eval(x)?;
                Ok(base
                    .sample(seed, count)?
                    .into_iter()
                    .map(|p| linalg::add(&s, &p))
                    .collect())
            }
            Self::Constant { base } => base.sample(seed, count),
            Self::DeclaredKappa { rule, .. } => {
                if count == 0 {
                    return Err(Error::InvalidInput("sample count must be >= 1".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let spread = 1.0 + norm(x);
                (0..count)
                    .map(|_| {
                        let z: Vec<f64> = x
                            .iter()
                            .map(|xi| xi + spread * (2.0 * rng.gen::<f64>() - 1.0) * 3.0)
                            .collect();
                        rule(x, &z)
                    })
                    .collect()
            }
        }
    }
}

/// Time-varying gain `lambda(t)`, `t >= 0`.
///
/// Both catalog members are positive with a positive floor, so the integral
/// of `lambda` over `[0, inf)` diverges; `integral_diverges` records that
/// symbolically rather than by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSchedule {
    /// `lambda(t) = value`, `value > 0`
    ConstantGain { value: f64 },
    /// `lambda(t) = a + b * t^power`, `a > 0`, `b >= 0`, `power >= 0`
    PolynomialGain { a: f64, b: f64, power: f64 },
}

impl LambdaSchedule {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidInput(format!(
                "constant gain must be positive and finite, got {value}"
            )));
        }
        Ok(Self::ConstantGain { value })
    }

    pub fn polynomial(a: f64, b: f64, power: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidInput(format!(
                "polynomial gain needs a > 0, got {a}"
            )));
        }
        if !(b.is_finite() && b >= 0.0) || !(power.is_finite() && power >= 0.0) {
            return Err(Error::InvalidInput(
                "polynomial gain needs b >= 0 and power >= 0".into(),
            ));
        }
        Ok(Self::PolynomialGain { a, b, power })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::ConstantGain { value } => *value,
            Self::PolynomialGain { a, b, power } => a + b * t.powf(*power),
        }
    }

    /// Exact `\int_{t0}^{t1} lambda`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Self::ConstantGain { value } => value * (t1 - t0),
            Self::PolynomialGain { a, b, power } => {
                let k = power + 1.0;
                a * (t1 - t0) + b * (t1.powf(k) - t0.powf(k)) / k
            }
        }
    }

    /// Positive floor `lambda_* = inf_{t >= 0} lambda(t)`.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Self::ConstantGain { value } => *value,
            Self::PolynomialGain { a, b, power } => {
                if *power == 0.0 {
                    a + b
                } else {
                    *a
                }
            }
        }
    }

    /// Whether `\int_0^inf lambda = inf`; true for the whole catalog since
    /// every member has a positive floor.
    pub fn integral_diverges(&self) -> bool {
        self.lower_bound() > 0.0
    }
}

/// The assembled problem: find `x` with
/// `f(x) = P_{Phi(x)}(f(x) - alpha * x)`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    f: Mapping,
    phi: MovingSet,
    alpha: f64,
}

impl ProblemInstance {
    pub fn new(f: Mapping, phi: MovingSet, alpha: f64) -> Result<Self> {
        ensure_dim(f.dim(), phi.dim())?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self { f, phi, alpha })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mapping(&self) -> &Mapping {
        &self.f
    }

    pub fn moving_set(&self) -> &MovingSet {
        &self.phi
    }

    /// `P_{Phi(x)}(f(x) - alpha x)`, the inner projection shared by the
    /// residual, the vector field and the fixed-point map.
    pub fn projected_image(&self, x: &[f64]) -> Result<Vec<f64>> {
        let fx = self.f.eval(x)?;
        let z = linalg::axpy(&fx, -self.alpha, x);
        self.phi.project(x, &z)
    }

    /// `||f(x) - P_{Phi(x)}(f(x) - alpha x)||`; zero exactly at solutions.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let fx = self.f.eval(x)?;
        let z = linalg::axpy(&fx, -self.alpha, x);
        let p = self.phi.project(x, &z)?;
        let r = dist(&fx, &p);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::Numeric("residual is not finite".into()))
        }
    }

    /// Right-hand side of the projected dynamical system:
    /// `lambda(t) * (P_{Phi(x)}(f(x) - alpha x) - f(x))`.
    pub fn vector_field(
        &self,
        schedule: &LambdaSchedule,
        x: &[f64],
        t: f64,
    ) -> Result<Vec<f64>> {
        let fx = self.f.eval(x)?;
        let z = linalg::axpy(&fx, -self.alpha, x);
        let p = self.phi.project(x, &z)?;
        let lambda = schedule.eval(t);
        let out: Vec<f64> = p
            .iter()
            .zip(&fx)
            .map(|(pi, fi)| lambda * (pi - fi))
            .collect();
        ensure_finite(&out, "vector field")?;
        Ok(out)
    }

    /// Fixed-point map `h(x) = x - f(x)/alpha + P_{Phi(x)}(f(x) - alpha x)/alpha`;
    /// its fixed points are exactly the solutions.
    pub fn contraction_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        let fx = self.f.eval(x)?;
        let z = linalg::axpy(&fx, -self.alpha, x);
        let p = self.phi.project(x, &z)?;
        let out: Vec<f64> = x
            .iter()
            .zip(fx.iter().zip(&p))
            .map(|(xi, (fi, pi))| xi + (pi - fi) / self.alpha)
            .collect();
        ensure_finite(&out, "fixed-point map")?;
        Ok(out)
    }
}
