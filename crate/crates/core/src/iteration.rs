//! Discrete solvers: the explicit iteration
//! `x_{n+1} = x_n + lambda_n h_n (P_{Phi(x_n)}(f(x_n) - alpha x_n) - f(x_n))`,
//! a Banach fixed-point variant of the same step with gain `1/alpha`, and
//! the classical constant-set iteration as a special case.
//!
//! One explicit step with `h_n = 1` coincides with one explicit-Euler step
//! of the continuous system under constant gain `lambda_n`.

use crate::analysis::{check_discrete, check_existence, he_rate, q_factor, theta, ConstantsBundle};
use crate::linalg::{dist, fmt_g17};
use crate::problem::ProblemInstance;
use crate::{ensure_dim, ensure_finite, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Gain sequence `lambda_n` for the explicit iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum GainSequence {
    Constant { value: f64 },
    /// Repeats the listed gains in order.
    Cyclic { values: Vec<f64> },
    /// Independent draws from the open interval `(low, high)`,
    /// deterministic per seed.
    SeededUniform { low: f64, high: f64, seed: u64 },
}

impl GainSequence {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gain must be positive and finite, got {value}"
            )));
        }
        Ok(Self::Constant { value })
    }

    pub fn cyclic(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("cyclic gain list must be nonempty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("cyclic gains must be positive and finite".into()));
        }
        Ok(Self::Cyclic { values })
    }

    pub fn seeded_uniform(low: f64, high: f64, seed: u64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low > 0.0 && low < high) {
            return Err(Error::InvalidInput(format!(
                "uniform gain window must satisfy 0 < low < high, got ({low}, {high})"
            )));
        }
        Ok(Self::SeededUniform { low, high, seed })
    }

    fn stream(&self) -> GainStream<'_> {
        match self {
            Self::Constant { value } => GainStream::Constant(*value),
            Self::Cyclic { values } => GainStream::Cyclic { values, next: 0 },
            Self::SeededUniform { low, high, seed } => GainStream::Seeded {
                rng: ChaCha8Rng::seed_from_u64(*seed),
                low: *low,
                high: *high,
            },
        }
    }
}

enum GainStream<'a> {
    Constant(f64),
    Cyclic { values: &'a [f64], next: usize },
    Seeded { rng: ChaCha8Rng, low: f64, high: f64 },
}

impl GainStream<'_> {
    fn next_gain(&mut self) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Cyclic { values, next } => {
                let v = values[*next % values.len()];
                *next += 1;
                v
            }
            Self::Seeded { rng, low, high } => loop {
                let v = *low + (*high - *low) * rng.gen::<f64>();
                if v > *low && v < *high {
                    break v;
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    pub gains: GainSequence,
    /// Step scale `h_n` (constant across steps).
    pub step_scale: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::InvalidInput("step_scale must be positive".into()));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidInput("tol must be nonnegative".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterTermination {
    ResidualBelowTol,
    MaxIterReached,
    /// The next state or its residual stopped being finite; the log keeps
    /// every iterate up to the last good one.
    NumericFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateEntry {
    pub n: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    /// Gain that produced this iterate; `None` for the initial entry.
    pub lambda_used: Option<f64>,
    pub dist_to_solution: Option<f64>,
}

/// Contraction data recorded by the Banach solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BanachInfo {
    pub theta: f64,
    /// `||x_1 - x_0||`
    pub first_step_norm: f64,
}

impl BanachInfo {
    /// A-priori distance bound `theta^k / (1 - theta) * ||x_1 - x_0||`.
    pub fn apriori_bound(&self, k: usize) -> f64 {
        self.theta.powi(k as i32) / (1.0 - self.theta) * self.first_step_norm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateLog {
    pub entries: Vec<IterateEntry>,
    pub termination: IterTermination,
    pub banach: Option<BanachInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterSummary {
    pub iterations: usize,
    pub final_residual: f64,
    pub termination: IterTermination,
}

impl IterateLog {
    pub fn final_entry(&self) -> &IterateEntry {
        self.entries.last().expect("logs hold >= 1 entry")
    }

    pub fn summary(&self) -> IterSummary {
        let last = self.final_entry();
        IterSummary {
            iterations: last.n,
            final_residual: last.residual,
            termination: self.termination,
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }

    /// CSV export: `n,x_1,...,x_n,residual,lambda[,dist]`, 17 significant
    /// digits; the gain field is empty on the initial entry.
    pub fn to_csv(&self) -> String {
        let n = self.final_entry().x.len();
        let with_dist = self.entries.iter().all(|e| e.dist_to_solution.is_some());
        let mut out = String::from("n");
        for i in 1..=n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push_str(",residual,lambda");
        if with_dist {
            out.push_str(",dist");
        }
        out.push('\n');
        for e in &self.entries {
            out.push_str(&e.n.to_string());
            for v in &e.x {
                out.push(',');
                out.push_str(&fmt_g17(*v));
            }
            out.push(',');
            out.push_str(&fmt_g17(e.residual));
            out.push(',');
            if let Some(l) = e.lambda_used {
                out.push_str(&fmt_g17(l));
            }
            if let Some(d) = e.dist_to_solution {
                out.push(',');
                out.push_str(&fmt_g17(d));
            }
            out.push('\n');
        }
        out
    }
}

fn run_iteration(
    problem: &ProblemInstance,
    gains: &mut GainStream<'_>,
    step_scale: f64,
    tol: f64,
    max_iter: usize,
    x0: &[f64],
    x_star: Option<&[f64]>,
) -> Result<IterateLog> {
    ensure_dim(problem.dim(), x0.len())?;
    ensure_finite(x0, "initial state")?;
    if let Some(xs) = x_star {
        ensure_dim(problem.dim(), xs.len())?;
        ensure_finite(xs, "reference solution")?;
    }
    let entry = |n: usize, x: &[f64], residual: f64, lambda: Option<f64>| IterateEntry {
        n,
        x: x.to_vec(),
        residual,
        lambda_used: lambda,
        dist_to_solution: x_star.map(|xs| dist(x, xs)),
    };

    let mut x = x0.to_vec();
    let r0 = problem.residual(&x)?;
    let mut entries = vec![entry(0, &x, r0, None)];
    if r0 <= tol {
        return Ok(IterateLog {
            entries,
            termination: IterTermination::ResidualBelowTol,
            banach: None,
        });
    }
    let mut termination = IterTermination::MaxIterReached;
    for n in 0..max_iter {
        let lambda = gains.next_gain();
        let fx = problem.mapping().eval(&x)?;
        let p = problem.projected_image(&x)?;
        let next: Vec<f64> = x
            .iter()
            .zip(p.iter().zip(&fx))
            .map(|(xi, (pi, fi))| xi + lambda * step_scale * (pi - fi))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            termination = IterTermination::NumericFailure;
            break;
        }
        let residual = match problem.residual(&next) {
            Ok(r) => r,
            Err(Error::Numeric(_)) => {
                termination = IterTermination::NumericFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        x = next;
        entries.push(entry(n + 1, &x, residual, Some(lambda)));
        if residual <= tol {
            termination = IterTermination::ResidualBelowTol;
            break;
        }
    }
    Ok(IterateLog {
        entries,
        termination,
        banach: None,
    })
}

/// Runs the explicit iteration from `x0`.
pub fn iterate(
    problem: &ProblemInstance,
    config: &IterationConfig,
    x0: &[f64],
    x_star: Option<&[f64]>,
) -> Result<IterateLog> {
    config.validate()?;
    let mut gains = config.gains.stream();
    run_iteration(
        problem,
        &mut gains,
        config.step_scale,
        config.tol,
        config.max_iter,
        x0,
        x_star,
    )
}

/// Banach fixed-point iteration `x_{k+1} = h(x_k)` on the contraction map;
/// the same step as [`iterate`] with gain `1/alpha`. Refuses (regime error)
/// when the existence conditions fail, since `h` is then not certified to
/// contract.
pub fn banach_iterate(
    problem: &ProblemInstance,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    x_star: Option<&[f64]>,
) -> Result<IterateLog> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidInput("tol must be nonnegative".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be >= 1".into()));
    }
    let constants = ConstantsBundle::from_problem(problem);
    let report = check_existence(&constants);
    if !report.verdict {
        return Err(Error::Regime(
            "fixed-point iteration not certified: existence conditions fail".into(),
        ));
    }
    let mut gains = GainStream::Constant(1.0 / problem.alpha());
    let mut log = run_iteration(problem, &mut gains, 1.0, tol, max_iter, x0, x_star)?;
    let first_step_norm = if log.entries.len() >= 2 {
        dist(&log.entries[1].x, &log.entries[0].x)
    } else {
        0.0
    };
    log.banach = Some(BanachInfo {
        theta: theta(&constants),
        first_step_norm,
    });
    Ok(log)
}

/// Constant-set iteration with gain `1/alpha`; requires a constant moving
/// set and `alpha > L^2 / beta`.
pub fn he_iterate(
    problem: &ProblemInstance,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    x_star: Option<&[f64]>,
) -> Result<IterateLog> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidInput("tol must be nonnegative".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be >= 1".into()));
    }
    if !matches!(
        problem.moving_set(),
        crate::problem::MovingSet::Constant { .. }
    ) {
        return Err(Error::InvalidInput(
            "constant-set iteration requires a constant moving set".into(),
        ));
    }
    let constants = ConstantsBundle::from_problem(problem);
    he_rate(&constants)?;
    let mut gains = GainStream::Constant(1.0 / problem.alpha());
    run_iteration(problem, &mut gains, 1.0, tol, max_iter, x0, x_star)
}

/// Slack for per-step and envelope comparisons.
pub const CERTIFICATE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCheck {
    /// Index of the iterate this step produced.
    pub n: usize,
    pub lambda: f64,
    pub dist_prev: f64,
    pub dist_next: f64,
    /// Observed `dist_next / dist_prev`; `None` when the previous distance
    /// sat below the certification slack.
    pub ratio: Option<f64>,
    pub q_bound: Option<f64>,
    /// `dist_next <= q_bound * dist_prev + eps`; `None` outside the regime.
    pub pass: Option<bool>,
}

/// Outcome of certifying an iterate log against the per-step contraction
/// theory for a gain window `(a_bound, b_bound)`.
///
/// When any recorded gain leaves the window, or the window itself fails
/// `check_discrete`, the certificate reports observed ratios without
/// pass/fail claims.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCertificate {
    pub regime_valid: bool,
    pub r: Option<f64>,
    pub steps: Vec<StepCheck>,
    pub per_step_pass: Option<bool>,
    /// `dist_n < r^{n/2} dist_0 + eps` for every entry.
    pub global_pass: Option<bool>,
    pub tolerance: f64,
}

pub fn per_step_certificate(
    log: &IterateLog,
    x_star: &[f64],
    constants: &ConstantsBundle,
    a_bound: f64,
    b_bound: f64,
) -> Result<StepCertificate> {
    if log.entries.is_empty() {
        return Err(Error::InvalidInput("iterate log is empty".into()));
    }
    ensure_dim(log.entries[0].x.len(), x_star.len())?;
    let discrete = check_discrete(constants, a_bound, b_bound)?;
    let mut regime_valid = discrete.verdict;

    let dists: Vec<f64> = log.entries.iter().map(|e| dist(&e.x, x_star)).collect();
    let mut steps = Vec::new();
    for i in 1..log.entries.len() {
        let lambda = log.entries[i].lambda_used.ok_or_else(|| {
            Error::InvalidInput(format!("entry {i} lacks a recorded gain", i = i))
        })?;
        if !(lambda > a_bound && lambda < b_bound) {
            regime_valid = false;
        }
        steps.push(StepCheck {
            n: log.entries[i].n,
            lambda,
            dist_prev: dists[i - 1],
            dist_next: dists[i],
            ratio: (dists[i - 1] > CERTIFICATE_EPS).then(|| dists[i] / dists[i - 1]),
            q_bound: None,
            pass: None,
        });
    }

    let (r, per_step_pass, global_pass) = if regime_valid {
        for s in &mut steps {
            let q = q_factor(constants, s.lambda)?;
            s.q_bound = Some(q);
            s.pass = Some(s.dist_next <= q * s.dist_prev + CERTIFICATE_EPS);
        }
        let r = discrete.derived["r"];
        let global = log.entries.iter().zip(&dists).all(|(e, d)| {
            *d < r.powf(e.n as f64 / 2.0) * dists[0] + CERTIFICATE_EPS
        });
        (
            Some(r),
            Some(steps.iter().all(|s| s.pass == Some(true))),
            Some(global),
        )
    } else {
        (None, None, None)
    };

    Ok(StepCertificate {
        regime_valid,
        r,
        steps,
        per_step_pass,
        global_pass,
        tolerance: CERTIFICATE_EPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use crate::problem::{LambdaSchedule, Mapping, MovingSet};
    use crate::sets::ConvexSet;

    /// f = 2x, Phi(x) = x/4 + unit ball in R^3, alpha = 2. Inside
    /// ||x|| <= 4 each gain-lambda step is x -> (1 - 2 lambda) x.
    fn ball_instance() -> ProblemInstance {
        let f = Mapping::scaled_identity(3, 2.0).unwrap();
        let s = Mapping::scaled_identity(3, 0.25).unwrap();
        let phi =
            MovingSet::translation(s, ConvexSet::ball(vec![0.0; 3], 1.0).unwrap()).unwrap();
        ProblemInstance::new(f, phi, 2.0).unwrap()
    }

    fn ball_constants() -> ConstantsBundle {
        ConstantsBundle::new(2.0, 2.0, 0.25, 0.25, 2.0).unwrap()
    }

    /// f = 2x, constant unit ball, alpha = 4 (gain 1/4 per step).
    fn constant_set_instance() -> ProblemInstance {
        let f = Mapping::scaled_identity(3, 2.0).unwrap();
        let phi = MovingSet::constant(ConvexSet::ball(vec![0.0; 3], 1.0).unwrap());
        ProblemInstance::new(f, phi, 4.0).unwrap()
    }

    fn config(gains: GainSequence, tol: f64) -> IterationConfig {
        IterationConfig {
            gains,
            step_scale: 1.0,
            tol,
            max_iter: 400,
        }
    }

    #[test]
    fn constant_gain_contracts_geometrically() {
        let problem = ball_instance();
        let cfg = config(GainSequence::constant(0.2).unwrap(), 1e-8);
        let log = iterate(&problem, &cfg, &[1.0, 1.0, 1.0], Some(&[0.0; 3])).unwrap();
        assert_eq!(log.termination, IterTermination::ResidualBelowTol);
        assert!(log.final_entry().n <= 400);
        assert!(log.final_entry().residual <= 1e-8);
        // First step: x -> 0.6 x exactly up to rounding.
        for (a, b) in log.entries[1].x.iter().zip(&log.entries[0].x) {
            assert!((a - 0.6 * b).abs() <= 1e-15);
        }
        // Distance ratio 0.6 per step, well under the certified bound.
        for w in log.entries.windows(2) {
            let (d0, d1) = (
                w[0].dist_to_solution.unwrap(),
                w[1].dist_to_solution.unwrap(),
            );
            if d0 > 1e-12 {
                assert!((d1 / d0 - 0.6).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn solution_start_terminates_at_zero() {
        let problem = ball_instance();
        let cfg = config(GainSequence::constant(0.2).unwrap(), 0.0);
        let log = iterate(&problem, &cfg, &[0.0; 3], None).unwrap();
        assert_eq!(log.termination, IterTermination::ResidualBelowTol);
        assert_eq!(log.entries.len(), 1);
        assert_eq!(log.entries[0].residual, 0.0);
    }

    #[test]
    fn seeded_gains_stay_in_window_and_are_deterministic() {
        let problem = ball_instance();
        let gains = GainSequence::seeded_uniform(0.18, 0.24, 3).unwrap();
        let cfg = config(gains, 1e-8);
        let log = iterate(&problem, &cfg, &[1.0, 1.0, 1.0], Some(&[0.0; 3])).unwrap();
        assert_eq!(log.termination, IterTermination::ResidualBelowTol);
        for e in &log.entries[1..] {
            let l = e.lambda_used.unwrap();
            assert!(l > 0.18 && l < 0.24);
        }
        let again = iterate(&problem, &cfg, &[1.0, 1.0, 1.0], Some(&[0.0; 3])).unwrap();
        assert_eq!(log, again);
    }

    #[test]
    fn cyclic_gains_repeat_in_order() {
        let problem = ball_instance();
        let gains = GainSequence::cyclic(vec![0.19, 0.23]).unwrap();
        let cfg = IterationConfig {
            gains,
            step_scale: 1.0,
            tol: 0.0,
            max_iter: 5,
        };
        let log = iterate(&problem, &cfg, &[1.0, 0.0, 0.0], None).unwrap();
        let used: Vec<f64> = log.entries[1..]
            .iter()
            .map(|e| e.lambda_used.unwrap())
            .collect();
        assert_eq!(used, vec![0.19, 0.23, 0.19, 0.23, 0.19]);
    }

    #[test]
    fn iterate_step_equals_euler_step_with_unit_time() {
        use crate::ode::{integrate, IntegratorConfig, Method};
        let problem = ball_instance();
        let lambda = 0.1;
        for x0 in [[0.7, -0.3, 0.2], [3.0, 1.0, -2.0], [5.0, -5.0, 5.0]] {
            let cfg = IterationConfig {
                gains: GainSequence::constant(lambda).unwrap(),
                step_scale: 1.0,
                tol: 0.0,
                max_iter: 1,
            };
            let log = iterate(&problem, &cfg, &x0, None).unwrap();
            let schedule = LambdaSchedule::constant(lambda).unwrap();
            let euler_cfg = IntegratorConfig {
                method: Method::ExplicitEuler,
                base_step: 1.0,
                t0: 0.0,
                t_end: 1.0,
                record_every: 1,
                stiffness_cap: 1.0,
                divergence_radius: 1e6,
            };
            let traj = integrate(&problem, &schedule, &x0, &euler_cfg, 0.0, None).unwrap();
            let d = dist(&log.entries[1].x, &traj.final_sample().x);
            assert!(d <= 1e-12, "iterate and euler disagree by {d}");
        }
    }

    #[test]
    fn banach_reaches_fixed_point_in_one_step_here() {
        // Interior regime: h maps straight to the solution.
        let problem = ball_instance();
        let log = banach_iterate(&problem, &[1.0, 1.0, 1.0], 1e-10, 15, Some(&[0.0; 3])).unwrap();
        assert_eq!(log.termination, IterTermination::ResidualBelowTol);
        assert!(log.final_entry().n <= 15);
        assert!(log.final_entry().residual <= 1e-10);
        let info = log.banach.unwrap();
        assert_eq!(info.theta, 0.125);
        assert!((info.first_step_norm - 3.0f64.sqrt()).abs() < 1e-12);
        assert!(info.apriori_bound(2) < info.apriori_bound(1));
    }

    #[test]
    fn banach_step_ratios_respect_theta() {
        let problem = ball_instance();
        let log = banach_iterate(&problem, &[5.0, -5.0, 5.0], 1e-10, 50, None).unwrap();
        let xs: Vec<&Vec<f64>> = log.entries.iter().map(|e| &e.x).collect();
        let mut prev_step: Option<f64> = None;
        for w in xs.windows(2) {
            let step = dist(w[1], w[0]);
            if let Some(p) = prev_step {
                if p > 1e-12 {
                    assert!(step <= 0.125 * p + 1e-9, "step ratio {}", step / p);
                }
            }
            prev_step = Some(step);
        }
    }

    #[test]
    fn banach_refuses_uncertified_constants() {
        // Shift Lipschitz 3 exceeds alpha = 2, so theta = 1.5 despite the
        // quadratic inequality holding: conjunction verdict is false.
        let f = Mapping::scaled_identity(1, 2.0).unwrap();
        let s = Mapping::scaled_identity(1, 3.0).unwrap();
        let phi = MovingSet::translation(s, ConvexSet::interval(-1.0, 1.0).unwrap()).unwrap();
        let problem = ProblemInstance::new(f, phi, 2.0).unwrap();
        assert!(matches!(
            banach_iterate(&problem, &[0.5], 1e-8, 10, None),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn constant_set_iteration_converges_at_certified_rate() {
        let problem = constant_set_instance();
        let x0 = [3.0, -2.0, 1.0];
        let log = he_iterate(&problem, &x0, 1e-8, 140, Some(&[0.0; 3])).unwrap();
        assert_eq!(log.termination, IterTermination::ResidualBelowTol);
        assert!(log.final_entry().n <= 140);
        // Certified rate sqrt(3)/2.
        let rate = 0.75f64.sqrt();
        for w in log.entries.windows(2) {
            let (d0, d1) = (
                w[0].dist_to_solution.unwrap(),
                w[1].dist_to_solution.unwrap(),
            );
            if d0 > 1e-12 {
                assert!(d1 <= rate * d0 + 1e-9);
            }
        }
    }

    #[test]
    fn constant_set_iteration_guards_its_regime() {
        let problem = ball_instance();
        assert!(matches!(
            he_iterate(&problem, &[1.0, 0.0, 0.0], 1e-8, 10, None),
            Err(Error::InvalidInput(_))
        ));
        // alpha = 1 <= L^2 / beta = 2.
        let f = Mapping::scaled_identity(2, 2.0).unwrap();
        let phi = MovingSet::constant(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap());
        let tight = ProblemInstance::new(f, phi, 1.0).unwrap();
        assert!(matches!(
            he_iterate(&tight, &[1.0, 0.0], 1e-8, 10, None),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn certificate_passes_inside_the_window() {
        let problem = ball_instance();
        let cfg = config(GainSequence::seeded_uniform(0.18, 0.24, 3).unwrap(), 1e-8);
        let log = iterate(&problem, &cfg, &[1.0, 1.0, 1.0], Some(&[0.0; 3])).unwrap();
        let cert = per_step_certificate(&log, &[0.0; 3], &ball_constants(), 0.18, 0.24).unwrap();
        assert!(cert.regime_valid);
        assert_eq!(cert.per_step_pass, Some(true));
        assert_eq!(cert.global_pass, Some(true));
        assert!((cert.r.unwrap() - 0.937225).abs() < 1e-12);
        for s in &cert.steps {
            assert!(s.q_bound.unwrap() < 1.0);
        }
    }

    #[test]
    fn certificate_reports_ratios_only_outside_the_window() {
        let problem = ball_instance();
        let cfg = config(GainSequence::constant(0.5).unwrap(), 1e-8);
        let log = iterate(&problem, &cfg, &[1.0, 1.0, 1.0], Some(&[0.0; 3])).unwrap();
        let cert = per_step_certificate(&log, &[0.0; 3], &ball_constants(), 0.18, 0.24).unwrap();
        assert!(!cert.regime_valid);
        assert_eq!(cert.per_step_pass, None);
        assert_eq!(cert.global_pass, None);
        assert!(cert.r.is_none());
        assert!(!cert.steps.is_empty());
        for s in &cert.steps {
            assert_eq!(s.lambda, 0.5);
            assert!(s.q_bound.is_none());
            assert!(s.ratio.is_some() || s.dist_prev <= CERTIFICATE_EPS);
        }
    }

    #[test]
    fn certificate_requires_recorded_gains() {
        let problem = ball_instance();
        let log = banach_iterate(&problem, &[1.0, 1.0, 1.0], 1e-10, 15, None).unwrap();
        // Banach records its 1/alpha gain, so this certifies fine
        // structurally; strip a gain to hit the input check.
        let mut stripped = log.clone();
        for e in &mut stripped.entries {
            e.lambda_used = None;
        }
        if stripped.entries.len() > 1 {
            assert!(matches!(
                per_step_certificate(&stripped, &[0.0; 3], &ball_constants(), 0.18, 0.24),
                Err(Error::InvalidInput(_))
            ));
        }
    }

    #[test]
    fn iterates_stay_bounded_under_certified_contraction() {
        let problem = ball_instance();
        let cfg = config(GainSequence::seeded_uniform(0.18, 0.24, 7).unwrap(), 1e-10);
        let x0 = [1.0, 1.0, 1.0];
        let log = iterate(&problem, &cfg, &x0, Some(&[0.0; 3])).unwrap();
        let d0 = norm(&x0);
        for e in &log.entries {
            assert!(dist(&e.x, &x0) <= 2.0 * d0 + 1e-9);
        }
    }

    #[test]
    fn numeric_blowup_preserves_last_good_iterate() {
        let f = Mapping::scaled_identity(2, 2.0).unwrap();
        let phi = MovingSet::constant(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap());
        let problem = ProblemInstance::new(f, phi, 2.0).unwrap();
        let cfg = IterationConfig {
            gains: GainSequence::constant(1e150).unwrap(),
            step_scale: 1.0,
            tol: 1e-12,
            max_iter: 50,
        };
        let log = iterate(&problem, &cfg, &[1.0, 1.0], None).unwrap();
        assert_eq!(log.termination, IterTermination::NumericFailure);
        assert!(!log.entries.is_empty());
        for e in &log.entries {
            assert!(e.x.iter().all(|v| v.is_finite()));
            assert!(e.residual.is_finite());
        }
    }

    #[test]
    fn csv_and_summary_formats() {
        let problem = ball_instance();
        let cfg = config(GainSequence::constant(0.2).unwrap(), 1e-8);
        let log = iterate(&problem, &cfg, &[1.0, 1.0, 1.0], Some(&[0.0; 3])).unwrap();
        let csv = log.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,x_1,x_2,x_3,residual,lambda,dist");
        let first_fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first_fields.len(), 7);
        assert_eq!(first_fields[0], "0");
        assert!(first_fields[5].is_empty(), "initial entry has no gain");
        let summary: serde_json::Value =
            serde_json::from_str(&log.summary_json()).unwrap();
        assert_eq!(summary["termination"], "residual_below_tol");
        assert!(summary["iterations"].as_u64().unwrap() > 0);
        assert!(summary["final_residual"].as_f64().unwrap() <= 1e-8);
    }

    #[test]
    fn gain_sequence_validation() {
        assert!(GainSequence::constant(0.0).is_err());
        assert!(GainSequence::cyclic(vec![]).is_err());
        assert!(GainSequence::cyclic(vec![0.1, -0.1]).is_err());
        assert!(GainSequence::seeded_uniform(0.3, 0.2, 1).is_err());
        assert!(GainSequence::seeded_uniform(0.0, 0.2, 1).is_err());
        let problem = ball_instance();
        let bad = IterationConfig {
            gains: GainSequence::constant(0.2).unwrap(),
            step_scale: 0.0,
            tol: 1e-8,
            max_iter: 10,
        };
        assert!(iterate(&problem, &bad, &[1.0, 0.0, 0.0], None).is_err());
    }
}
