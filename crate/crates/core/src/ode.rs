//! Fixed-step integration of the projected dynamical system
//! `x' = lambda(t) * (P_{Phi(x)}(f(x) - alpha x) - f(x))`.
//!
//! The right-hand side is Lipschitz in `x` with constant
//! `(2L + alpha + kappa) * lambda(t)`, which can grow without bound for
//! polynomial gain schedules. Each base step is therefore split into enough
//! sub-steps to keep the dimensionless step
//! `lambda * h_sub * (2L + alpha + kappa)` below a configured cap; the
//! recording grid stays fixed while stiffness handling adapts underneath.

use crate::analysis::{check_stability, lambda_coefficient, ConstantsBundle};
use crate::linalg::{axpy, dist, fmt_g17, norm};
use crate::problem::{LambdaSchedule, ProblemInstance};
use crate::{ensure_dim, ensure_finite, Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExplicitEuler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Recording/termination grid spacing.
    pub base_step: f64,
    pub t0: f64,
    pub t_end: f64,
    /// Record every k-th base step (the initial and final states are always
    /// recorded).
    pub record_every: usize,
    /// Cap on `lambda * h_sub * (2L + alpha + kappa)`, in (0, 1].
    pub stiffness_cap: f64,
    /// State norm beyond which the run is flagged as diverged.
    pub divergence_radius: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            base_step: 1e-3,
            t0: 0.0,
            t_end: 1.0,
            record_every: 1,
            stiffness_cap: 0.5,
            divergence_radius: 1e6,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_step.is_finite() && self.base_step > 0.0) {
            return Err(Error::InvalidInput("base_step must be positive".into()));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(Error::InvalidInput("t0 must be nonnegative".into()));
        }
        if !(self.t_end.is_finite() && self.t_end > self.t0) {
            return Err(Error::InvalidInput("t_end must exceed t0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be >= 1".into()));
        }
        if !(self.stiffness_cap > 0.0 && self.stiffness_cap <= 1.0) {
            return Err(Error::InvalidInput("stiffness_cap must lie in (0, 1]".into()));
        }
        if !(self.divergence_radius.is_finite() && self.divergence_radius > 0.0) {
            return Err(Error::InvalidInput("divergence_radius must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeTermination {
    ReachedTEnd,
    ResidualBelowTol,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    pub dist_to_solution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub termination: OdeTermination,
}

impl Trajectory {
    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories hold >= 1 sample")
    }

    /// CSV export: `t,x_1,...,x_n,residual[,dist]`, 17 significant digits.
    /// The `dist` column appears iff the run was given a reference solution.
    pub fn to_csv(&self) -> String {
        let n = self.final_sample().x.len();
        let with_dist = self.samples.iter().all(|s| s.dist_to_solution.is_some());
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push_str(",residual");
        if with_dist {
            out.push_str(",dist");
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&fmt_g17(s.t));
            for v in &s.x {
                out.push(',');
                out.push_str(&fmt_g17(*v));
            }
            out.push(',');
            out.push_str(&fmt_g17(s.residual));
            if let Some(d) = s.dist_to_solution {
                out.push(',');
                out.push_str(&fmt_g17(d));
            }
            out.push('\n');
        }
        out
    }
}

/// Integrates the projected dynamical system from `x0`.
///
/// Terminates early once the residual drops to `tol` (`tol = 0` disables
/// early stopping so an equilibrium start still produces a full-horizon
/// trajectory), or flags divergence when the state norm exceeds the
/// configured radius. Fully deterministic: identical inputs produce
/// bit-identical trajectories.
pub fn integrate(
    problem: &ProblemInstance,
    schedule: &LambdaSchedule,
    x0: &[f64],
    config: &IntegratorConfig,
    tol: f64,
    x_star: Option<&[f64]>,
) -> Result<Trajectory> {
    config.validate()?;
    ensure_dim(problem.dim(), x0.len())?;
    ensure_finite(x0, "initial state")?;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidInput("tol must be nonnegative".into()));
    }
    if let Some(xs) = x_star {
        ensure_dim(problem.dim(), xs.len())?;
        ensure_finite(xs, "reference solution")?;
    }

    let constants = ConstantsBundle::from_problem(problem);
    let field_lipschitz =
        2.0 * constants.lipschitz + constants.alpha + constants.kappa;

    let mut samples = Vec::new();
    let mut x = x0.to_vec();
    let mut record = |t: f64, x: &[f64], residual: f64| {
        samples.push(TrajectorySample {
            t,
            x: x.to_vec(),
            residual,
            dist_to_solution: x_star.map(|xs| dist(x, xs)),
        });
    };

    let r0 = problem.residual(&x)?;
    record(config.t0, &x, r0);
    if tol > 0.0 && r0 <= tol {
        return Ok(Trajectory {
            samples,
            termination: OdeTermination::ResidualBelowTol,
        });
    }

    let span = config.t_end - config.t0;
    let n_base = (span / config.base_step).ceil().max(1.0) as usize;
    let mut termination = OdeTermination::ReachedTEnd;
    for i in 0..n_base {
        let t = config.t0 + i as f64 * config.base_step;
        let t_next = (config.t0 + (i + 1) as f64 * config.base_step).min(config.t_end);
        let step = t_next - t;
        if step <= 0.0 {
            break;
        }
        // Gain schedules are nondecreasing, so the right endpoint bounds
        // lambda over the step.
        let lambda_sup = schedule.eval(t).max(schedule.eval(t_next));
        let stiffness = lambda_sup * step * field_lipschitz;
        let n_sub = if stiffness > config.stiffness_cap {
            (stiffness / config.stiffness_cap).ceil() as usize
        } else {
            1
        };
        let h = step / n_sub as f64;
        for j in 0..n_sub {
            let tj = t + j as f64 * h;
            x = match config.method {
                Method::ExplicitEuler => {
                    let k1 = problem.vector_field(schedule, &x, tj)?;
                    axpy(&x, h, &k1)
                }
                Method::Rk4 => {
                    let k1 = problem.vector_field(schedule, &x, tj)?;
                    let k2 =
                        problem.vector_field(schedule, &axpy(&x, 0.5 * h, &k1), tj + 0.5 * h)?;
                    let k3 =
                        problem.vector_field(schedule, &axpy(&x, 0.5 * h, &k2), tj + 0.5 * h)?;
                    let k4 = problem.vector_field(schedule, &axpy(&x, h, &k3), tj + h)?;
                    x.iter()
                        .zip(k1.iter().zip(k2.iter().zip(k3.iter().zip(&k4))))
                        .map(|(xi, (a, (b, (c, d))))| {
                            xi + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
                        })
                        .collect()
                }
            };
        }
        ensure_finite(&x, "integrator state")?;

        let residual = problem.residual(&x)?;
        let diverged = norm(&x) > config.divergence_radius;
        let converged = tol > 0.0 && residual <= tol;
        let on_grid = (i + 1) % config.record_every == 0;
        let last = i + 1 == n_base;
        if on_grid || last || diverged || converged {
            record(t_next, &x, residual);
        }
        if diverged {
            termination = OdeTermination::Diverged;
            break;
        }
        if converged {
            termination = OdeTermination::ResidualBelowTol;
            break;
        }
    }

    Ok(Trajectory {
        samples,
        termination,
    })
}

/// Envelope slack added to the decay bound; absorbs integrator and
/// floating-point error in the recorded samples.
pub const ENVELOPE_EPS: f64 = 1e-3;

/// Distances below this floor are excluded from logarithmic envelope
/// checks and from strict-decrease assertions.
pub const DISTANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    pub t: f64,
    /// `ln ||x(t) - x*|| - ln ||x(t0) - x*||`
    pub log_ratio: f64,
    /// `coefficient * \int_{t0}^{t} lambda + epsilon`
    pub bound: f64,
    pub pass: bool,
}

/// Sample-by-sample comparison of the observed decay against the
/// integrated decay bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub coefficient: f64,
    pub epsilon: f64,
    pub checks: Vec<EnvelopeCheck>,
    pub checked: usize,
    /// Samples skipped because the distance sat below the floor.
    pub skipped: usize,
    pub overall: bool,
}

/// Checks `||x(t) - x*|| <= ||x(t0) - x*|| * exp(coefficient * \int lambda)`
/// in logarithmic form for every recorded sample.
///
/// Refuses (regime error) when the stability conditions do not hold, since
/// the bound means nothing there.
pub fn rate_envelope(
    trajectory: &Trajectory,
    x_star: &[f64],
    constants: &ConstantsBundle,
    schedule: &LambdaSchedule,
) -> Result<EnvelopeReport> {
    let stability = check_stability(constants, schedule);
    if !stability.verdict {
        return Err(Error::Regime(
            "decay envelope undefined: stability conditions are not satisfied".into(),
        ));
    }
    if trajectory.samples.is_empty() {
        return Err(Error::InvalidInput("trajectory has no samples".into()));
    }
    ensure_dim(trajectory.final_sample().x.len(), x_star.len())?;
    let coefficient = lambda_coefficient(constants);
    let t0 = trajectory.samples[0].t;
    let d0 = dist(&trajectory.samples[0].x, x_star);

    let mut checks = Vec::new();
    let mut skipped = 0usize;
    if d0 <= DISTANCE_FLOOR {
        // Started at the solution: nothing to bound.
        return Ok(EnvelopeReport {
            coefficient,
            epsilon: ENVELOPE_EPS,
            checks,
            checked: 0,
            skipped: trajectory.samples.len(),
            overall: true,
        });
    }
    for s in &trajectory.samples {
        let d = dist(&s.x, x_star);
        if d <= DISTANCE_FLOOR {
            skipped += 1;
            continue;
        }
        let log_ratio = d.ln() - d0.ln();
        let bound = coefficient * schedule.integral(t0, s.t) + ENVELOPE_EPS;
        checks.push(EnvelopeCheck {
            t: s.t,
            log_ratio,
            bound,
            pass: log_ratio <= bound,
        });
    }
    let checked = checks.len();
    let overall = checks.iter().all(|c| c.pass);
    Ok(EnvelopeReport {
        coefficient,
        epsilon: ENVELOPE_EPS,
        checks,
        checked,
        skipped,
        overall,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovPoint {
    pub t: f64,
    /// `V = ||x - x*||^2`
    pub value: f64,
    /// Centered finite-difference estimate of `dV/dt`; absent at the
    /// endpoints.
    pub derivative_fd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub points: Vec<LyapunovPoint>,
    /// Fraction of interior samples with
    /// `V' <= coefficient * lambda(t) * V + eps_fd`, where `eps_fd` scales
    /// with the local sample spacing.
    pub bound_fraction: f64,
    pub interior_count: usize,
}

/// Squared-distance series along a trajectory with a finite-difference
/// derivative check against the decay bound.
pub fn lyapunov_series(
    trajectory: &Trajectory,
    x_star: &[f64],
    constants: &ConstantsBundle,
    schedule: &LambdaSchedule,
) -> Result<LyapunovReport> {
    let m = trajectory.samples.len();
    if m < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 samples for a derivative estimate, got {m}"
        )));
    }
    ensure_dim(trajectory.samples[0].x.len(), x_star.len())?;
    for w in trajectory.samples.windows(2) {
        if w[1].t <= w[0].t {
            return Err(Error::InvalidInput(
                "sample times must be strictly increasing".into(),
            ));
        }
    }
    let coefficient = lambda_coefficient(constants);
    let values: Vec<f64> = trajectory
        .samples
        .iter()
        .map(|s| {
            let d = dist(&s.x, x_star);
            d * d
        })
        .collect();
    let mut points = Vec::with_capacity(m);
    let mut satisfied = 0usize;
    for i in 0..m {
        let t = trajectory.samples[i].t;
        let derivative_fd = if i > 0 && i + 1 < m {
            let dt = trajectory.samples[i + 1].t - trajectory.samples[i - 1].t;
            Some((values[i + 1] - values[i - 1]) / dt)
        } else {
            None
        };
        if let Some(vdot) = derivative_fd {
            let dt = trajectory.samples[i + 1].t - trajectory.samples[i - 1].t;
            let eps_fd = dt * (1.0 + values[i]);
            if vdot <= coefficient * schedule.eval(t) * values[i] + eps_fd {
                satisfied += 1;
            }
        }
        points.push(LyapunovPoint {
            t,
            value: values[i],
            derivative_fd,
        });
    }
    let interior_count = m - 2;
    Ok(LyapunovReport {
        points,
        bound_fraction: satisfied as f64 / interior_count as f64,
        interior_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Mapping, MovingSet, ScalarFn};
    use crate::sets::ConvexSet;

    /// f = 2x, Phi(x) = x/4 + unit ball in R^3, alpha = 2. Inside
    /// ||x|| <= 4 the field reduces to x' = -2 lambda(t) x.
    fn ball_instance() -> ProblemInstance {
        let f = Mapping::scaled_identity(3, 2.0).unwrap();
        let s = Mapping::scaled_identity(3, 0.25).unwrap();
        let phi =
            MovingSet::translation(s, ConvexSet::ball(vec![0.0; 3], 1.0).unwrap()).unwrap();
        ProblemInstance::new(f, phi, 2.0).unwrap()
    }

    /// Scalar instance: f = 2x, Phi(x) = 1/(1+|x|) + [-1, 1], alpha = 2;
    /// solution x* = 0, and the flow is x' = -2 lambda(t) x everywhere.
    fn scalar_instance() -> ProblemInstance {
        let f = Mapping::scaled_identity(1, 2.0).unwrap();
        let s = Mapping::componentwise(vec![ScalarFn::InvOnePlusAbs]).unwrap();
        let phi = MovingSet::translation(s, ConvexSet::interval(-1.0, 1.0).unwrap()).unwrap();
        ProblemInstance::new(f, phi, 2.0).unwrap()
    }

    fn cubic_schedule() -> LambdaSchedule {
        LambdaSchedule::polynomial(1.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn ball_run_matches_closed_form_decay() {
        let problem = ball_instance();
        let schedule = cubic_schedule();
        let config = IntegratorConfig {
            t_end: 3.0,
            record_every: 100,
            ..IntegratorConfig::default()
        };
        let x0 = [1.0, 1.0, 1.0];
        let traj =
            integrate(&problem, &schedule, &x0, &config, 1e-8, Some(&[0.0; 3])).unwrap();
        assert_eq!(traj.termination, OdeTermination::ResidualBelowTol);
        let d0 = norm(&x0);
        for s in &traj.samples[1..] {
            // Exact flow: ||x(t)|| = ||x0|| exp(-2 (t + t^4 / 4)).
            let expected = -2.0 * (s.t + s.t.powi(4) / 4.0);
            let observed = (norm(&s.x) / d0).ln();
            assert!(
                (observed - expected).abs() < 1e-4,
                "t = {}: observed {observed}, expected {expected}",
                s.t
            );
        }
        let last = traj.final_sample();
        assert!(norm(&last.x) <= 1e-6);
        assert!(last.residual <= 1e-8);
    }

    #[test]
    fn equilibrium_start_stays_put_for_full_horizon() {
        let problem = ball_instance();
        let schedule = cubic_schedule();
        let config = IntegratorConfig {
            t_end: 1.0,
            record_every: 100,
            ..IntegratorConfig::default()
        };
        // tol = 0 disables early stopping.
        let traj = integrate(&problem, &schedule, &[0.0; 3], &config, 0.0, None).unwrap();
        assert_eq!(traj.termination, OdeTermination::ReachedTEnd);
        assert!(traj.samples.len() > 2);
        for s in &traj.samples {
            assert!(norm(&s.x) <= 1e-9);
            assert!(s.residual <= 1e-9);
        }
        assert_eq!(traj.final_sample().t, 1.0);
    }

    #[test]
    fn positive_tol_at_equilibrium_terminates_immediately() {
        let problem = ball_instance();
        let traj = integrate(
            &problem,
            &cubic_schedule(),
            &[0.0; 3],
            &IntegratorConfig::default(),
            1e-8,
            None,
        )
        .unwrap();
        assert_eq!(traj.termination, OdeTermination::ResidualBelowTol);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn step_halving_shows_method_order() {
        let problem = ball_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let run = |method: Method, h: f64| -> Vec<f64> {
            let config = IntegratorConfig {
                method,
                base_step: h,
                t_end: 0.4,
                record_every: usize::MAX,
                stiffness_cap: 1.0,
                ..IntegratorConfig::default()
            };
            integrate(&problem, &schedule, &[0.5, 0.5, 0.5], &config, 0.0, None)
                .unwrap()
                .final_sample()
                .x
                .clone()
        };
        for (method, lo, hi) in [
            (Method::Rk4, 12.0, 20.0),
            (Method::ExplicitEuler, 1.7, 2.4),
        ] {
            let xh = run(method, 0.05);
            let xh2 = run(method, 0.025);
            let xh4 = run(method, 0.0125);
            let ratio = dist(&xh, &xh2) / dist(&xh2, &xh4);
            assert!(
                ratio > lo && ratio < hi,
                "{method:?}: successive-difference ratio {ratio}"
            );
        }
    }

    #[test]
    fn expanding_field_flags_divergence() {
        // f = -2x, alpha = 1, constant ball: field = P(-x) + 2x grows like 2x.
        let f = Mapping::scaled_identity(2, -2.0).unwrap();
        let phi = MovingSet::constant(ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap());
        let problem = ProblemInstance::new(f, phi, 1.0).unwrap();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let config = IntegratorConfig {
            t_end: 10.0,
            base_step: 1e-2,
            divergence_radius: 1e3,
            record_every: 50,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&problem, &schedule, &[1.0, 1.0], &config, 1e-12, None).unwrap();
        assert_eq!(traj.termination, OdeTermination::Diverged);
        assert!(norm(&traj.final_sample().x) > 1e3);
    }

    #[test]
    fn integration_is_deterministic() {
        let problem = ball_instance();
        let schedule = cubic_schedule();
        let config = IntegratorConfig {
            t_end: 0.5,
            ..IntegratorConfig::default()
        };
        let a = integrate(&problem, &schedule, &[1.0, -2.0, 0.5], &config, 1e-8, None).unwrap();
        let b = integrate(&problem, &schedule, &[1.0, -2.0, 0.5], &config, 1e-8, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recording_grid_respects_record_every() {
        let problem = ball_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let config = IntegratorConfig {
            base_step: 0.1,
            t_end: 1.0,
            record_every: 3,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&problem, &schedule, &[1.0, 0.0, 0.0], &config, 0.0, None).unwrap();
        // Initial sample + steps 3, 6, 9 + final step 10.
        let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        assert_eq!(times.len(), 5);
        assert!((times[1] - 0.3).abs() < 1e-12);
        assert!((times[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_full_precision_rows() {
        let problem = scalar_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let config = IntegratorConfig {
            base_step: 0.25,
            t_end: 1.0,
            ..IntegratorConfig::default()
        };
        let traj =
            integrate(&problem, &schedule, &[0.5], &config, 0.0, Some(&[0.0])).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,residual,dist");
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(csv.lines().count(), 1 + traj.samples.len());
    }

    #[test]
    fn envelope_holds_for_scalar_instance() {
        let problem = scalar_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let constants = ConstantsBundle::from_problem(&problem);
        let config = IntegratorConfig {
            base_step: 1e-3,
            t_end: 4.0,
            record_every: 100,
            ..IntegratorConfig::default()
        };
        let traj =
            integrate(&problem, &schedule, &[0.9], &config, 0.0, Some(&[0.0])).unwrap();
        let report = rate_envelope(&traj, &[0.0], &constants, &schedule).unwrap();
        // Observed decay -2 lambda t against bound -1 lambda t.
        assert!(report.overall, "{report:?}");
        assert_eq!(report.coefficient, -1.0);
        assert!(report.checked > 10);
    }

    #[test]
    fn envelope_refuses_unstable_constants() {
        let problem = ball_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let config = IntegratorConfig {
            t_end: 0.1,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&problem, &schedule, &[1.0, 0.0, 0.0], &config, 0.0, None).unwrap();
        // Positive decay coefficient: 1 + 0.5 - 2 + 1 + 4 - 2 = 2.5.
        let bad = ConstantsBundle::new(2.0, 1.0, 0.25, 0.25, 1.0).unwrap();
        assert!(matches!(
            rate_envelope(&traj, &[0.0; 3], &bad, &schedule),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn envelope_is_vacuous_from_equilibrium_start() {
        let problem = scalar_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let constants = ConstantsBundle::from_problem(&problem);
        let config = IntegratorConfig {
            base_step: 0.1,
            t_end: 0.5,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&problem, &schedule, &[0.0], &config, 0.0, Some(&[0.0])).unwrap();
        let report = rate_envelope(&traj, &[0.0], &constants, &schedule).unwrap();
        assert!(report.overall);
        assert_eq!(report.checked, 0);
        assert_eq!(report.skipped, traj.samples.len());
    }

    #[test]
    fn lyapunov_series_tracks_squared_distance() {
        let problem = scalar_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let constants = ConstantsBundle::from_problem(&problem);
        let config = IntegratorConfig {
            base_step: 1e-2,
            t_end: 2.0,
            record_every: 10,
            ..IntegratorConfig::default()
        };
        let traj =
            integrate(&problem, &schedule, &[0.9], &config, 0.0, Some(&[0.0])).unwrap();
        let report = lyapunov_series(&traj, &[0.0], &constants, &schedule).unwrap();
        assert_eq!(report.points.len(), traj.samples.len());
        assert!(report.points[0].derivative_fd.is_none());
        assert!(report.points.last().unwrap().derivative_fd.is_none());
        assert!(report.bound_fraction >= 0.99, "{}", report.bound_fraction);
        // V itself strictly decreases away from the floor.
        for w in report.points.windows(2) {
            if w[0].value > DISTANCE_FLOOR {
                assert!(w[1].value < w[0].value);
            }
        }
    }

    #[test]
    fn lyapunov_series_is_flat_at_equilibrium() {
        let problem = scalar_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let constants = ConstantsBundle::from_problem(&problem);
        let config = IntegratorConfig {
            base_step: 0.1,
            t_end: 0.5,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&problem, &schedule, &[0.0], &config, 0.0, Some(&[0.0])).unwrap();
        let report = lyapunov_series(&traj, &[0.0], &constants, &schedule).unwrap();
        assert_eq!(report.bound_fraction, 1.0);
        for p in &report.points {
            assert_eq!(p.value, 0.0);
        }
    }

    #[test]
    fn lyapunov_series_rejects_disordered_samples() {
        let problem = scalar_instance();
        let schedule = LambdaSchedule::constant(1.0).unwrap();
        let constants = ConstantsBundle::from_problem(&problem);
        let sample = |t: f64| TrajectorySample {
            t,
            x: vec![0.1],
            residual: 0.2,
            dist_to_solution: None,
        };
        let traj = Trajectory {
            samples: vec![sample(0.0), sample(0.2), sample(0.1)],
            termination: OdeTermination::ReachedTEnd,
        };
        assert!(matches!(
            lyapunov_series(&traj, &[0.0], &constants, &schedule),
            Err(Error::InvalidInput(_))
        ));
        let short = Trajectory {
            samples: vec![sample(0.0), sample(0.1)],
            termination: OdeTermination::ReachedTEnd,
        };
        assert!(lyapunov_series(&short, &[0.0], &constants, &schedule).is_err());
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let base = IntegratorConfig::default();
        for bad in [
            IntegratorConfig { base_step: 0.0, ..base },
            IntegratorConfig { t_end: 0.0, ..base },
            IntegratorConfig { t0: -1.0, ..base },
            IntegratorConfig { record_every: 0, ..base },
            IntegratorConfig { stiffness_cap: 0.0, ..base },
            IntegratorConfig { stiffness_cap: 1.5, ..base },
            IntegratorConfig { divergence_radius: 0.0, ..base },
        ] {
            let problem = scalar_instance();
            let schedule = LambdaSchedule::constant(1.0).unwrap();
            assert!(integrate(&problem, &schedule, &[0.1], &bad, 0.0, None).is_err());
        }
    }
}
