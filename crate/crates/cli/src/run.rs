//! Run orchestration: execute a validated spec, emit artifacts under one
//! output root, and finish with a `manifest.json` listing every emitted
//! file with its SHA-256 checksum. Everything written here is a pure
//! function of the spec (plus the explicit seed override), so repeated runs
//! produce byte-identical trees.

use crate::plot::{self, Series};
use crate::spec::{parse_spec, ModeConfig, PlotKind, ProblemPart, ValidatedSpec};
use crate::CliError;
use iqvi_core::analysis::{
    check_discrete, check_existence, check_stability, feasible_alpha_range, he_rate,
    ConstantsBundle,
};
use iqvi_core::certify::{certify_solution, grid_oracle};
use iqvi_core::iteration::{
    banach_iterate, he_iterate, iterate, per_step_certificate, IterTermination, IterateLog,
    IterationConfig,
};
use iqvi_core::linalg::norm;
use iqvi_core::ode::{integrate, lyapunov_series, rate_envelope, OdeTermination, Trajectory};
use iqvi_core::problem::{LambdaSchedule, ProblemInstance};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::PathBuf;

pub const BALL_TRANSLATION_ODE: &str = include_str!("../specs/ball_translation_ode.json");
pub const SCALAR_SHIFT_ODE: &str = include_str!("../specs/scalar_shift_ode.json");

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest {
    files: Vec<ManifestEntry>,
}

/// Serializes artifact writes under one root and accumulates the manifest.
pub struct Writer {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    quiet: bool,
}

impl Writer {
    pub fn new(root: PathBuf, quiet: bool) -> Self {
        Self {
            root,
            entries: Vec::new(),
            quiet,
        }
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
        }
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        if !self.quiet {
            println!("wrote {rel}");
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("serializing {rel}: {e}")))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes the manifest last so it covers every artifact of the run.
    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            files: std::mem::take(&mut self.entries),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
        }
        fs::write(&path, text.as_bytes())
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        if !self.quiet {
            println!("wrote manifest.json");
        }
        Ok(self.root)
    }
}

/// Failures observed while running; artifacts are still written, then the
/// worst class decides the exit code (validation > numeric > regime).
#[derive(Default)]
pub struct Outcome {
    pub invalid: Vec<String>,
    pub numeric: Vec<String>,
    pub regime: Vec<String>,
}

impl Outcome {
    fn record(&mut self, context: &str, e: &iqvi_core::Error) {
        let msg = format!("{context}: {e}");
        match e {
            iqvi_core::Error::Numeric(_) => self.numeric.push(msg),
            iqvi_core::Error::Regime(_) => self.regime.push(msg),
            _ => self.invalid.push(msg),
        }
    }

    fn merge(&mut self, mut other: Outcome) {
        self.invalid.append(&mut other.invalid);
        self.numeric.append(&mut other.numeric);
        self.regime.append(&mut other.regime);
    }

    pub fn into_result(self) -> Result<(), CliError> {
        if !self.invalid.is_empty() {
            return Err(CliError::Validation(self.invalid));
        }
        if !self.numeric.is_empty() {
            return Err(CliError::NumericFailure(self.numeric.join("; ")));
        }
        if !self.regime.is_empty() {
            return Err(CliError::RegimeViolation(self.regime.join("; ")));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ErrorArtifact<'a> {
    error: String,
    kind: &'a str,
}

fn error_kind(e: &iqvi_core::Error) -> &'static str {
    match e {
        iqvi_core::Error::Numeric(_) => "numeric",
        iqvi_core::Error::Regime(_) => "regime",
        iqvi_core::Error::DimensionMismatch { .. } => "dimension",
        _ => "invalid_input",
    }
}

#[derive(Serialize)]
struct EnvelopeSummary {
    coefficient: f64,
    epsilon: f64,
    checked: usize,
    skipped: usize,
    overall: bool,
}

#[derive(Serialize)]
struct LyapunovSummary {
    bound_fraction: f64,
    interior_count: usize,
}

#[derive(Serialize)]
struct OdeRunSummary {
    start: Vec<f64>,
    termination: OdeTermination,
    samples: usize,
    final_t: f64,
    final_norm: f64,
    final_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    envelope: Option<EnvelopeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    envelope_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lyapunov: Option<LyapunovSummary>,
}

#[derive(Serialize)]
struct IterRunSummary {
    start: Vec<f64>,
    termination: IterTermination,
    iterations: usize,
    final_norm: f64,
    final_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    apriori_bound_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contraction_rate: Option<f64>,
}

/// Looks for a reference solution with the exhaustive oracle when the spec
/// does not pin one. Only low dimensions are searched, and the candidate is
/// kept only when its residual is solution-grade.
fn derive_x_star(problem: &ProblemInstance) -> Option<Vec<f64>> {
    let dim = problem.dim();
    if dim > 2 {
        return None;
    }
    let lower = vec![-8.0; dim];
    let upper = vec![8.0; dim];
    let resolution = if dim == 1 { 1e-3 } else { 1e-2 };
    match grid_oracle(problem, &lower, &upper, resolution) {
        Ok((x, residual)) if residual <= 1e-4 => Some(x),
        _ => None,
    }
}

fn resolve_x_star(spec_x_star: &Option<Vec<f64>>, problem: &ProblemInstance) -> Option<Vec<f64>> {
    match spec_x_star {
        Some(x) => Some(x.clone()),
        None => derive_x_star(problem),
    }
}

struct OdeParams<'a> {
    starts: &'a [Vec<f64>],
    tol: f64,
    x_star: Option<Vec<f64>>,
    schedule: &'a LambdaSchedule,
    integrator: &'a iqvi_core::ode::IntegratorConfig,
}

fn run_check(
    part: &ProblemPart,
    schedule: &LambdaSchedule,
    window: (f64, f64),
    writer: &mut Writer,
) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    let c = &part.constants;

    let mut existence = check_existence(c);
    if let Some(range) = feasible_alpha_range(c.lipschitz, c.beta, c.kappa) {
        existence
            .derived
            .insert("feasible_alpha_lower".to_string(), range.lower);
    }
    let stability = check_stability(c, schedule);
    writer.write("check/constants.json", constants_json(c)?.as_bytes())?;
    writer.write("check/existence.json", report_bytes(&existence)?.as_slice())?;
    writer.write("check/stability.json", report_bytes(&stability)?.as_slice())?;
    match check_discrete(c, window.0, window.1) {
        Ok(discrete) => {
            writer.write("check/discrete.json", report_bytes(&discrete)?.as_slice())?;
            if !writer.quiet {
                println!(
                    "check: existence={} stability={} discrete={}",
                    existence.verdict, stability.verdict, discrete.verdict
                );
            }
        }
        Err(e) => {
            let artifact = ErrorArtifact {
                error: e.to_string(),
                kind: error_kind(&e),
            };
            writer.write_json("check/discrete.json", &artifact)?;
            outcome.record("check/discrete", &e);
        }
    }
    Ok(outcome)
}

fn constants_json(c: &ConstantsBundle) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(c)
        .map_err(|e| CliError::Io(format!("serializing constants: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn report_bytes(report: &iqvi_core::analysis::ConditionReport) -> Result<Vec<u8>, CliError> {
    let mut text = report.to_json();
    text.push('\n');
    Ok(text.into_bytes())
}

fn ode_state_series(trajectories: &[(usize, &Trajectory)]) -> Vec<Series> {
    let mut series = Vec::new();
    for (idx, traj) in trajectories {
        let dim = traj.final_sample().x.len();
        for j in 0..dim {
            series.push(Series {
                label: format!("run{idx}_x{}", j + 1),
                points: traj.samples.iter().map(|s| (s.t, s.x[j])).collect(),
            });
        }
    }
    series
}

fn ode_residual_series(trajectories: &[(usize, &Trajectory)]) -> Vec<Series> {
    trajectories
        .iter()
        .map(|(idx, traj)| Series {
            label: format!("run{idx}"),
            points: traj
                .samples
                .iter()
                .map(|s| (s.t, s.residual.max(1e-16).log10()))
                .collect(),
        })
        .collect()
}

fn iter_state_series(logs: &[(usize, &IterateLog)]) -> Vec<Series> {
    let mut series = Vec::new();
    for (idx, log) in logs {
        let dim = log.final_entry().x.len();
        for j in 0..dim {
            series.push(Series {
                label: format!("run{idx}_x{}", j + 1),
                points: log.entries.iter().map(|e| (e.n as f64, e.x[j])).collect(),
            });
        }
    }
    series
}

fn iter_residual_series(logs: &[(usize, &IterateLog)]) -> Vec<Series> {
    logs.iter()
        .map(|(idx, log)| Series {
            label: format!("run{idx}"),
            points: log
                .entries
                .iter()
                .map(|e| (e.n as f64, e.residual.max(1e-16).log10()))
                .collect(),
        })
        .collect()
}

fn run_solve_ode(
    spec: &ValidatedSpec,
    part: &ProblemPart,
    params: &OdeParams<'_>,
    prefix: &str,
    writer: &mut Writer,
) -> Result<(Outcome, Vec<OdeRunSummary>), CliError> {
    let mut outcome = Outcome::default();
    let mut summaries = Vec::new();
    let mut trajectories: Vec<(usize, Trajectory)> = Vec::new();

    for (i, x0) in params.starts.iter().enumerate() {
        let context = format!("{prefix}/run_{i:03}");
        match integrate(
            &part.instance,
            params.schedule,
            x0,
            params.integrator,
            params.tol,
            params.x_star.as_deref(),
        ) {
            Ok(traj) => {
                if traj.termination == OdeTermination::Diverged {
                    outcome.numeric.push(format!(
                        "{context}: trajectory diverged (state norm exceeded the configured radius)"
                    ));
                }
                let last = traj.final_sample();
                let mut summary = OdeRunSummary {
                    start: x0.clone(),
                    termination: traj.termination,
                    samples: traj.samples.len(),
                    final_t: last.t,
                    final_norm: norm(&last.x),
                    final_residual: last.residual,
                    final_dist: last.dist_to_solution,
                    envelope: None,
                    envelope_note: None,
                    lyapunov: None,
                };
                if let Some(xs) = params.x_star.as_deref() {
                    match rate_envelope(&traj, xs, &part.constants, params.schedule) {
                        Ok(report) => {
                            summary.envelope = Some(EnvelopeSummary {
                                coefficient: report.coefficient,
                                epsilon: report.epsilon,
                                checked: report.checked,
                                skipped: report.skipped,
                                overall: report.overall,
                            });
                        }
                        Err(e) => summary.envelope_note = Some(e.to_string()),
                    }
                    if let Ok(report) = lyapunov_series(&traj, xs, &part.constants, params.schedule)
                    {
                        summary.lyapunov = Some(LyapunovSummary {
                            bound_fraction: report.bound_fraction,
                            interior_count: report.interior_count,
                        });
                    }
                }
                if spec.output.csv {
                    writer.write(&format!("{context}.csv"), traj.to_csv().as_bytes())?;
                }
                if spec.output.json {
                    writer.write_json(&format!("{context}.json"), &summary)?;
                }
                summaries.push(summary);
                trajectories.push((i, traj));
            }
            Err(e) => {
                let artifact = ErrorArtifact {
                    error: e.to_string(),
                    kind: error_kind(&e),
                };
                writer.write_json(&format!("{prefix}/error_{i:03}.json"), &artifact)?;
                outcome.record(&context, &e);
            }
        }
    }

    if spec.output.svg && !trajectories.is_empty() {
        let refs: Vec<(usize, &Trajectory)> =
            trajectories.iter().map(|(i, t)| (*i, t)).collect();
        let kind = spec.output.plot.kind.unwrap_or(PlotKind::State);
        let (series, y_label) = match kind {
            PlotKind::State => (ode_state_series(&refs), "state"),
            PlotKind::Residual => (ode_residual_series(&refs), "log10 residual"),
        };
        let svg = plot::render(
            &series,
            "t",
            y_label,
            spec.output.plot.width,
            spec.output.plot.height,
        )?;
        writer.write(&format!("{prefix}/plot.svg"), svg.as_bytes())?;
    }
    Ok((outcome, summaries))
}

enum IterFamily<'a> {
    Explicit {
        gains: &'a iqvi_core::iteration::GainSequence,
        step_scale: f64,
        max_iter: usize,
        window: Option<(f64, f64)>,
    },
    Banach {
        max_iter: usize,
    },
    He {
        max_iter: usize,
    },
}

fn run_iter_family(
    spec: &ValidatedSpec,
    part: &ProblemPart,
    starts: &[Vec<f64>],
    tol: f64,
    x_star: &Option<Vec<f64>>,
    family: &IterFamily<'_>,
    prefix: &str,
    writer: &mut Writer,
) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    let mut logs: Vec<(usize, IterateLog)> = Vec::new();

    for (i, x0) in starts.iter().enumerate() {
        let context = format!("{prefix}/run_{i:03}");
        let result = match family {
            IterFamily::Explicit {
                gains,
                step_scale,
                max_iter,
                ..
            } => {
                let config = IterationConfig {
                    gains: (*gains).clone(),
                    step_scale: *step_scale,
                    tol,
                    max_iter: *max_iter,
                };
                iterate(&part.instance, &config, x0, x_star.as_deref())
            }
            IterFamily::Banach { max_iter } => {
                banach_iterate(&part.instance, x0, tol, *max_iter, x_star.as_deref())
            }
            IterFamily::He { max_iter } => {
                he_iterate(&part.instance, x0, tol, *max_iter, x_star.as_deref())
            }
        };
        match result {
            Ok(log) => {
                if log.termination == IterTermination::NumericFailure {
                    outcome
                        .numeric
                        .push(format!("{context}: iteration hit a non-finite state"));
                }
                let last = log.final_entry();
                let mut summary = IterRunSummary {
                    start: x0.clone(),
                    termination: log.termination,
                    iterations: last.n,
                    final_norm: norm(&last.x),
                    final_residual: last.residual,
                    final_dist: last.dist_to_solution,
                    theta: log.banach.as_ref().map(|b| b.theta),
                    apriori_bound_final: log.banach.as_ref().map(|b| b.apriori_bound(last.n)),
                    contraction_rate: match family {
                        IterFamily::He { .. } => he_rate(&part.constants).ok(),
                        _ => None,
                    },
                };
                if summary.theta.is_none() {
                    summary.apriori_bound_final = None;
                }
                if spec.output.csv {
                    writer.write(&format!("{context}.csv"), log.to_csv().as_bytes())?;
                }
                if spec.output.json {
                    writer.write_json(&format!("{context}.json"), &summary)?;
                }
                if let (IterFamily::Explicit { window: Some((a, b)), .. }, Some(xs)) =
                    (family, x_star.as_deref())
                {
                    match per_step_certificate(&log, xs, &part.constants, *a, *b) {
                        Ok(cert) => {
                            writer.write_json(&format!("{prefix}/certificate_{i:03}.json"), &cert)?;
                            if !cert.regime_valid {
                                outcome.regime.push(format!(
                                    "{context}: gains or window leave the certified regime; \
                                     ratios reported without pass/fail claims"
                                ));
                            } else if cert.per_step_pass == Some(false)
                                || cert.global_pass == Some(false)
                            {
                                outcome.numeric.push(format!(
                                    "{context}: contraction certificate failed"
                                ));
                            }
                        }
                        Err(e) => {
                            let artifact = ErrorArtifact {
                                error: e.to_string(),
                                kind: error_kind(&e),
                            };
                            writer.write_json(
                                &format!("{prefix}/certificate_{i:03}.json"),
                                &artifact,
                            )?;
                            outcome.record(&format!("{context} certificate"), &e);
                        }
                    }
                }
                logs.push((i, log));
            }
            Err(e) => {
                let artifact = ErrorArtifact {
                    error: e.to_string(),
                    kind: error_kind(&e),
                };
                writer.write_json(&format!("{prefix}/error_{i:03}.json"), &artifact)?;
                outcome.record(&context, &e);
            }
        }
    }

    if spec.output.svg && !logs.is_empty() {
        let refs: Vec<(usize, &IterateLog)> = logs.iter().map(|(i, l)| (*i, l)).collect();
        let kind = spec.output.plot.kind.unwrap_or(PlotKind::Residual);
        let (series, y_label) = match kind {
            PlotKind::State => (iter_state_series(&refs), "state"),
            PlotKind::Residual => (iter_residual_series(&refs), "log10 residual"),
        };
        let svg = plot::render(
            &series,
            "n",
            y_label,
            spec.output.plot.width,
            spec.output.plot.height,
        )?;
        writer.write(&format!("{prefix}/plot.svg"), svg.as_bytes())?;
    }
    Ok(outcome)
}

fn run_certify(
    part: &ProblemPart,
    x: &[f64],
    seed: u64,
    samples: usize,
    tol: f64,
    writer: &mut Writer,
) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    match certify_solution(&part.instance, x, seed, samples, tol) {
        Ok(cert) => {
            writer.write_json("certify/certificate.json", &cert)?;
            if !writer.quiet {
                println!("certify: {:?}", cert.verdict);
            }
        }
        Err(e) => {
            let artifact = ErrorArtifact {
                error: e.to_string(),
                kind: error_kind(&e),
            };
            writer.write_json("certify/error.json", &artifact)?;
            outcome.record("certify", &e);
        }
    }
    Ok(outcome)
}

/// Stored expectations for the two bundled instances: every run must end
/// within `tolerance` of the known solution at the origin.
#[derive(Serialize)]
struct ComparisonEntry {
    instance: &'static str,
    run: usize,
    final_norm: f64,
    final_residual: f64,
    expected_max: f64,
    ok: bool,
}

#[derive(Serialize)]
struct Comparison {
    tolerance: f64,
    entries: Vec<ComparisonEntry>,
    all_ok: bool,
}

const REPRODUCE_TOL: f64 = 1e-6;

fn run_reproduce(writer: &mut Writer) -> Result<Outcome, CliError> {
    let mut outcome = Outcome::default();
    let mut entries = Vec::new();

    for (name, text) in [
        ("ball_translation", BALL_TRANSLATION_ODE),
        ("scalar_shift", SCALAR_SHIFT_ODE),
    ] {
        let bundled = parse_spec(text)?;
        let part = bundled
            .problem
            .as_ref()
            .expect("bundled solve specs carry a problem");
        let ModeConfig::SolveOde {
            starts,
            tol,
            x_star,
            schedule,
            integrator,
        } = &bundled.mode
        else {
            return Err(CliError::Io(format!(
                "bundled spec {name} is not a solve-ode spec"
            )));
        };
        let params = OdeParams {
            starts,
            tol: *tol,
            x_star: resolve_x_star(x_star, &part.instance),
            schedule,
            integrator,
        };
        let prefix = format!("reproduce/{name}");
        let (sub_outcome, summaries) =
            run_solve_ode(&bundled, part, &params, &prefix, writer)?;
        outcome.merge(sub_outcome);
        for (run, s) in summaries.iter().enumerate() {
            let ok = s.final_norm <= REPRODUCE_TOL && s.final_residual <= REPRODUCE_TOL;
            entries.push(ComparisonEntry {
                instance: name,
                run,
                final_norm: s.final_norm,
                final_residual: s.final_residual,
                expected_max: REPRODUCE_TOL,
                ok,
            });
        }
    }

    let all_ok = !entries.is_empty() && entries.iter().all(|e| e.ok);
    let comparison = Comparison {
        tolerance: REPRODUCE_TOL,
        entries,
        all_ok,
    };
    writer.write_json("reproduce/comparison.json", &comparison)?;
    if !all_ok {
        outcome.numeric.push(
            "reproduce: stored expectations for the bundled instances were not met".to_string(),
        );
    }
    if !writer.quiet {
        println!("reproduce: all_ok={all_ok}");
    }
    Ok(outcome)
}

/// Executes the spec, writing all artifacts through `writer`.
pub fn execute(
    spec: &ValidatedSpec,
    writer: &mut Writer,
    seed_override: Option<u64>,
) -> Result<Outcome, CliError> {
    // Echo the validated spec so every output tree is self-describing.
    writer.write_json("spec.json", &spec.raw)?;
    match &spec.mode {
        ModeConfig::Check { schedule, window } => {
            let part = expect_problem(spec)?;
            run_check(part, schedule, *window, writer)
        }
        ModeConfig::SolveOde {
            starts,
            tol,
            x_star,
            schedule,
            integrator,
        } => {
            let part = expect_problem(spec)?;
            let params = OdeParams {
                starts,
                tol: *tol,
                x_star: resolve_x_star(x_star, &part.instance),
                schedule,
                integrator,
            };
            let (outcome, _) = run_solve_ode(spec, part, &params, "ode", writer)?;
            Ok(outcome)
        }
        ModeConfig::SolveIter {
            starts,
            tol,
            x_star,
            gains,
            step_scale,
            max_iter,
            window,
        } => {
            let part = expect_problem(spec)?;
            let x_star = resolve_x_star(x_star, &part.instance);
            let family = IterFamily::Explicit {
                gains,
                step_scale: *step_scale,
                max_iter: *max_iter,
                window: *window,
            };
            run_iter_family(spec, part, starts, *tol, &x_star, &family, "iter", writer)
        }
        ModeConfig::SolveBanach {
            starts,
            tol,
            x_star,
            max_iter,
        } => {
            let part = expect_problem(spec)?;
            let x_star = resolve_x_star(x_star, &part.instance);
            let family = IterFamily::Banach { max_iter: *max_iter };
            run_iter_family(spec, part, starts, *tol, &x_star, &family, "banach", writer)
        }
        ModeConfig::SolveHe {
            starts,
            tol,
            x_star,
            max_iter,
        } => {
            let part = expect_problem(spec)?;
            let x_star = resolve_x_star(x_star, &part.instance);
            let family = IterFamily::He { max_iter: *max_iter };
            run_iter_family(spec, part, starts, *tol, &x_star, &family, "he", writer)
        }
        ModeConfig::Certify {
            x,
            seed,
            samples,
            tol,
        } => {
            let part = expect_problem(spec)?;
            run_certify(
                part,
                x,
                seed_override.unwrap_or(*seed),
                *samples,
                *tol,
                writer,
            )
        }
        ModeConfig::Reproduce => run_reproduce(writer),
    }
}

fn expect_problem(spec: &ValidatedSpec) -> Result<&ProblemPart, CliError> {
    spec.problem
        .as_ref()
        .ok_or_else(|| CliError::Validation(vec!["/problem: missing required field".into()]))
}
