//! Run-spec parsing: one JSON document describes one reproducible run.
//! Validation walks the whole document and reports every offending path
//! (JSON-pointer style) instead of stopping at the first problem; unknown
//! keys are rejected everywhere.

use crate::CliError;
use iqvi_core::analysis::ConstantsBundle;
use iqvi_core::iteration::GainSequence;
use iqvi_core::ode::{IntegratorConfig, Method};
use iqvi_core::problem::{LambdaSchedule, Mapping, MovingSet, ProblemInstance, ScalarFn};
use iqvi_core::sets::ConvexSet;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    State,
    Residual,
}

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub kind: Option<PlotKind>,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            kind: None,
            width: 640,
            height: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub directory: Option<String>,
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
    pub plot: PlotOptions,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: None,
            csv: true,
            json: true,
            svg: true,
            plot: PlotOptions::default(),
        }
    }
}

#[derive(Debug)]
pub enum ModeConfig {
    Check {
        schedule: LambdaSchedule,
        window: (f64, f64),
    },
    SolveOde {
        starts: Vec<Vec<f64>>,
        tol: f64,
        x_star: Option<Vec<f64>>,
        schedule: LambdaSchedule,
        integrator: IntegratorConfig,
    },
    SolveIter {
        starts: Vec<Vec<f64>>,
        tol: f64,
        x_star: Option<Vec<f64>>,
        gains: GainSequence,
        step_scale: f64,
        max_iter: usize,
        window: Option<(f64, f64)>,
    },
    SolveBanach {
        starts: Vec<Vec<f64>>,
        tol: f64,
        x_star: Option<Vec<f64>>,
        max_iter: usize,
    },
    SolveHe {
        starts: Vec<Vec<f64>>,
        tol: f64,
        x_star: Option<Vec<f64>>,
        max_iter: usize,
    },
    Certify {
        x: Vec<f64>,
        seed: u64,
        samples: usize,
        tol: f64,
    },
    Reproduce,
}

impl ModeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Check { .. } => "check",
            Self::SolveOde { .. } => "solve-ode",
            Self::SolveIter { .. } => "solve-iter",
            Self::SolveBanach { .. } => "solve-banach",
            Self::SolveHe { .. } => "solve-he",
            Self::Certify { .. } => "certify",
            Self::Reproduce => "reproduce",
        }
    }
}

#[derive(Debug)]
pub struct ProblemPart {
    pub instance: ProblemInstance,
    pub constants: ConstantsBundle,
}

#[derive(Debug)]
pub struct ValidatedSpec {
    /// The parsed document as given; re-serializing and re-parsing this
    /// value must reproduce the spec field-exactly.
    pub raw: Value,
    pub mode: ModeConfig,
    pub problem: Option<ProblemPart>,
    pub output: OutputSpec,
}

/// Collects every validation error with its JSON-pointer path.
#[derive(Default)]
struct Ctx {
    errors: Vec<String>,
}

impl Ctx {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn obj<'a>(
        &mut self,
        v: &'a Value,
        path: &str,
        allowed: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => {
                for k in m.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.err(&format!("{path}/{k}"), "unknown key");
                    }
                }
                Some(m)
            }
            None => {
                self.err(path, "expected an object");
                None
            }
        }
    }

    fn req_val<'a>(
        &mut self,
        m: &'a Map<String, Value>,
        path: &str,
        key: &str,
    ) -> Option<&'a Value> {
        let v = m.get(key);
        if v.is_none() {
            self.err(&format!("{path}/{key}"), "missing required field");
        }
        v
    }

    fn f64(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(path, "expected a finite number");
                None
            }
        }
    }

    fn usize(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.err(path, "expected a nonnegative integer");
                None
            }
        }
    }

    fn u64(&mut self, v: &Value, path: &str) -> Option<u64> {
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.err(path, "expected a nonnegative integer");
                None
            }
        }
    }

    fn str_owned(&mut self, v: &Value, path: &str) -> Option<String> {
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.err(path, "expected a string");
                None
            }
        }
    }

    fn vec_f64(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.err(path, "expected an array of numbers");
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            out.push(self.f64(item, &format!("{path}/{i}"))?);
        }
        Some(out)
    }

    fn req_f64(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        let v = self.req_val(m, path, key)?.clone();
        self.f64(&v, &format!("{path}/{key}"))
    }

    fn req_usize(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<usize> {
        let v = self.req_val(m, path, key)?.clone();
        self.usize(&v, &format!("{path}/{key}"))
    }

    fn req_u64(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<u64> {
        let v = self.req_val(m, path, key)?.clone();
        self.u64(&v, &format!("{path}/{key}"))
    }

    fn req_str(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<String> {
        let v = self.req_val(m, path, key)?.clone();
        self.str_owned(&v, &format!("{path}/{key}"))
    }

    fn req_vec_f64(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.req_val(m, path, key)?.clone();
        self.vec_f64(&v, &format!("{path}/{key}"))
    }

    /// Maps a core constructor error onto a spec path.
    fn core<T>(&mut self, path: &str, r: iqvi_core::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.err(path, e);
                None
            }
        }
    }
}

fn scalar_fn(ctx: &mut Ctx, v: &Value, path: &str) -> Option<ScalarFn> {
    let kinds = ["linear", "inv_one_plus_abs"];
    let m = ctx.obj(v, path, &["kind", "slope", "intercept"])?;
    let kind = ctx.req_str(m, path, "kind")?;
    match kind.as_str() {
        "linear" => {
            let slope = ctx.req_f64(m, path, "slope")?;
            let intercept = ctx.req_f64(m, path, "intercept")?;
            ctx.core(path, ScalarFn::linear(slope, intercept))
        }
        "inv_one_plus_abs" => {
            for extra in ["slope", "intercept"] {
                if m.contains_key(extra) {
                    ctx.err(&format!("{path}/{extra}"), "not a field of inv_one_plus_abs");
                }
            }
            Some(ScalarFn::InvOnePlusAbs)
        }
        other => {
            ctx.err(
                &format!("{path}/kind"),
                format!("unknown function kind {other:?}, expected one of {kinds:?}"),
            );
            None
        }
    }
}

fn mapping(ctx: &mut Ctx, v: &Value, path: &str, dim: usize) -> Option<Mapping> {
    let m = ctx.obj(v, path, &["kind", "factor", "matrix", "shift", "functions"])?;
    let kind = ctx.req_str(m, path, "kind")?;
    match kind.as_str() {
        "scaled_identity" => {
            let factor = ctx.req_f64(m, path, "factor")?;
            ctx.core(path, Mapping::scaled_identity(dim, factor))
        }
        "affine" => {
            let mv = ctx.req_val(m, path, "matrix")?;
            let rows = match mv.as_array() {
                Some(rows) => rows.clone(),
                None => {
                    ctx.err(&format!("{path}/matrix"), "expected an array of rows");
                    return None;
                }
            };
            let mut matrix = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                matrix.push(ctx.vec_f64(row, &format!("{path}/matrix/{i}"))?);
            }
            let shift = ctx.req_vec_f64(m, path, "shift")?;
            let built = ctx.core(path, Mapping::affine(matrix, shift))?;
            if built.dim() != dim {
                ctx.err(path, format!("mapping dimension {} != problem dim {dim}", built.dim()));
                return None;
            }
            Some(built)
        }
        "componentwise" => {
            let fv = ctx.req_val(m, path, "functions")?;
            let funcs = match fv.as_array() {
                Some(f) => f.clone(),
                None => {
                    ctx.err(&format!("{path}/functions"), "expected an array");
                    return None;
                }
            };
            if funcs.len() != dim {
                ctx.err(
                    &format!("{path}/functions"),
                    format!("{} functions for problem dim {dim}", funcs.len()),
                );
                return None;
            }
            let mut built = Vec::with_capacity(funcs.len());
            for (i, f) in funcs.iter().enumerate() {
                built.push(scalar_fn(ctx, f, &format!("{path}/functions/{i}"))?);
            }
            ctx.core(path, Mapping::componentwise(built))
        }
        other => {
            ctx.err(&format!("{path}/kind"), format!("unknown mapping kind {other:?}"));
            None
        }
    }
}

fn convex_set(ctx: &mut Ctx, v: &Value, path: &str, dim: usize) -> Option<ConvexSet> {
    let m = ctx.obj(
        v,
        path,
        &["kind", "center", "radius", "lower", "upper", "normal", "offset", "dim", "scale"],
    )?;
    let kind = ctx.req_str(m, path, "kind")?;
    let set = match kind.as_str() {
        "ball" => {
            let center = ctx.req_vec_f64(m, path, "center")?;
            let radius = ctx.req_f64(m, path, "radius")?;
            ctx.core(path, ConvexSet::ball(center, radius))
        }
        "box" => {
            let lower = ctx.req_vec_f64(m, path, "lower")?;
            let upper = ctx.req_vec_f64(m, path, "upper")?;
            ctx.core(path, ConvexSet::hyper_box(lower, upper))
        }
        "halfspace" => {
            let normal = ctx.req_vec_f64(m, path, "normal")?;
            let offset = ctx.req_f64(m, path, "offset")?;
            ctx.core(path, ConvexSet::halfspace(normal, offset))
        }
        "simplex" => {
            let d = ctx.req_usize(m, path, "dim")?;
            let scale = ctx.req_f64(m, path, "scale")?;
            ctx.core(path, ConvexSet::simplex(d, scale))
        }
        "interval" => {
            let lower = ctx.req_f64(m, path, "lower")?;
            let upper = ctx.req_f64(m, path, "upper")?;
            ctx.core(path, ConvexSet::interval(lower, upper))
        }
        other => {
            ctx.err(&format!("{path}/kind"), format!("unknown set kind {other:?}"));
            None
        }
    }?;
    if set.dim() != dim {
        ctx.err(path, format!("set dimension {} != problem dim {dim}", set.dim()));
        return None;
    }
    Some(set)
}

fn moving_set(ctx: &mut Ctx, v: &Value, path: &str, dim: usize) -> Option<MovingSet> {
    let m = ctx.obj(v, path, &["kind", "shift", "base"])?;
    let kind = ctx.req_str(m, path, "kind")?;
    match kind.as_str() {
        "translation" => {
            let sv = ctx.req_val(m, path, "shift")?.clone();
            let shift = mapping(ctx, &sv, &format!("{path}/shift"), dim)?;
            let bv = ctx.req_val(m, path, "base")?.clone();
            let base = convex_set(ctx, &bv, &format!("{path}/base"), dim)?;
            ctx.core(path, MovingSet::translation(shift, base))
        }
        "constant" => {
            if m.contains_key("shift") {
                ctx.err(&format!("{path}/shift"), "not a field of a constant set");
            }
            let bv = ctx.req_val(m, path, "base")?.clone();
            let base = convex_set(ctx, &bv, &format!("{path}/base"), dim)?;
            Some(MovingSet::constant(base))
        }
        other => {
            ctx.err(&format!("{path}/kind"), format!("unknown moving-set kind {other:?}"));
            None
        }
    }
}

fn schedule(ctx: &mut Ctx, v: &Value, path: &str) -> Option<LambdaSchedule> {
    let m = ctx.obj(v, path, &["kind", "value", "a", "b", "power"])?;
    let kind = ctx.req_str(m, path, "kind")?;
    match kind.as_str() {
        "constant" => {
            let value = ctx.req_f64(m, path, "value")?;
            ctx.core(path, LambdaSchedule::constant(value))
        }
        "polynomial" => {
            let a = ctx.req_f64(m, path, "a")?;
            let b = ctx.req_f64(m, path, "b")?;
            let power = ctx.req_f64(m, path, "power")?;
            ctx.core(path, LambdaSchedule::polynomial(a, b, power))
        }
        other => {
            ctx.err(&format!("{path}/kind"), format!("unknown schedule kind {other:?}"));
            None
        }
    }
}

fn gain_sequence(ctx: &mut Ctx, v: &Value, path: &str) -> Option<GainSequence> {
    let m = ctx.obj(v, path, &["kind", "value", "values", "low", "high", "seed"])?;
    let kind = ctx.req_str(m, path, "kind")?;
    match kind.as_str() {
        "constant" => {
            let value = ctx.req_f64(m, path, "value")?;
            ctx.core(path, GainSequence::constant(value))
        }
        "cyclic" => {
            let values = ctx.req_vec_f64(m, path, "values")?;
            ctx.core(path, GainSequence::cyclic(values))
        }
        "seeded_uniform" => {
            let low = ctx.req_f64(m, path, "low")?;
            let high = ctx.req_f64(m, path, "high")?;
            let seed = ctx.req_u64(m, path, "seed")?;
            ctx.core(path, GainSequence::seeded_uniform(low, high, seed))
        }
        other => {
            ctx.err(&format!("{path}/kind"), format!("unknown gain-sequence kind {other:?}"));
            None
        }
    }
}

fn integrator(ctx: &mut Ctx, v: &Value, path: &str) -> Option<IntegratorConfig> {
    let m = ctx.obj(
        v,
        path,
        &["method", "base_step", "t0", "t_end", "record_every", "stiffness_cap", "divergence_radius"],
    )?;
    let mut cfg = IntegratorConfig::default();
    if let Some(mv) = m.get("method") {
        let name = ctx.str_owned(mv, &format!("{path}/method"))?;
        match name.as_str() {
            "rk4" => cfg.method = Method::Rk4,
            "euler" => cfg.method = Method::ExplicitEuler,
            other => {
                ctx.err(&format!("{path}/method"), format!("unknown method {other:?}"));
                return None;
            }
        }
    }
    if let Some(x) = m.get("base_step") {
        cfg.base_step = ctx.f64(x, &format!("{path}/base_step"))?;
    }
    if let Some(x) = m.get("t0") {
        cfg.t0 = ctx.f64(x, &format!("{path}/t0"))?;
    }
    if let Some(x) = m.get("t_end") {
        cfg.t_end = ctx.f64(x, &format!("{path}/t_end"))?;
    }
    if let Some(x) = m.get("record_every") {
        cfg.record_every = ctx.usize(x, &format!("{path}/record_every"))?;
    }
    if let Some(x) = m.get("stiffness_cap") {
        cfg.stiffness_cap = ctx.f64(x, &format!("{path}/stiffness_cap"))?;
    }
    if let Some(x) = m.get("divergence_radius") {
        cfg.divergence_radius = ctx.f64(x, &format!("{path}/divergence_radius"))?;
    }
    ctx.core(path, cfg.validate().map(|()| cfg))
}

fn window(ctx: &mut Ctx, v: &Value, path: &str) -> Option<(f64, f64)> {
    let m = ctx.obj(v, path, &["a", "b"])?;
    let a = ctx.req_f64(m, path, "a")?;
    let b = ctx.req_f64(m, path, "b")?;
    if !(a > 0.0 && a < b) {
        ctx.err(path, format!("gain window must satisfy 0 < a < b, got ({a}, {b})"));
        return None;
    }
    Some((a, b))
}

fn starts(ctx: &mut Ctx, m: &Map<String, Value>, path: &str, dim: usize) -> Option<Vec<Vec<f64>>> {
    let v = ctx.req_val(m, path, "x0")?;
    let arr = match v.as_array() {
        Some(a) if !a.is_empty() => a.clone(),
        Some(_) => {
            ctx.err(&format!("{path}/x0"), "needs at least one starting point");
            return None;
        }
        None => {
            ctx.err(&format!("{path}/x0"), "expected an array of starting points");
            return None;
        }
    };
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let p = ctx.vec_f64(item, &format!("{path}/x0/{i}"))?;
        if dim > 0 && p.len() != dim {
            ctx.err(
                &format!("{path}/x0/{i}"),
                format!("point has {} coordinates, problem dim is {dim}", p.len()),
            );
            return None;
        }
        out.push(p);
    }
    Some(out)
}

fn point(ctx: &mut Ctx, v: &Value, path: &str, dim: usize) -> Option<Vec<f64>> {
    let p = ctx.vec_f64(v, path)?;
    if dim > 0 && p.len() != dim {
        ctx.err(path, format!("point has {} coordinates, problem dim is {dim}", p.len()));
        return None;
    }
    Some(p)
}

fn tolerance(ctx: &mut Ctx, m: &Map<String, Value>, path: &str) -> Option<f64> {
    let tol = ctx.req_f64(m, path, "tol")?;
    if tol < 0.0 {
        ctx.err(&format!("{path}/tol"), "must be nonnegative");
        return None;
    }
    Some(tol)
}

fn optional_x_star(
    ctx: &mut Ctx,
    m: &Map<String, Value>,
    path: &str,
    dim: usize,
) -> Option<Option<Vec<f64>>> {
    match m.get("x_star") {
        Some(v) => {
            let v = v.clone();
            Some(Some(point(ctx, &v, &format!("{path}/x_star"), dim)?))
        }
        None => Some(None),
    }
}

fn problem_part(ctx: &mut Ctx, v: &Value, path: &str) -> Option<ProblemPart> {
    let m = ctx.obj(v, path, &["dim", "alpha", "mapping", "moving_set", "constants"])?;
    let dim = ctx.req_usize(m, path, "dim")?;
    if dim == 0 {
        ctx.err(&format!("{path}/dim"), "must be at least 1");
        return None;
    }
    let alpha = ctx.req_f64(m, path, "alpha")?;
    let fv = ctx.req_val(m, path, "mapping")?.clone();
    let f = mapping(ctx, &fv, &format!("{path}/mapping"), dim)?;
    let pv = ctx.req_val(m, path, "moving_set")?.clone();
    let phi = moving_set(ctx, &pv, &format!("{path}/moving_set"), dim)?;
    let instance = ctx.core(&format!("{path}/alpha"), ProblemInstance::new(f, phi, alpha))?;
    let mut constants = ConstantsBundle::from_problem(&instance);
    if let Some(cv) = m.get("constants") {
        let cv = cv.clone();
        let cpath = format!("{path}/constants");
        let cm = ctx.obj(&cv, &cpath, &["lipschitz", "beta", "kappa"])?.clone();
        if let Some(x) = cm.get("lipschitz") {
            constants.lipschitz = ctx.f64(x, &format!("{cpath}/lipschitz"))?;
        }
        if let Some(x) = cm.get("beta") {
            constants.beta = ctx.f64(x, &format!("{cpath}/beta"))?;
        }
        if let Some(x) = cm.get("kappa") {
            let k = ctx.f64(x, &format!("{cpath}/kappa"))?;
            constants.kappa = k;
            constants.shift_lipschitz = k;
        }
        constants = ctx.core(
            &cpath,
            ConstantsBundle::new(
                constants.lipschitz,
                constants.beta,
                constants.kappa,
                constants.shift_lipschitz,
                constants.alpha,
            ),
        )?;
    }
    Some(ProblemPart { instance, constants })
}

fn output_spec(ctx: &mut Ctx, v: &Value, path: &str) -> Option<OutputSpec> {
    let m = ctx.obj(v, path, &["directory", "formats", "plot"])?;
    let mut out = OutputSpec::default();
    if let Some(d) = m.get("directory") {
        out.directory = Some(ctx.str_owned(d, &format!("{path}/directory"))?);
    }
    if let Some(f) = m.get("formats") {
        let arr = match f.as_array() {
            Some(a) => a.clone(),
            None => {
                ctx.err(&format!("{path}/formats"), "expected an array of format names");
                return None;
            }
        };
        out.csv = false;
        out.json = false;
        out.svg = false;
        for (i, item) in arr.iter().enumerate() {
            let name = ctx.str_owned(item, &format!("{path}/formats/{i}"))?;
            match name.as_str() {
                "csv" => out.csv = true,
                "json" => out.json = true,
                "svg" => out.svg = true,
                other => {
                    ctx.err(
                        &format!("{path}/formats/{i}"),
                        format!("unknown format {other:?}, expected csv, json, or svg"),
                    );
                    return None;
                }
            }
        }
    }
    if let Some(p) = m.get("plot") {
        let p = p.clone();
        let ppath = format!("{path}/plot");
        let pm = ctx.obj(&p, &ppath, &["kind", "width", "height"])?.clone();
        if let Some(k) = pm.get("kind") {
            let name = ctx.str_owned(k, &format!("{ppath}/kind"))?;
            out.plot.kind = match name.as_str() {
                "state" => Some(PlotKind::State),
                "residual" => Some(PlotKind::Residual),
                other => {
                    ctx.err(&format!("{ppath}/kind"), format!("unknown plot kind {other:?}"));
                    return None;
                }
            };
        }
        for (key, slot) in [("width", &mut out.plot.width), ("height", &mut out.plot.height)] {
            if let Some(x) = pm.get(key) {
                let v = ctx.usize(x, &format!("{ppath}/{key}"))?;
                if !(100..=4000).contains(&v) {
                    ctx.err(&format!("{ppath}/{key}"), "must lie in [100, 4000]");
                    return None;
                }
                *slot = v as u32;
            }
        }
    }
    Some(out)
}

const MODES: [&str; 7] = [
    "check",
    "solve-ode",
    "solve-iter",
    "solve-banach",
    "solve-he",
    "certify",
    "reproduce",
];

pub fn parse_spec(text: &str) -> Result<ValidatedSpec, CliError> {
    let raw: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Validation(vec![format!("/: malformed JSON: {e}")]))?;
    let mut ctx = Ctx::default();
    let spec = build(&mut ctx, &raw);
    if !ctx.errors.is_empty() {
        return Err(CliError::Validation(ctx.errors));
    }
    match spec {
        Some((mode, problem, output)) => Ok(ValidatedSpec { raw, mode, problem, output }),
        // All failure paths record an error, so this is unreachable; keep a
        // defensive message rather than a panic.
        None => Err(CliError::Validation(vec!["/: invalid spec".into()])),
    }
}

type Built = (ModeConfig, Option<ProblemPart>, OutputSpec);

fn build(ctx: &mut Ctx, raw: &Value) -> Option<Built> {
    let top = ctx.obj(raw, "", &["mode", "problem", "solver", "output"])?;
    let mode_str = ctx.req_str(top, "", "mode")?;
    if !MODES.contains(&mode_str.as_str()) {
        ctx.err("/mode", format!("unknown mode {mode_str:?}, expected one of {MODES:?}"));
        return None;
    }
    let output = match top.get("output") {
        Some(v) => {
            let v = v.clone();
            output_spec(ctx, &v, "/output")?
        }
        None => OutputSpec::default(),
    };

    if mode_str == "reproduce" {
        for key in ["problem", "solver"] {
            if top.contains_key(key) {
                ctx.err(&format!("/{key}"), "reproduce takes no problem or solver section");
            }
        }
        if !ctx.errors.is_empty() {
            return None;
        }
        return Some((ModeConfig::Reproduce, None, output));
    }

    // Problem and solver sections are validated independently so one bad
    // section cannot hide errors in the other. When the problem fails to
    // build, solver dimension checks fall back on the raw `dim` field
    // (sentinel 0 = skip length checks).
    let problem = match top.get("problem") {
        Some(pv) => {
            let pv = pv.clone();
            problem_part(ctx, &pv, "/problem")
        }
        None => {
            ctx.err("/problem", "missing required field");
            None
        }
    };
    let dim_hint = raw
        .pointer("/problem/dim")
        .and_then(Value::as_u64)
        .map(|d| d as usize);
    let dim = problem
        .as_ref()
        .map(|p| p.instance.dim())
        .or(dim_hint)
        .unwrap_or(0);
    let solver = match top.get("solver") {
        Some(sv) => {
            let sv = sv.clone();
            parse_solver(ctx, &mode_str, &sv, dim)
        }
        None => {
            ctx.err("/solver", "missing required field");
            None
        }
    };
    match (problem, solver) {
        (Some(p), Some(mode)) => Some((mode, Some(p), output)),
        _ => None,
    }
}

fn parse_solver(ctx: &mut Ctx, mode_str: &str, sv: &Value, dim: usize) -> Option<ModeConfig> {
    let path = "/solver";
    let mode = match mode_str {
        "check" => {
            let m = ctx.obj(sv, path, &["schedule", "window"])?.clone();
            let schedv = ctx.req_val(&m, path, "schedule")?.clone();
            let windv = ctx.req_val(&m, path, "window")?.clone();
            let sched = schedule(ctx, &schedv, "/solver/schedule")?;
            let win = window(ctx, &windv, "/solver/window")?;
            ModeConfig::Check { schedule: sched, window: win }
        }
        "solve-ode" => {
            let m = ctx.obj(sv, path, &["x0", "tol", "x_star", "schedule", "integrator"])?.clone();
            let starts = starts(ctx, &m, path, dim)?;
            let tol = tolerance(ctx, &m, path)?;
            let x_star = optional_x_star(ctx, &m, path, dim)?;
            let schedv = ctx.req_val(&m, path, "schedule")?.clone();
            let sched = schedule(ctx, &schedv, "/solver/schedule")?;
            let integ = match m.get("integrator") {
                Some(v) => integrator(ctx, v, "/solver/integrator")?,
                None => IntegratorConfig::default(),
            };
            ModeConfig::SolveOde { starts, tol, x_star, schedule: sched, integrator: integ }
        }
        "solve-iter" => {
            let m = ctx
                .obj(sv, path, &["x0", "tol", "x_star", "lambda_seq", "iteration", "window"])?
                .clone();
            let starts = starts(ctx, &m, path, dim)?;
            let tol = tolerance(ctx, &m, path)?;
            let x_star = optional_x_star(ctx, &m, path, dim)?;
            let gv = ctx.req_val(&m, path, "lambda_seq")?.clone();
            let gains = gain_sequence(ctx, &gv, "/solver/lambda_seq")?;
            let ipath = "/solver/iteration";
            let iv = ctx.req_val(&m, path, "iteration")?.clone();
            let im = ctx.obj(&iv, ipath, &["step_scale", "max_iter"])?.clone();
            let step_scale = match im.get("step_scale") {
                Some(v) => {
                    let s = ctx.f64(v, &format!("{ipath}/step_scale"))?;
                    if s <= 0.0 {
                        ctx.err(&format!("{ipath}/step_scale"), "must be positive");
                        return None;
                    }
                    s
                }
                None => 1.0,
            };
            let max_iter = ctx.req_usize(&im, ipath, "max_iter")?;
            if max_iter == 0 {
                ctx.err(&format!("{ipath}/max_iter"), "must be at least 1");
                return None;
            }
            let win = match m.get("window") {
                Some(v) => {
                    let v = v.clone();
                    Some(window(ctx, &v, "/solver/window")?)
                }
                None => None,
            };
            ModeConfig::SolveIter { starts, tol, x_star, gains, step_scale, max_iter, window: win }
        }
        "solve-banach" | "solve-he" => {
            let m = ctx.obj(sv, path, &["x0", "tol", "x_star", "max_iter"])?.clone();
            let starts = starts(ctx, &m, path, dim)?;
            let tol = tolerance(ctx, &m, path)?;
            let x_star = optional_x_star(ctx, &m, path, dim)?;
            let max_iter = ctx.req_usize(&m, path, "max_iter")?;
            if max_iter == 0 {
                ctx.err("/solver/max_iter", "must be at least 1");
                return None;
            }
            if mode_str == "solve-banach" {
                ModeConfig::SolveBanach { starts, tol, x_star, max_iter }
            } else {
                ModeConfig::SolveHe { starts, tol, x_star, max_iter }
            }
        }
        "certify" => {
            let m = ctx.obj(sv, path, &["x", "seed", "samples", "tol"])?.clone();
            let xv = ctx.req_val(&m, path, "x")?.clone();
            let x = point(ctx, &xv, "/solver/x", dim)?;
            let seed = match m.get("seed") {
                Some(v) => ctx.u64(v, "/solver/seed")?,
                None => 0,
            };
            let samples = match m.get("samples") {
                Some(v) => ctx.usize(v, "/solver/samples")?,
                None => 64,
            };
            let tol = tolerance(ctx, &m, path)?;
            if tol == 0.0 {
                ctx.err("/solver/tol", "must be positive for certification");
                return None;
            }
            ModeConfig::Certify { x, seed, samples, tol }
        }
        _ => unreachable!("mode list is checked above"),
    };
    Some(mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BALL_ODE: &str = include_str!("../specs/ball_translation_ode.json");
    const BALL_CHECK: &str = include_str!("../specs/ball_translation_check.json");
    const SCALAR_ODE: &str = include_str!("../specs/scalar_shift_ode.json");

    #[test]
    fn bundled_specs_validate() {
        for (name, text) in [
            ("ball_translation_ode", BALL_ODE),
            ("ball_translation_check", BALL_CHECK),
            ("scalar_shift_ode", SCALAR_ODE),
        ] {
            let spec = parse_spec(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(spec.problem.is_some());
        }
        let ball = parse_spec(BALL_ODE).unwrap();
        assert_eq!(ball.mode.name(), "solve-ode");
        let part = ball.problem.unwrap();
        assert_eq!(part.instance.dim(), 3);
        assert_eq!(part.constants.lipschitz, 2.0);
        assert_eq!(part.constants.kappa, 0.25);
        match &ball.mode {
            ModeConfig::SolveOde { starts, .. } => assert_eq!(starts.len(), 4),
            _ => unreachable!(),
        }
    }

    #[test]
    fn negative_alpha_is_rejected_at_its_path() {
        let text = BALL_CHECK.replace("\"alpha\": 2.0", "\"alpha\": -1.0");
        let err = parse_spec(&text).unwrap_err();
        match err {
            CliError::Validation(errors) => {
                assert!(
                    errors.iter().any(|e| e.starts_with("/problem/alpha")),
                    "{errors:?}"
                );
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let err = parse_spec(r#"{"mode": "solve-everything"}"#).unwrap_err();
        match err {
            CliError::Validation(errors) => {
                assert!(errors.iter().any(|e| e.starts_with("/mode")), "{errors:?}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn all_errors_are_collected_with_paths() {
        // Three independent problems: bad alpha, an unknown key, and a bad
        // schedule kind. All three paths must be reported at once.
        let text = r#"{
            "mode": "check",
            "problem": {
                "dim": 1,
                "alpha": -2.0,
                "typo_key": 1,
                "mapping": { "kind": "scaled_identity", "factor": 2.0 },
                "moving_set": { "kind": "constant", "base": { "kind": "interval", "lower": -1.0, "upper": 1.0 } }
            },
            "solver": {
                "schedule": { "kind": "exponential" },
                "window": { "a": 0.1, "b": 0.2 }
            }
        }"#;
        let err = parse_spec(text).unwrap_err();
        match err {
            CliError::Validation(errors) => {
                for prefix in ["/problem/alpha", "/problem/typo_key", "/solver/schedule/kind"] {
                    assert!(
                        errors.iter().any(|e| e.starts_with(prefix)),
                        "missing {prefix} in {errors:?}"
                    );
                }
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = parse_spec("{ \"mode\": ").unwrap_err();
        assert!(err.to_string().contains("malformed JSON"));
        assert!(err.to_string().contains("line"));
    }

    #[test]
    fn round_trip_is_field_exact() {
        for text in [BALL_ODE, BALL_CHECK, SCALAR_ODE] {
            let first = parse_spec(text).unwrap();
            let serialized = serde_json::to_string_pretty(&first.raw).unwrap();
            let second = parse_spec(&serialized).unwrap();
            assert_eq!(first.raw, second.raw);
            assert_eq!(first.mode.name(), second.mode.name());
        }
    }

    #[test]
    fn constants_override_replaces_derived_values() {
        let text = r#"{
            "mode": "check",
            "problem": {
                "dim": 2,
                "alpha": 2.0,
                "mapping": { "kind": "scaled_identity", "factor": 2.0 },
                "moving_set": { "kind": "constant", "base": { "kind": "ball", "center": [0.0, 0.0], "radius": 1.0 } },
                "constants": { "kappa": 0.25, "beta": 1.5 }
            },
            "solver": {
                "schedule": { "kind": "constant", "value": 1.0 },
                "window": { "a": 0.1, "b": 0.2 }
            }
        }"#;
        let spec = parse_spec(text).unwrap();
        let part = spec.problem.unwrap();
        assert_eq!(part.constants.kappa, 0.25);
        assert_eq!(part.constants.shift_lipschitz, 0.25);
        assert_eq!(part.constants.beta, 1.5);
        assert_eq!(part.constants.lipschitz, 2.0);
    }

    #[test]
    fn reproduce_spec_takes_no_problem() {
        assert!(parse_spec(r#"{"mode": "reproduce"}"#).is_ok());
        let err = parse_spec(r#"{"mode": "reproduce", "problem": {}}"#).unwrap_err();
        match err {
            CliError::Validation(errors) => {
                assert!(errors.iter().any(|e| e.starts_with("/problem")), "{errors:?}");
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
