//! Experiment orchestration: config values in, result JSON and tables out.

use std::collections::BTreeMap;
use std::time::Instant;

use qbsde::constants::{self, GlobalConstantsReport};
use qbsde::generators::{classify_assumptions, gallery, GeneratorSpec, Point};
use qbsde::norms::Norms;
use qbsde::onedim::{exp_transform_oracle, solve_1d, ScalarProblem};
use qbsde::system::{paste_intervals, picard_solve, residual_check, SystemProblem, SystemSolution};
use qbsde::transforms::{self, PlanarQuadratic, TransformLabel, TransformSpec};
use qbsde::{BrownianEnsemble, PathProcess, TimeGrid, Window};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid config: {m}"),
            Failure::Runtime(m) => write!(f, "runtime failure: {m}"),
        }
    }
}

type Res<T> = Result<T, Failure>;

/// Errors in operations fed directly from config values.
fn cfg<T>(module: &str, r: qbsde::Result<T>) -> Res<T> {
    r.map_err(|e| Failure::Config(format!("{module}::{e}")))
}

fn rt<T>(module: &str, r: qbsde::Result<T>) -> Res<T> {
    r.map_err(|e| Failure::Runtime(format!("{module}::{e}")))
}

/// Core errors whose cause is the input are config errors, the rest runtime.
fn by_kind<T>(module: &str, r: qbsde::Result<T>) -> Res<T> {
    match r {
        Err(e @ (qbsde::Error::Invalid { .. } | qbsde::Error::Shape { .. })) => Err(Failure::Config(format!("{module}::{e}"))),
        other => rt(module, other),
    }
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// A CSV cell; floats are written with 17 significant digits.
#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(usize),
    S(String),
    Empty,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub timeseries: Option<Table>,
    pub distance_log: Option<Table>,
    pub verdicts: BTreeMap<String, Value>,
    pub timings: BTreeMap<String, f64>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Self { result, timeseries: None, distance_log: None, verdicts: BTreeMap::new(), timings: BTreeMap::new() }
    }
}

struct Clock(BTreeMap<String, f64>);

impl Clock {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.0.insert(stage.to_string(), t0.elapsed().as_secs_f64() * 1e3);
        out
    }
}

pub fn run(config: &ExperimentConfig) -> Res<Outcome> {
    let mut clock = Clock(BTreeMap::new());
    let mut out = match &config.experiment {
        Experiment::Solve(c) => run_solve(c, config.seed, &mut clock)?,
        Experiment::Classify(c) => run_classify(c, config.seed, &mut clock)?,
        Experiment::Constants(c) => run_constants(c, config.seed, &mut clock)?,
        Experiment::Transform(c) => run_transform(c, config.seed, &mut clock)?,
        Experiment::Norms(c) => run_norms(c, config.seed, &mut clock)?,
    };
    out.timings = clock.0;
    Ok(out)
}

fn build_generator(g: &GeneratorRef) -> Res<GeneratorSpec> {
    if g.d == 0 {
        return Err(bad("generator.d must be at least 1"));
    }
    let spec = cfg("generators", gallery(&g.label, g.d, &g.params))?;
    if spec.d() != g.d {
        return Err(bad(format!("generator {} is defined for d = {} only", g.label, spec.d())));
    }
    Ok(spec)
}

fn build_ensemble(grid: &GridConfig, paths: usize, d: usize, seed: u64) -> Res<BrownianEnsemble> {
    let tg = cfg("paths", TimeGrid::new(grid.horizon, grid.steps))?;
    if paths < 2 {
        return Err(bad("paths must be at least 2"));
    }
    by_kind("paths", BrownianEnsemble::generate(seed, paths, tg, d))
}

fn broadcast<T: Copy>(name: &str, v: &[T], n: usize, default: T) -> Res<Vec<T>> {
    match v.len() {
        0 => Ok(vec![default; n]),
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(bad(format!("terminal.{name} has {k} entries, expected 1 or {n}"))),
    }
}

/// Terminal values laid out path-major, `n` per path.
fn build_terminal(t: &TerminalConfig, ens: &BrownianEnsemble, n: usize) -> Res<Vec<f64>> {
    let d = ens.dim();
    let last = ens.steps();
    let check_coords = |c: &[usize]| -> Res<()> {
        match c.iter().find(|&&j| j >= d) {
            Some(j) => Err(bad(format!("terminal.coordinate {j} is out of range for d = {d}"))),
            None => Ok(()),
        }
    };
    match t {
        TerminalConfig::Sine { amplitude, frequency, phase, coordinate } => {
            let (a, fr, ph, co) = (
                broadcast("amplitude", amplitude, n, 0.0)?,
                broadcast("frequency", frequency, n, 0.0)?,
                broadcast("phase", phase, n, 0.0)?,
                broadcast("coordinate", coordinate, n, 0)?,
            );
            if amplitude.is_empty() || frequency.is_empty() {
                return Err(bad("terminal.amplitude and terminal.frequency are required"));
            }
            check_coords(&co)?;
            let rows = (0..n).map(|i| (a[i], fr[i], ph[i], co[i])).collect::<Vec<_>>();
            finish_terminal(ens, n, move |p, i| {
                let (a, f, ph, c) = rows[i];
                a * (f * ens.position(p, last)[c] + ph).sin()
            })
        }
        TerminalConfig::Clipped { slope, clip, coordinate } => {
            if slope.is_empty() || !(*clip >= 0.0) {
                return Err(bad("terminal.slope is required and terminal.clip must be non-negative"));
            }
            let (s, co) = (broadcast("slope", slope, n, 0.0)?, broadcast("coordinate", coordinate, n, 0)?);
            check_coords(&co)?;
            let clip = *clip;
            finish_terminal(ens, n, move |p, i| (s[i] * ens.position(p, last)[co[i]]).clamp(-clip, clip))
        }
        TerminalConfig::Constant { values } => {
            let v = broadcast("values", values, n, 0.0)?;
            if values.is_empty() {
                return Err(bad("terminal.values is required"));
            }
            finish_terminal(ens, n, move |_, i| v[i])
        }
    }
}

fn finish_terminal(ens: &BrownianEnsemble, n: usize, f: impl Fn(usize, usize) -> f64) -> Res<Vec<f64>> {
    let xi: Vec<f64> = (0..ens.paths()).flat_map(|p| (0..n).map(move |i| (p, i))).map(|(p, i)| f(p, i)).collect();
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(bad("terminal values must be finite"));
    }
    Ok(xi)
}

/// Per-step mean and spread of `Y` and of `|Z^i|` over paths.
fn solution_series(y: &PathProcess, z: &PathProcess, ens: &BrownianEnsemble, w: Window, n: usize, stride: usize) -> Table {
    let d = z.dim() / n.max(1);
    let mut header = vec!["step".to_string(), "t".to_string()];
    for i in 1..=n {
        header.extend([format!("y{i}_mean"), format!("y{i}_std"), format!("z{i}_norm_mean"), format!("z{i}_norm_std")]);
    }
    let znorms: Vec<PathProcess> = (0..n).map(|i| z.block(i * d, d).pointwise_norm()).collect();
    let mut steps: Vec<usize> = (w.a..=w.b).step_by(stride.max(1)).collect();
    if steps.last() != Some(&w.b) {
        steps.push(w.b);
    }
    let rows = steps
        .into_iter()
        .map(|k| {
            let (ym, ys) = y.moments_at(k);
            let mut row = vec![Cell::I(k), Cell::F(ens.grid().time(k))];
            for i in 0..n {
                let (zm, zs) = znorms[i].moments_at(k);
                row.extend([Cell::F(ym[i]), Cell::F(ys[i]), Cell::F(zm[0]), Cell::F(zs[0])]);
            }
            row
        })
        .collect();
    Table { header, rows }
}

fn distance_table(sol: &SystemSolution) -> Table {
    let header = ["window", "iteration", "distance", "ratio"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let logs: Vec<(usize, &[f64])> = if sol.windows.is_empty() {
        vec![(0, &sol.distance_log[..])]
    } else {
        sol.windows.iter().map(|w| (w.index, &w.distance_log[..])).collect()
    };
    for (wi, log) in logs {
        let ratios = qbsde::system::distance_ratios(log);
        for (k, d) in log.iter().enumerate() {
            let ratio = if k == 0 { Cell::Empty } else { Cell::F(ratios[k - 1]) };
            rows.push(vec![Cell::I(wi), Cell::I(k + 1), Cell::F(*d), ratio]);
        }
    }
    Table { header, rows }
}

fn y_start(y: &PathProcess, k: usize) -> Vec<f64> {
    y.moments_at(k).0
}

fn run_solve(c: &SolveConfig, seed: u64, clock: &mut Clock) -> Res<Outcome> {
    let spec = build_generator(&c.generator)?;
    let n = spec.n();
    cfg("onedim", c.solver.solver.validate())?;
    if c.series_stride == 0 {
        return Err(bad("series_stride must be at least 1"));
    }
    if c.oracle && (c.generator.label != "pure-quadratic" || c.method != SolveMethod::Scalar) {
        return Err(bad("oracle requires the pure-quadratic generator and method \"scalar\""));
    }
    let window_steps = match (c.method, c.window_steps) {
        (SolveMethod::Paste, Some(k)) if k > 0 && c.grid.steps % k == 0 => Some(k),
        (SolveMethod::Paste, _) => return Err(bad("method \"paste\" needs window_steps dividing grid.steps")),
        (_, Some(_)) => return Err(bad("window_steps is only used with method \"paste\"")),
        _ => None,
    };
    if c.method == SolveMethod::Scalar && n != 1 {
        return Err(bad(format!("method \"scalar\" needs a one-component generator, {} has {n}", spec.label)));
    }
    let ens = clock.time("ensemble", || build_ensemble(&c.grid, c.paths, c.generator.d, seed))?;
    let xi = build_terminal(&c.terminal, &ens, n)?;
    let window = ens.grid().full();
    let problem = SystemProblem::new(spec.clone(), xi.clone(), window);

    let mut result = json!({
        "experiment": "solve",
        "generator": spec.label,
        "n": n,
        "d": spec.d(),
        "horizon": c.grid.horizon,
        "steps": c.grid.steps,
        "paths": c.paths,
        "seed": seed,
        "method": c.method,
        "terminal_bound": problem.bound,
    });
    let mut out = Outcome::new(Value::Null);

    let (y, z) = match c.method {
        SolveMethod::Scalar => {
            let g = spec.generator.clone();
            let driver = move |p: usize, k: usize, t: f64, y: f64, z: &[f64]| g.component(0, Point::new(p, k, t), &[y], z);
            let sp = ScalarProblem::new(xi.clone(), &driver, window);
            let sol = clock.time("solve", || rt("onedim", solve_1d(&sp, &ens, &c.solver.solver)))?;
            result["converged"] = json!(true);
            result["diverged"] = json!(false);
            result["y0_mean"] = json!([sol.y0_mean()]);
            result["components"] = json!([sol.diagnostics]);
            out.verdicts.insert("converged".into(), json!(true));
            if c.oracle {
                let o = rt("onedim", exp_transform_oracle(spec.params.gamma, &xi))?;
                result["oracle"] = to_json(&o);
                out.verdicts.insert("oracle_value".into(), json!(o.value));
                out.verdicts.insert("y0_mean".into(), json!(sol.y0_mean()));
            }
            (sol.y, sol.z)
        }
        SolveMethod::Picard | SolveMethod::Paste => {
            let sol = clock.time("solve", || match window_steps {
                Some(k) => rt("system", paste_intervals(&problem, &ens, k, &c.solver)),
                None => rt("system", picard_solve(&problem, &ens, &c.solver)),
            })?;
            result["converged"] = json!(sol.converged);
            result["diverged"] = json!(sol.diverged);
            result["failure"] = json!(sol.failure);
            result["iterations"] = json!(sol.iterations);
            result["distance_log"] = json!(sol.distance_log);
            result["ratios"] = json!(sol.ratios);
            result["burn_in"] = json!(sol.burn_in);
            result["sup_norm_y"] = json!(sol.sup_norm_y);
            result["bmo_sq_z"] = json!(sol.bmo_sq_z);
            result["y0_mean"] = json!(y_start(&sol.y, window.a));
            result["components"] = to_json(&sol.components);
            result["provenance"] = to_json(&sol.provenance);
            if !sol.windows.is_empty() {
                result["windows"] = to_json(&sol.windows);
            }
            out.verdicts.insert("converged".into(), json!(sol.converged));
            out.verdicts.insert("diverged".into(), json!(sol.diverged));
            out.verdicts.insert("iterations".into(), json!(sol.iterations));
            out.distance_log = Some(distance_table(&sol));
            (sol.y, sol.z)
        }
    };

    let res = clock.time("residual", || rt("system", residual_check(&y, &z, &problem, &ens, c.residual_all_starts)))?;
    out.verdicts.insert("residual_max_rms".into(), json!(res.max_rms()));
    result["residual"] = to_json(&res);
    out.timeseries = Some(clock.time("series", || solution_series(&y, &z, &ens, window, n, c.series_stride)));
    out.result = result;
    Ok(out)
}

fn run_classify(c: &ClassifyConfig, seed: u64, clock: &mut Clock) -> Res<Outcome> {
    let spec = build_generator(&c.generator)?;
    let mut plan = c.plan.clone();
    plan.seed = seed;
    let verdict = clock.time("classify", || by_kind("generators", classify_assumptions(&spec, &plan)))?;
    let mut out = Outcome::new(json!({ "experiment": "classify", "verdict": verdict }));
    for family in ["B1", "C1a", "C1b", "D1"] {
        let labels: Vec<&str> = verdict.labels(family).iter().map(|l| l.as_str()).collect();
        out.verdicts.insert(family.to_string(), json!(labels));
    }
    out.verdicts.insert("B2".into(), json!(verdict.b2.satisfied));
    out.verdicts.insert("D2".into(), json!(verdict.d2.satisfied));
    Ok(out)
}

fn run_constants(c: &ConstantsConfig, seed: u64, clock: &mut Clock) -> Res<Outcome> {
    cfg("constants", c.params.validate_exponent())?;
    cfg("generators", c.params.validate())?;
    if c.chains.is_empty() {
        return Err(bad("chains must name at least one of local, pasting, partition, young"));
    }
    let mut chains = c.chains.clone();
    chains.sort();
    chains.dedup();
    if chains.contains(&Chain::Partition) && c.partition.is_none() {
        return Err(bad("chain \"partition\" needs the partition block"));
    }
    let mut out = Outcome::new(Value::Null);
    let mut result = json!({ "experiment": "constants" });
    let mut series = Table { header: ["sequence", "index", "value"].map(String::from).to_vec(), rows: vec![] };
    let mut global = GlobalConstantsReport { pasting: None, partition: None };
    for chain in chains {
        match chain {
            Chain::Local => {
                let r = clock.time("local", || by_kind("constants", constants::compute_local_constants(&c.params, &c.inputs)))?;
                for (i, v) in r.c1_sequence.iter().enumerate() {
                    series.rows.push(vec![Cell::S("c1".into()), Cell::I(i), Cell::F(*v)]);
                }
                out.verdicts.insert("k".into(), json!(r.k));
                out.verdicts.insert("theta_max".into(), json!(r.theta_max));
                out.verdicts.insert("epsilon_max".into(), json!(r.epsilon_max));
                result["local"] = to_json(&r);
            }
            Chain::Pasting => {
                let r = clock.time("pasting", || by_kind("constants", constants::compute_global_constants_41(&c.params, &c.inputs)))?;
                for (i, v) in r.c6bar_head.iter().enumerate() {
                    series.rows.push(vec![Cell::S("c6bar".into()), Cell::I(i), Cell::F(*v)]);
                }
                out.verdicts.insert("pasting_epsilon0".into(), json!(r.epsilon0));
                out.verdicts.insert("k_tilde".into(), json!(r.k_tilde.map(finite_or_string)));
                global.pasting = Some(r);
            }
            Chain::Partition => {
                let q = c.partition.as_ref().expect("checked above");
                let r = by_kind("constants", constants::compute_global_constants_42c(q))?;
                out.verdicts.insert("partition_epsilon0".into(), json!(r.epsilon0));
                out.verdicts.insert("partition_k_tilde".into(), finite_or_string(r.k_tilde));
                global.partition = Some(r);
            }
            Chain::Young => {
                let r = clock.time("young", || constants::verify_young_inequalities(c.young_samples, seed));
                out.verdicts.insert("young_violations".into(), json!(r.violations));
                result["young"] = to_json(&r);
            }
        }
    }
    if global.pasting.is_some() || global.partition.is_some() {
        result["global"] = to_json(&global);
    }
    out.result = result;
    if !series.rows.is_empty() {
        out.timeseries = Some(series);
    }
    Ok(out)
}

/// JSON has no infinity; overflowed constants are reported as strings.
fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format!("{v}"))
    }
}

fn square(matrix: &[Vec<f64>]) -> Res<Vec<f64>> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(bad("matrix must be a non-empty square array of rows"));
    }
    Ok(matrix.concat())
}

fn transform_outcome(t: &TransformSpec) -> Outcome {
    let mut out = Outcome::new(json!({ "experiment": "transform", "transform": t }));
    out.verdicts.insert("determinant".into(), json!(t.determinant));
    out.verdicts.insert("condition".into(), json!(t.condition));
    out
}

fn run_transform(c: &TransformConfig, seed: u64, clock: &mut Clock) -> Res<Outcome> {
    match c {
        TransformConfig::RowReplacement { b } => {
            let pivot = b.iter().position(|v| *v != 0.0).unwrap_or(0);
            let t = by_kind("transforms", transforms::row_replacement_at(b, pivot))?;
            Ok(transform_outcome(&t))
        }
        TransformConfig::PinnedColumn { a, b } => {
            let t = by_kind("transforms", transforms::pinned_column_transform(a, b))?;
            Ok(transform_outcome(&t))
        }
        TransformConfig::Linear { matrix, generator } => {
            let a = square(matrix)?;
            let t = match generator {
                Some(g) => {
                    let spec = build_generator(g)?;
                    if spec.n() != matrix.len() {
                        return Err(bad(format!("matrix is {0}x{0} but the generator has {1} components", matrix.len(), spec.n())));
                    }
                    by_kind("transforms", transforms::apply_linear_transform(&spec, &a))?
                }
                None => by_kind("transforms", TransformSpec::from_matrix(a, matrix.len(), TransformLabel::User))?,
            };
            Ok(transform_outcome(&t))
        }
        TransformConfig::Planar { quadratic } => planar(quadratic, None),
        TransformConfig::ReciprocalPair { alpha, beta } => {
            let holds = by_kind("transforms", transforms::check_reciprocal_condition(*alpha, *beta))?;
            planar(&PlanarQuadratic::reciprocal_pair(*alpha, *beta), Some(holds))
        }
        TransformConfig::NonsolvablePair { theta1, vartheta1, theta2, vartheta2, d, samples } => {
            let v = by_kind(
                "transforms",
                transforms::check_nonsolvable_pair(*theta1, *vartheta1, *theta2, *vartheta2, *d, *samples, seed),
            )?;
            let mut out = Outcome::new(json!({ "experiment": "transform", "scaling": v }));
            out.verdicts.insert("nonsolvable".into(), json!(v.nonsolvable));
            out.verdicts.insert("coefficients".into(), json!(v.coefficients));
            Ok(out)
        }
        TransformConfig::Shift { generator, grid, paths, h, terminal, solver } => {
            let spec = build_generator(generator)?;
            let (n, d) = (spec.n(), spec.d());
            if h.len() != n * d {
                return Err(bad(format!("h has {} entries, expected n*d = {}", h.len(), n * d)));
            }
            cfg("onedim", solver.solver.validate())?;
            let ens = clock.time("ensemble", || build_ensemble(grid, *paths, d, seed))?;
            let xi_bar = build_terminal(terminal, &ens, n)?;
            let hp = PathProcess::constant(&ens, h);
            let window = ens.grid().full();
            let shifted = rt("transforms", transforms::shift_terminal(&spec, &hp, xi_bar, &ens, window))?;
            let sol = clock.time("solve", || rt("system", picard_solve(&shifted.problem, &ens, solver)))?;
            let (y, z) = rt("transforms", shifted.unshift(&sol.y, &sol.z))?;
            let original = SystemProblem::new(spec.clone(), shifted.original_terminal(), window);
            let res = clock.time("residual", || rt("system", residual_check(&y, &z, &original, &ens, true)))?;
            let shifted_res = rt("system", residual_check(&sol.y, &sol.z, &shifted.problem, &ens, true))?;
            let mut out = Outcome::new(json!({
                "experiment": "transform",
                "operation": "shift",
                "generator": spec.label,
                "converged": sol.converged,
                "diverged": sol.diverged,
                "iterations": sol.iterations,
                "distance_log": sol.distance_log,
                "y0_mean": y_start(&y, window.a),
                "residual_original": res,
                "residual_shifted": shifted_res,
            }));
            out.verdicts.insert("converged".into(), json!(sol.converged));
            out.verdicts.insert("residual_max_rms".into(), json!(res.max_rms()));
            out.distance_log = Some(distance_table(&sol));
            out.timeseries = Some(solution_series(&y, &z, &ens, window, n, 1));
            Ok(out)
        }
    }
}

fn planar(q: &PlanarQuadratic, reciprocal: Option<bool>) -> Res<Outcome> {
    let v = by_kind("transforms", transforms::check_planar_quadratic(q))?;
    let t = match &v.chosen {
        Some(cand) if v.found => Some(rt("transforms", transforms::planar_transform(q, cand))?),
        _ => None,
    };
    let mut out = Outcome::new(json!({
        "experiment": "transform",
        "quadratic": q,
        "reciprocal_condition": reciprocal,
        "planar": v,
        "transform": t,
    }));
    out.verdicts.insert("applies".into(), json!(v.applies));
    if let Some(r) = reciprocal {
        out.verdicts.insert("reciprocal_condition".into(), json!(r));
    }
    Ok(out)
}

fn run_norms(c: &NormsConfig, seed: u64, clock: &mut Clock) -> Res<Outcome> {
    if c.rates.iter().any(|r| !(*r > 0.0)) {
        return Err(bad("rates must be positive"));
    }
    let valid = match c.process {
        ProcessConfig::Constant { value } => value >= 0.0 && value.is_finite(),
        ProcessConfig::AbsBrownian { scale, cap } => scale >= 0.0 && cap >= 0.0 && cap.is_finite(),
        ProcessConfig::Indicator { level, value } => level.is_finite() && value >= 0.0 && value.is_finite(),
    };
    if !valid {
        return Err(bad("process parameters must be finite and non-negative"));
    }
    let ens = clock.time("ensemble", || build_ensemble(&c.grid, c.paths, 1, seed))?;
    let proc = match c.process {
        ProcessConfig::Constant { value } => PathProcess::constant(&ens, &[value]),
        ProcessConfig::AbsBrownian { scale, cap } => {
            PathProcess::from_fn(&ens, 1, |p, k, o| o[0] = (scale * ens.position(p, k)[0].abs()).min(cap))
        }
        ProcessConfig::Indicator { level, value } => {
            PathProcess::from_fn(&ens, 1, |p, k, o| o[0] = if ens.position(p, k)[0].abs() > level { value } else { 0.0 })
        }
    };
    let norms = Norms::new(&ens).with_regression(c.regression);
    let w = ens.grid().full();
    let report = clock.time("norms", || rt("norms", norms.report(&proc, w, &c.rates)))?;
    let mut result = json!({ "experiment": "norms", "process": c.process, "report": report });
    let mut out = Outcome::new(Value::Null);
    if let Some(slack) = c.john_nirenberg_slack {
        let jn = rt("norms", norms.john_nirenberg(&proc, w, slack))?;
        out.verdicts.insert("john_nirenberg".into(), json!(jn.satisfied));
        result["john_nirenberg"] = to_json(&jn);
    }
    out.verdicts.insert("linf".into(), json!(report.linf));
    out.verdicts.insert("minf".into(), json!(report.minf));
    out.verdicts.insert("bmo".into(), json!(report.bmo));
    out.result = result;
    let rows = (0..=ens.steps())
        .map(|k| {
            let (m, s) = proc.moments_at(k);
            vec![Cell::I(k), Cell::F(ens.grid().time(k)), Cell::F(m[0]), Cell::F(s[0])]
        })
        .collect();
    out.timeseries = Some(Table { header: ["step", "t", "mean", "std"].map(String::from).to_vec(), rows });
    Ok(out)
}
