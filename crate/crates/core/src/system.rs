//! Multi-dimensional systems: the component-by-component map `Γ`, Picard iteration
//! on a window, and backward pasting of windows over `[0, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::generators::{GeneratorSpec, Point};
use crate::norms::Norms;
use crate::onedim::{rms, solve_1d, ScalarDiagnostics, ScalarProblem, SolverOptions};
use crate::par;
use crate::paths::{BrownianEnsemble, PathProcess, Window};

/// Terminal vector `ξ` (one row of `n` values per path), generator and window.
#[derive(Debug, Clone)]
pub struct SystemProblem {
    pub spec: GeneratorSpec,
    pub terminal: Vec<f64>,
    pub bound: f64,
    pub window: Window,
}

impl SystemProblem {
    pub fn new(spec: GeneratorSpec, terminal: Vec<f64>, window: Window) -> Self {
        let n = spec.n().max(1);
        let bound = terminal.chunks(n).map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0f64, f64::max);
        Self { spec, terminal, bound, window }
    }

    fn validate(&self, ens: &BrownianEnsemble, op: &'static str) -> Result<()> {
        let n = self.spec.n();
        if self.spec.d() != ens.dim() {
            return Err(shape(op, format!("generator has d = {} but the ensemble has d = {}", self.spec.d(), ens.dim())));
        }
        if self.terminal.len() != ens.paths() * n {
            return Err(shape(op, format!("terminal has {} values, expected {} paths x {n}", self.terminal.len(), ens.paths())));
        }
        if self.window.b > ens.steps() || self.window.a > self.window.b {
            return Err(invalid(op, "window outside the grid"));
        }
        for r in self.terminal.chunks(n) {
            let v = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !v.is_finite() || v > self.bound * (1.0 + 1e-12) {
                return Err(invalid(op, "terminal value is non-finite or exceeds its declared bound"));
            }
        }
        Ok(())
    }

    fn terminal_component(&self, i: usize) -> Vec<f64> {
        self.terminal.chunks(self.spec.n()).map(|r| r[i]).collect()
    }
}

/// How to start the Picard iteration.
#[derive(Debug, Clone, Default)]
pub enum InitialPair {
    /// `(U, V)` from solving every component with the zero generator.
    #[default]
    ZeroGenerator,
    Zeros,
    Given(PathProcess, PathProcess),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardOptions {
    pub solver: SolverOptions,
    pub max_outer: usize,
    pub tolerance: f64,
    /// Distances larger than this factor times the first one mark divergence.
    pub blowup: f64,
    #[serde(skip)]
    pub initial: InitialPair,
}

impl Default for PicardOptions {
    fn default() -> Self {
        let solver = SolverOptions { norm_estimates: false, ..SolverOptions::default() };
        Self { solver, max_outer: 30, tolerance: 1e-9, blowup: 1e6, initial: InitialPair::ZeroGenerator }
    }
}

/// Source of each `z` row when component `i`'s scalar problem is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSource {
    /// Row solved earlier in the same sweep.
    Fresh,
    /// The unknown of the scalar problem.
    Own,
    /// Row taken from the input `V`.
    Frozen,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowProvenance {
    pub component: usize,
    pub rows: Vec<RowSource>,
}

/// Output of one application of `Γ`.
#[derive(Debug, Clone)]
pub struct GammaOutput {
    pub y: PathProcess,
    pub z: PathProcess,
    pub components: Vec<ScalarDiagnostics>,
    pub provenance: Vec<RowProvenance>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub index: usize,
    pub interval: [f64; 2],
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub sup_norm_y: f64,
    pub bmo_sq_z: f64,
    pub distance_log: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SystemSolution {
    pub y: PathProcess,
    pub z: PathProcess,
    pub window: Window,
    /// `sup|Y_k − Y_{k−1}| + ‖Z_k − Z_{k−1}‖²_BMO` per outer iteration.
    pub distance_log: Vec<f64>,
    /// `d_{k+1} / d_k`.
    pub ratios: Vec<f64>,
    /// Ratios are expected to settle from this index on.
    pub burn_in: usize,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub failure: Option<String>,
    pub components: Vec<ScalarDiagnostics>,
    pub provenance: Vec<RowProvenance>,
    pub sup_norm_y: f64,
    pub bmo_sq_z: f64,
    pub windows: Vec<WindowReport>,
}

/// `d_{k+1} / d_k`, taken as 0 after a zero distance.
pub fn distance_ratios(log: &[f64]) -> Vec<f64> {
    log.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect()
}

/// Row sources for component `i` of an `n`-component system.
pub fn row_sources(i: usize, n: usize) -> Vec<RowSource> {
    (0..n)
        .map(|j| match j.cmp(&i) {
            std::cmp::Ordering::Less => RowSource::Fresh,
            std::cmp::Ordering::Equal => RowSource::Own,
            std::cmp::Ordering::Greater => RowSource::Frozen,
        })
        .collect()
}

/// Solve `n` scalar problems in order; component `i` sees `y = U`, rows `j < i` of
/// `z` from this sweep, row `i` free and rows `j > i` from `V`.
pub fn gamma_map(u: &PathProcess, v: &PathProcess, problem: &SystemProblem, ens: &BrownianEnsemble, opts: &SolverOptions) -> Result<GammaOutput> {
    const OP: &str = "gamma_map";
    problem.validate(ens, OP)?;
    let (n, d) = (problem.spec.n(), problem.spec.d());
    u.check_ensemble(ens, OP)?;
    v.check_ensemble(ens, OP)?;
    if u.dim() != n || v.dim() != n * d {
        return Err(shape(OP, format!("(U, V) must have {n} and {} components", n * d)));
    }
    let mut fresh = PathProcess::zeros_like(ens, n * d);
    let mut y = PathProcess::zeros_like(ens, n);
    let mut components = Vec::with_capacity(n);
    let mut provenance = Vec::with_capacity(n);
    let g = &problem.spec.generator;
    for i in 0..n {
        let sources = row_sources(i, n);
        let fresh_ref = &fresh;
        let src = &sources;
        let driver = move |p: usize, k: usize, t: f64, _y: f64, zi: &[f64]| -> f64 {
            let mut zfull = vec![0.0; n * d];
            for (j, s) in src.iter().enumerate() {
                let dst = &mut zfull[j * d..(j + 1) * d];
                match s {
                    RowSource::Fresh => dst.copy_from_slice(&fresh_ref.at(p, k)[j * d..(j + 1) * d]),
                    RowSource::Own => dst.copy_from_slice(zi),
                    RowSource::Frozen => dst.copy_from_slice(&v.at(p, k)[j * d..(j + 1) * d]),
                }
            }
            g.component(i, Point::new(p, k, t), u.at(p, k), &zfull)
        };
        let sp = ScalarProblem { terminal: problem.terminal_component(i), bound: problem.bound, driver: &driver, window: problem.window };
        let sol = solve_1d(&sp, ens, opts).map_err(|e| Error::Component { component: i + 1, source: Box::new(e) })?;
        for p in 0..ens.paths() {
            for k in 0..=ens.steps() {
                y.at_mut(p, k)[i] = sol.y.at(p, k)[0];
                fresh.at_mut(p, k)[i * d..(i + 1) * d].copy_from_slice(sol.z.at(p, k));
            }
        }
        components.push(sol.diagnostics);
        provenance.push(RowProvenance { component: i + 1, rows: sources });
    }
    Ok(GammaOutput { y, z: fresh, components, provenance })
}

fn zero_generator_pair(problem: &SystemProblem, ens: &BrownianEnsemble, opts: &SolverOptions) -> Result<(PathProcess, PathProcess)> {
    let (n, d) = (problem.spec.n(), problem.spec.d());
    let mut u = PathProcess::zeros_like(ens, n);
    let mut v = PathProcess::zeros_like(ens, n * d);
    let zero = |_: usize, _: usize, _: f64, _: f64, _: &[f64]| 0.0;
    for i in 0..n {
        let sp = ScalarProblem { terminal: problem.terminal_component(i), bound: problem.bound, driver: &zero, window: problem.window };
        let s = solve_1d(&sp, ens, opts)?;
        for p in 0..ens.paths() {
            for k in 0..=ens.steps() {
                u.at_mut(p, k)[i] = s.y.at(p, k)[0];
                v.at_mut(p, k)[i * d..(i + 1) * d].copy_from_slice(s.z.at(p, k));
            }
        }
    }
    Ok((u, v))
}

/// Iterate `Γ` until the composite distance drops below the tolerance.
///
/// Non-convergence is reported through the `converged` and `diverged` flags, not as
/// an error.
pub fn picard_solve(problem: &SystemProblem, ens: &BrownianEnsemble, opts: &PicardOptions) -> Result<SystemSolution> {
    const OP: &str = "picard_solve";
    problem.validate(ens, OP)?;
    if opts.max_outer == 0 || !(opts.tolerance > 0.0) {
        return Err(invalid(OP, "need max_outer >= 1 and tolerance > 0"));
    }
    let (n, d) = (problem.spec.n(), problem.spec.d());
    let w = problem.window;
    let norms = Norms::new(ens).with_regression(opts.solver.regression);
    let (mut u, mut v) = match &opts.initial {
        InitialPair::ZeroGenerator => zero_generator_pair(problem, ens, &opts.solver)?,
        InitialPair::Zeros => (PathProcess::zeros_like(ens, n), PathProcess::zeros_like(ens, n * d)),
        InitialPair::Given(u, v) => (u.clone(), v.clone()),
    };
    // The pair must carry the terminal value even when started from zeros.
    let mut log = Vec::new();
    let mut components = Vec::new();
    let mut provenance = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut failure = None;
    let mut iterations = 0;
    for _ in 0..opts.max_outer {
        let out = match gamma_map(&u, &v, problem, ens, &opts.solver) {
            Ok(o) => o,
            Err(e) => {
                diverged = true;
                failure = Some(e.to_string());
                break;
            }
        };
        iterations += 1;
        let dist = norms.sup_norm(&out.y.sub(&u)?, w)? + norms.bmo_squared(&out.z.sub(&v)?, w)?;
        log.push(dist);
        components = out.components;
        provenance = out.provenance;
        u = out.y;
        v = out.z;
        if !dist.is_finite() || (log.len() > 1 && dist > opts.blowup * log[0].max(opts.tolerance)) {
            diverged = true;
            break;
        }
        if dist < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged && !diverged {
        // Ran out of iterations: treat a non-decreasing tail as divergence.
        let r = distance_ratios(&log);
        diverged = r.last().map_or(false, |&x| x >= 1.0);
    }
    let sup_norm_y = norms.sup_norm(&u, w)?;
    let bmo_sq_z = norms.bmo_squared(&v, w)?;
    Ok(SystemSolution {
        y: u,
        z: v,
        window: w,
        ratios: distance_ratios(&log),
        distance_log: log,
        burn_in: 1,
        iterations,
        converged,
        diverged,
        failure,
        components,
        provenance,
        sup_norm_y,
        bmo_sq_z,
        windows: Vec::new(),
    })
}

/// Solve on `[T − ε, T]`, then on `[T − 2ε, T − ε]` with the previous initial value
/// as terminal, and so on back to the start of the problem's window.
pub fn paste_intervals(problem: &SystemProblem, ens: &BrownianEnsemble, eps_steps: usize, opts: &PicardOptions) -> Result<SystemSolution> {
    const OP: &str = "paste_intervals";
    problem.validate(ens, OP)?;
    let w = problem.window;
    if eps_steps == 0 || w.len() % eps_steps != 0 {
        return Err(invalid(OP, format!("window of {} steps is not a whole number of {eps_steps}-step windows", w.len())));
    }
    let (n, d) = (problem.spec.n(), problem.spec.d());
    let grid = ens.grid();
    let mut y = PathProcess::zeros_like(ens, n);
    let mut z = PathProcess::zeros_like(ens, n * d);
    let mut terminal = problem.terminal.clone();
    let mut reports = Vec::new();
    let mut log = Vec::new();
    let mut all_converged = true;
    let mut any_diverged = false;
    let mut failure = None;
    let mut last = None;
    let count = w.len() / eps_steps;
    for idx in 0..count {
        let b = w.b - idx * eps_steps;
        let a = b - eps_steps;
        let sub = SystemProblem::new(problem.spec.clone(), terminal.clone(), Window::new(a, b, ens.steps())?);
        let sol = picard_solve(&sub, ens, opts)?;
        for p in 0..ens.paths() {
            // Column b of this window was written by the later window already; it
            // equals this window's terminal exactly.
            for k in a..b {
                y.at_mut(p, k).copy_from_slice(sol.y.at(p, k));
                z.at_mut(p, k).copy_from_slice(sol.z.at(p, k));
            }
            if idx == 0 {
                y.at_mut(p, b).copy_from_slice(sol.y.at(p, b));
            }
            terminal[p * n..(p + 1) * n].copy_from_slice(sol.y.at(p, a));
        }
        reports.push(WindowReport {
            index: idx,
            interval: [grid.time(a), grid.time(b)],
            iterations: sol.iterations,
            converged: sol.converged,
            diverged: sol.diverged,
            sup_norm_y: sol.sup_norm_y,
            bmo_sq_z: sol.bmo_sq_z,
            distance_log: sol.distance_log.clone(),
        });
        log.extend(sol.distance_log.iter().copied());
        all_converged &= sol.converged;
        any_diverged |= sol.diverged;
        if sol.diverged {
            failure = Some(sol.failure.clone().unwrap_or_else(|| format!("window {idx} diverged")));
            last = Some(sol);
            break;
        }
        last = Some(sol);
    }
    let last = last.ok_or_else(|| invalid(OP, "empty window"))?;
    let norms = Norms::new(ens).with_regression(opts.solver.regression);
    Ok(SystemSolution {
        sup_norm_y: norms.sup_norm(&y, w)?,
        bmo_sq_z: norms.bmo_squared(&z, w)?,
        y,
        z,
        window: w,
        ratios: distance_ratios(&log),
        distance_log: log,
        burn_in: 1,
        iterations: reports.iter().map(|r| r.iterations).sum(),
        converged: all_converged && !any_diverged,
        diverged: any_diverged,
        failure,
        components: last.components,
        provenance: last.provenance,
        windows: reports,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// RMS over paths per component.
    pub rms: Vec<f64>,
    /// `max_k` of the RMS residual started at `t_k`, per component, when requested.
    pub max_over_starts: Option<Vec<f64>>,
    /// `R` per path, row-major `[path][component]`.
    #[serde(skip)]
    pub pathwise: Vec<f64>,
}

impl ResidualReport {
    pub fn max_rms(&self) -> f64 {
        self.rms.iter().copied().fold(0.0, f64::max)
    }
}

/// `R^i = Y^i_a − ξ^i − Σ g^i(Y, Z) Δt + Σ Z^i ΔB` for arbitrary `(Y, Z)` arrays.
pub fn residual_check(
    y: &PathProcess,
    z: &PathProcess,
    problem: &SystemProblem,
    ens: &BrownianEnsemble,
    all_starts: bool,
) -> Result<ResidualReport> {
    const OP: &str = "residual_check";
    problem.validate(ens, OP)?;
    y.check_ensemble(ens, OP)?;
    z.check_ensemble(ens, OP)?;
    let (n, d) = (problem.spec.n(), problem.spec.d());
    if y.dim() != n || z.dim() != n * d {
        return Err(shape(OP, format!("expected Y with {n} and Z with {} components", n * d)));
    }
    let w = problem.window;
    let dt = ens.grid().dt();
    let g = &problem.spec.generator;
    // Per path: residual from every start k in [a, b], each of n components.
    let per_path: Vec<Vec<f64>> = par::map_indices(ens.paths(), |p| {
        let len = w.b - w.a + 1;
        let mut out = vec![0.0; len * n];
        let mut acc = vec![0.0; n];
        let mut gk = vec![0.0; n];
        let xi = &problem.terminal[p * n..(p + 1) * n];
        for k in (w.a..=w.b).rev() {
            if k < w.b {
                g.eval(Point::new(p, k, ens.grid().time(k)), y.at(p, k), z.at(p, k), &mut gk);
                let db = ens.increment(p, k);
                let zk = z.at(p, k);
                for i in 0..n {
                    let mart: f64 = (0..d).map(|c| zk[i * d + c] * db[c]).sum();
                    acc[i] += mart - gk[i] * dt;
                }
            }
            let yk = y.at(p, k);
            for i in 0..n {
                out[(k - w.a) * n + i] = yk[i] - xi[i] + acc[i];
            }
        }
        out
    });
    let m = ens.paths();
    let mut pathwise = vec![0.0; m * n];
    for (p, r) in per_path.iter().enumerate() {
        pathwise[p * n..(p + 1) * n].copy_from_slice(&r[..n]);
    }
    let rms_at = |start: usize, i: usize| rms(&per_path.iter().map(|r| r[start * n + i]).collect::<Vec<_>>());
    let rms_v: Vec<f64> = (0..n).map(|i| rms_at(0, i)).collect();
    let max_over = all_starts.then(|| (0..n).map(|i| (0..=(w.b - w.a)).map(|s| rms_at(s, i)).fold(0.0, f64::max)).collect());
    Ok(ResidualReport { rms: rms_v, max_over_starts: max_over, pathwise })
}
