//! Scalar BSDEs `Y_t = ξ + ∫_t^b f(s, Y_s, Z_s) ds − ∫_t^b Z_s dB_s` on a grid window.
//!
//! The scheme is the usual least-squares Monte Carlo backward induction: at step `k`
//! the control is the regression of `(Y_{k+1} − E_k[Y_{k+1}]) ΔB_k / Δt` and the value
//! solves `y = E_k[Y_{k+1}] + f(t_k, y, Z_k) Δt` by fixed-point iteration.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::norms::{Norms, EXP_CAP};
use crate::par;
use crate::paths::{BrownianEnsemble, PathProcess, Window};
use crate::regression::{Projector, RegressionOptions};

/// Pathwise scalar driver `f(path, k, t, y, z)` with `z ∈ R^{1×d}`.
pub trait ScalarDriver: Sync {
    fn eval(&self, path: usize, k: usize, t: f64, y: f64, z: &[f64]) -> f64;
}

impl<F> ScalarDriver for F
where
    F: Fn(usize, usize, f64, f64, &[f64]) -> f64 + Sync,
{
    fn eval(&self, path: usize, k: usize, t: f64, y: f64, z: &[f64]) -> f64 {
        self(path, k, t, y, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub regression: RegressionOptions,
    pub max_inner: usize,
    pub inner_tol: f64,
    /// Euclidean radius at which the driver's `z` argument is clamped.
    pub z_radius: f64,
    /// Estimate `sup |Y|` and `‖Z‖²_BMO` after the solve (one extra regression per step).
    pub norm_estimates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { regression: RegressionOptions::default(), max_inner: 20, inner_tol: 1e-10, z_radius: 50.0, norm_estimates: true }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_inner == 0 || !(self.inner_tol > 0.0) || !(self.z_radius > 0.0) {
            return Err(invalid("solve_1d", "need max_inner >= 1, inner_tol > 0 and z_radius > 0"));
        }
        Ok(())
    }
}

/// Terminal value, driver and window of a scalar problem.
pub struct ScalarProblem<'a> {
    pub terminal: Vec<f64>,
    /// Declared `‖ξ‖∞`; checked against the data.
    pub bound: f64,
    pub driver: &'a dyn ScalarDriver,
    pub window: Window,
}

impl<'a> ScalarProblem<'a> {
    pub fn new(terminal: Vec<f64>, driver: &'a dyn ScalarDriver, window: Window) -> Self {
        let bound = terminal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self { terminal, bound, driver, window }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarDiagnostics {
    pub residual_rms: f64,
    pub max_inner_iters: usize,
    pub truncation_active: bool,
    pub truncation_count: usize,
    pub z_radius: f64,
    pub sup_norm: Option<f64>,
    pub bmo_sq: Option<f64>,
}

/// `Y` and `Z` stored on the full grid; entries outside the window are zero and
/// `Z` at the window's right end is zero.
#[derive(Debug, Clone)]
pub struct ScalarSolution {
    pub y: PathProcess,
    pub z: PathProcess,
    pub window: Window,
    pub diagnostics: ScalarDiagnostics,
}

impl ScalarSolution {
    /// `Y_a` averaged over paths.
    pub fn y0_mean(&self) -> f64 {
        let m = self.y.paths();
        (0..m).map(|p| self.y.at(p, self.window.a)[0]).sum::<f64>() / m as f64
    }
}

fn clamp_into(z: &[f64], radius: f64, out: &mut [f64]) -> bool {
    let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r > radius {
        let s = radius / r;
        for (o, v) in out.iter_mut().zip(z) {
            *o = v * s;
        }
        true
    } else {
        out.copy_from_slice(z);
        false
    }
}

pub fn solve_1d(problem: &ScalarProblem<'_>, ens: &BrownianEnsemble, opts: &SolverOptions) -> Result<ScalarSolution> {
    const OP: &str = "solve_1d";
    opts.validate()?;
    let (m, d) = (ens.paths(), ens.dim());
    let w = problem.window;
    if problem.terminal.len() != m {
        return Err(shape(OP, format!("terminal has {} values for {m} paths", problem.terminal.len())));
    }
    if w.b > ens.steps() || w.a > w.b {
        return Err(invalid(OP, "window outside the grid"));
    }
    if problem.terminal.iter().any(|v| !v.is_finite() || v.abs() > problem.bound * (1.0 + 1e-12)) {
        return Err(invalid(OP, "terminal value is non-finite or exceeds its declared bound"));
    }
    let grid = ens.grid();
    let dt = grid.dt();
    let mut y = PathProcess::zeros_like(ens, 1);
    let mut z = PathProcess::zeros_like(ens, d);
    for (p, &v) in problem.terminal.iter().enumerate() {
        y.at_mut(p, w.b)[0] = v;
    }
    let mut next: Vec<f64> = problem.terminal.clone();
    let mut max_iters = 0;
    let mut truncations = 0;
    for k in (w.a..w.b).rev() {
        let proj = Projector::at_step(ens, k, &opts.regression)?;
        let ey = proj.conditional_expectation(&next);
        let centered: Vec<f64> = next.iter().zip(&ey).map(|(a, b)| a - b).collect();
        let mut zk = vec![0.0; m * d];
        for c in 0..d {
            let target: Vec<f64> = (0..m).map(|p| centered[p] * ens.increment(p, k)[c] / dt).collect();
            for (p, v) in proj.fit(&target).into_iter().enumerate() {
                zk[p * d + c] = v;
            }
        }
        let t = grid.time(k);
        let driver = problem.driver;
        let out: Vec<std::result::Result<(f64, usize, bool), Error>> = par::map_indices(m, |p| {
            let mut zc = vec![0.0; d];
            let clamped = clamp_into(&zk[p * d..(p + 1) * d], opts.z_radius, &mut zc);
            let mut yv = ey[p];
            for it in 1..=opts.max_inner {
                let nv = ey[p] + driver.eval(p, k, t, yv, &zc) * dt;
                if !nv.is_finite() {
                    return Err(Error::NonFinite { op: OP, component: 0 });
                }
                let delta = (nv - yv).abs();
                yv = nv;
                if delta <= opts.inner_tol * (1.0 + yv.abs()) {
                    return Ok((yv, it, clamped));
                }
            }
            Err(Error::InnerNonConvergence { step: k, path: p, iters: opts.max_inner })
        });
        for (p, r) in out.into_iter().enumerate() {
            let (v, it, clamped) = r?;
            next[p] = v;
            y.at_mut(p, k)[0] = v;
            z.at_mut(p, k).copy_from_slice(&zk[p * d..(p + 1) * d]);
            max_iters = max_iters.max(it);
            truncations += clamped as usize;
        }
    }
    let residual = scalar_residual(&y, &z, &problem.terminal, problem.driver, ens, w, opts.z_radius)?;
    let residual_rms = rms(&residual);
    let (sup_norm, bmo_sq) = if opts.norm_estimates && !w.is_empty() {
        let norms = Norms::new(ens).with_regression(opts.regression);
        (Some(norms.sup_norm(&y, w)?), Some(norms.bmo_squared(&z, Window::new(w.a, w.b, ens.steps())?)?))
    } else {
        (None, None)
    };
    Ok(ScalarSolution {
        y,
        z,
        window: w,
        diagnostics: ScalarDiagnostics {
            residual_rms,
            max_inner_iters: max_iters,
            truncation_active: truncations > 0,
            truncation_count: truncations,
            z_radius: opts.z_radius,
            sup_norm,
            bmo_sq,
        },
    })
}

pub(crate) fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Pathwise defect `Y_a − ξ − Σ f Δt + Σ Z ΔB` over the window, with the driver's
/// `z` argument clamped exactly as in the solver.
pub fn scalar_residual(
    y: &PathProcess,
    z: &PathProcess,
    terminal: &[f64],
    driver: &dyn ScalarDriver,
    ens: &BrownianEnsemble,
    w: Window,
    z_radius: f64,
) -> Result<Vec<f64>> {
    const OP: &str = "residual_check";
    y.check_ensemble(ens, OP)?;
    z.check_ensemble(ens, OP)?;
    let d = ens.dim();
    if y.dim() != 1 || z.dim() != d || terminal.len() != ens.paths() {
        return Err(shape(OP, "expected scalar Y, 1 x d Z and one terminal value per path"));
    }
    let dt = ens.grid().dt();
    Ok(par::map_indices(ens.paths(), |p| {
        let mut zc = vec![0.0; d];
        let mut r = y.at(p, w.a)[0] - terminal[p];
        for k in w.a..w.b {
            let zk = z.at(p, k);
            clamp_into(zk, z_radius, &mut zc);
            r -= driver.eval(p, k, ens.grid().time(k), y.at(p, k)[0], &zc) * dt;
            r += zk.iter().zip(ens.increment(p, k)).map(|(a, b)| a * b).sum::<f64>();
        }
        r
    }))
}

/// Monte Carlo value of `Y_0` for `f = (γ/2)|z|²`: `(1/γ) ln E[exp(γ ξ)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpOracle {
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_error: f64,
}

pub fn exp_transform_oracle(gamma: f64, terminal: &[f64]) -> Result<ExpOracle> {
    const OP: &str = "exp_transform_oracle";
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(OP, "gamma must be positive"));
    }
    if terminal.is_empty() || terminal.iter().any(|v| !v.is_finite()) {
        return Err(invalid(OP, "terminal must be non-empty and finite"));
    }
    let hi = terminal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = terminal.iter().copied().fold(f64::INFINITY, f64::min);
    if gamma * (hi - lo) > EXP_CAP {
        return Err(Error::Overflow { op: OP, exponent: gamma * (hi - lo), cap: EXP_CAP });
    }
    // Shifting by the maximum keeps every exponential in (0, 1] and a constant
    // terminal exact.
    let n = terminal.len() as f64;
    let w: Vec<f64> = terminal.iter().map(|&x| (gamma * (x - hi)).exp()).collect();
    let mean = w.iter().sum::<f64>() / n;
    let var = if terminal.len() > 1 { w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(ExpOracle { value: hi + mean.ln() / gamma, std_error: (var / n).sqrt() / (gamma * mean) })
}

/// Which one-dimensional growth structure the a priori bound is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AprioriCase {
    /// Two-sided quadratic bounds with strict lower curvature `γ̄`.
    A1,
    /// Symmetric bound `|f| ≲ α̈ + ū|z| + γ/2 |z|²`.
    A3,
    /// Linear growth in `z`.
    A4,
}

/// Norm estimates and constants feeding the bound; fields a case needs must be set.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AprioriInputs {
    pub eta: Option<f64>,
    pub alpha_check_e: Option<f64>,
    pub alpha_dot_m: Option<f64>,
    pub alpha_ddot_l: Option<f64>,
    pub u_bar_bmo: Option<f64>,
    pub beta_bar: f64,
    pub gamma: Option<f64>,
    pub gamma_bar: Option<f64>,
    pub lambda_bar: Option<f64>,
    pub horizon: f64,
    /// Unspecified uniform constant of the linear-growth bound; 2 when absent.
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriReport {
    pub case: AprioriCase,
    pub bound: f64,
    pub observed: f64,
    pub satisfied: bool,
    pub c0: Option<f64>,
}

pub fn apriori_bounds_check(sol: &ScalarSolution, case: AprioriCase, inp: &AprioriInputs) -> Result<AprioriReport> {
    const OP: &str = "apriori_bounds_check";
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(OP, format!("missing norm input {name} for case {case:?}")));
    let sup = sol.diagnostics.sup_norm.ok_or_else(|| invalid(OP, "solution carries no sup-norm estimate"))?;
    let bmo_sq = sol.diagnostics.bmo_sq.ok_or_else(|| invalid(OP, "solution carries no BMO estimate"))?;
    let (bb, t) = (inp.beta_bar, inp.horizon);
    let eta = need(inp.eta, "eta")?;
    let mut c0_used = None;
    let bound = match case {
        AprioriCase::A1 => {
            let gb = need(inp.gamma_bar, "gamma_bar")?;
            let ac = need(inp.alpha_check_e, "alpha_check_e")?;
            let ad = need(inp.alpha_dot_m, "alpha_dot_m")?;
            (2.0 * (1.0 + bb * t) + gb) / gb * (2.0 * bb * t).exp() * (3.0 * eta + ac + 2.0 * ad)
        }
        AprioriCase::A3 => {
            let g = need(inp.gamma, "gamma")?;
            let a = need(inp.alpha_ddot_l, "alpha_ddot_l")?;
            let u = need(inp.u_bar_bmo, "u_bar_bmo")?;
            let e = (bb * t).exp();
            4.0 * (g + 1.0) / (g * g) * (4.0 * g * e * (eta + a)).exp() * (1.0 + bb * t * e * (eta + a) + a + u * u)
        }
        AprioriCase::A4 => {
            let lb = need(inp.lambda_bar, "lambda_bar")?;
            let ad = need(inp.alpha_dot_m, "alpha_dot_m")?;
            let c0 = inp.c0.unwrap_or(2.0);
            c0_used = Some(c0);
            1.0 + c0 * (2.0 * bb * t + 2.0 * lb * lb * t).exp() * (eta * eta + 2.0 * ad * ad)
        }
    };
    let observed = sup + bmo_sq;
    Ok(AprioriReport { case, bound, observed, satisfied: observed <= bound, c0: c0_used })
}
