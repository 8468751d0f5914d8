//! Uniform time grids, Brownian ensembles and left-endpoint integrals.
//!
//! Every Gaussian draw is addressed by `(seed, path, step, coordinate)`: path `m` owns
//! ChaCha stream `m` of the key expanded from `seed`, and the draw for `(step, coord)`
//! consumes the four 32-bit words starting at word `4 (step d + coord)`. Results are
//! therefore independent of how paths are spread over threads.

use rand_chacha::ChaCha8Rng;
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::par;

/// Uniform grid `t_k = k T / N`, `k = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("TimeGrid", format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(invalid("TimeGrid", "step count must be at least 1"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 / self.steps as f64) * self.horizon
    }

    /// The whole grid as a window.
    pub fn full(&self) -> Window {
        Window { a: 0, b: self.steps }
    }

    /// Window whose endpoints are the grid points closest to `a` and `b`.
    ///
    /// Fails when either time is off the grid by more than `1e-9 T`.
    pub fn window(&self, a: f64, b: f64) -> Result<Window> {
        let snap = |t: f64| -> Result<usize> {
            let x = t / self.horizon * self.steps as f64;
            let k = x.round();
            if (x - k).abs() > 1e-9 * self.steps as f64 || k < 0.0 || k > self.steps as f64 {
                return Err(invalid("TimeGrid::window", format!("time {t} is not a grid point")));
            }
            Ok(k as usize)
        };
        Window::new(snap(a)?, snap(b)?, self.steps)
    }
}

/// Sub-interval `[t_a, t_b]` given by step indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub a: usize,
    pub b: usize,
}

impl Window {
    pub fn new(a: usize, b: usize, steps: usize) -> Result<Self> {
        if a >= b || b > steps {
            return Err(invalid("Window", format!("need 0 <= a < b <= {steps}, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.a >= self.b
    }
}

/// `M` independent `d`-dimensional Brownian paths sampled on a grid.
#[derive(Debug, Clone)]
pub struct BrownianEnsemble {
    grid: TimeGrid,
    dim: usize,
    paths: usize,
    seed: u64,
    increments: Vec<f64>,
    positions: Vec<f64>,
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller on two 53-bit uniforms; u1 lies in (0, 1] so the log is finite.
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * INV_2_53;
    let u2 = (rng.next_u64() >> 11) as f64 * INV_2_53;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Standard normal draw for `(seed, path, step, coord)` by random access into the stream.
pub fn standard_normal_at(seed: u64, path: usize, step: usize, coord: usize, dim: usize) -> f64 {
    let mut rng = path_rng(seed, path);
    rng.set_word_pos(4 * (step * dim + coord) as u128);
    standard_normal(&mut rng)
}

impl BrownianEnsemble {
    pub fn generate(seed: u64, paths: usize, grid: TimeGrid, dim: usize) -> Result<Self> {
        if paths == 0 || dim == 0 {
            return Err(invalid("generate_paths", format!("need M >= 1 and d >= 1, got M={paths}, d={dim}")));
        }
        let n = grid.steps();
        let sd = grid.dt().sqrt();
        let mut increments = vec![0.0; paths * n * dim];
        par::for_each_chunk(&mut increments, n * dim, |m, chunk| {
            let mut rng = path_rng(seed, m);
            for x in chunk.iter_mut() {
                *x = sd * standard_normal(&mut rng);
            }
        });
        let mut positions = vec![0.0; paths * (n + 1) * dim];
        par::for_each_chunk(&mut positions, (n + 1) * dim, |m, chunk| {
            let inc = &increments[m * n * dim..(m + 1) * n * dim];
            for k in 0..n {
                for c in 0..dim {
                    chunk[(k + 1) * dim + c] = chunk[k * dim + c] + inc[k * dim + c];
                }
            }
        });
        Ok(Self { grid, dim, paths, seed, increments, positions })
    }

    /// Same ensemble with increment `(path, step)` replaced; used to probe adaptedness.
    pub fn with_increment(&self, path: usize, step: usize, value: &[f64]) -> Self {
        let mut out = self.clone();
        let n = self.grid.steps();
        let d = self.dim;
        out.increments[(path * n + step) * d..(path * n + step + 1) * d].copy_from_slice(value);
        for k in step..n {
            for c in 0..d {
                let idx = (path * (n + 1) + k) * d + c;
                out.positions[idx + d] = out.positions[idx] + out.increments[(path * n + k) * d + c];
            }
        }
        out
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    /// `ΔB_k = B_{t_{k+1}} − B_{t_k}` on `path`.
    pub fn increment(&self, path: usize, k: usize) -> &[f64] {
        let n = self.grid.steps();
        let d = self.dim;
        &self.increments[(path * n + k) * d..(path * n + k + 1) * d]
    }

    /// `B_{t_k}` on `path`.
    pub fn position(&self, path: usize, k: usize) -> &[f64] {
        let p = self.grid.steps() + 1;
        let d = self.dim;
        &self.positions[(path * p + k) * d..(path * p + k + 1) * d]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `B_T` restricted to coordinate `coord`, one value per path.
    pub fn terminal_coordinate(&self, coord: usize) -> Vec<f64> {
        (0..self.paths).map(|m| self.position(m, self.steps())[coord]).collect()
    }
}

/// Values of a `k`-dimensional process at every grid point of every path.
///
/// Layout is `[path][time][component]`; matrix-valued processes (`n × d`) are stored
/// row-major in the component axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PathProcess {
    paths: usize,
    points: usize,
    dim: usize,
    /// Set when value `k` is known to depend only on increments before `t_k`.
    pub adapted: bool,
    values: Vec<f64>,
}

impl PathProcess {
    pub fn zeros(paths: usize, points: usize, dim: usize) -> Self {
        Self { paths, points, dim, adapted: true, values: vec![0.0; paths * points * dim] }
    }

    /// Zero process shaped to an ensemble's grid.
    pub fn zeros_like(ens: &BrownianEnsemble, dim: usize) -> Self {
        Self::zeros(ens.paths(), ens.steps() + 1, dim)
    }

    pub fn from_values(paths: usize, points: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != paths * points * dim {
            return Err(shape(
                "PathProcess",
                format!("expected {} values for {paths}x{points}x{dim}, got {}", paths * points * dim, values.len()),
            ));
        }
        Ok(Self { paths, points, dim, adapted: true, values })
    }

    /// Fill from `f(path, k, out)`, parallel over paths.
    pub fn from_fn<F>(ens: &BrownianEnsemble, dim: usize, f: F) -> Self
    where
        F: Fn(usize, usize, &mut [f64]) + Sync + Send,
    {
        let mut p = Self::zeros_like(ens, dim);
        let points = p.points;
        par::for_each_chunk(&mut p.values, points * dim, |m, chunk| {
            for k in 0..points {
                f(m, k, &mut chunk[k * dim..(k + 1) * dim]);
            }
        });
        p
    }

    /// Process constant in time and across paths.
    pub fn constant(ens: &BrownianEnsemble, value: &[f64]) -> Self {
        Self::from_fn(ens, value.len(), |_, _, out| out.copy_from_slice(value))
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, path: usize, k: usize) -> &[f64] {
        let i = (path * self.points + k) * self.dim;
        &self.values[i..i + self.dim]
    }

    pub fn at_mut(&mut self, path: usize, k: usize) -> &mut [f64] {
        let i = (path * self.points + k) * self.dim;
        &mut self.values[i..i + self.dim]
    }

    /// All time points of one path, `points × dim` values.
    pub fn path(&self, path: usize) -> &[f64] {
        let w = self.points * self.dim;
        &self.values[path * w..(path + 1) * w]
    }

    pub fn path_mut(&mut self, path: usize) -> &mut [f64] {
        let w = self.points * self.dim;
        &mut self.values[path * w..(path + 1) * w]
    }

    /// Slices per path, handy for parallel writes.
    pub fn path_chunks_mut(&mut self) -> std::slice::ChunksMut<'_, f64> {
        let w = self.points * self.dim;
        self.values.chunks_mut(w)
    }

    /// Component `c` as a scalar process.
    pub fn component(&self, c: usize) -> PathProcess {
        let mut out = PathProcess::zeros(self.paths, self.points, 1);
        out.adapted = self.adapted;
        for (o, chunk) in out.values.iter_mut().zip(self.values.chunks(self.dim)) {
            *o = chunk[c];
        }
        out
    }

    /// Components `[start, start + len)` as a new process.
    pub fn block(&self, start: usize, len: usize) -> PathProcess {
        let mut out = PathProcess::zeros(self.paths, self.points, len);
        out.adapted = self.adapted;
        for (o, chunk) in out.values.chunks_mut(len).zip(self.values.chunks(self.dim)) {
            o.copy_from_slice(&chunk[start..start + len]);
        }
        out
    }

    /// Overwrite components `[start, start + src.dim())` with `src`.
    pub fn set_block(&mut self, start: usize, src: &PathProcess) -> Result<()> {
        self.check_grid(src, "PathProcess::set_block")?;
        if start + src.dim > self.dim {
            return Err(shape("PathProcess::set_block", "block exceeds process dimension"));
        }
        let len = src.dim;
        for (o, s) in self.values.chunks_mut(self.dim).zip(src.values.chunks(len)) {
            o[start..start + len].copy_from_slice(s);
        }
        Ok(())
    }

    /// Pointwise `self − other`.
    pub fn sub(&self, other: &PathProcess) -> Result<PathProcess> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &PathProcess) -> Result<PathProcess> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &PathProcess, f: impl Fn(f64, f64) -> f64) -> Result<PathProcess> {
        self.check_same_shape(other, "PathProcess")?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(PathProcess { values, adapted: self.adapted && other.adapted, ..*self })
    }

    /// Pointwise map of every stored value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> PathProcess {
        PathProcess { values: self.values.iter().map(|&x| f(x)).collect(), ..*self }
    }

    /// Euclidean (Frobenius for matrices) norm at every point, as a scalar process.
    pub fn pointwise_norm(&self) -> PathProcess {
        self.pointwise_norm_sq().map(f64::sqrt)
    }

    /// Squared Euclidean norm at every point.
    pub fn pointwise_norm_sq(&self) -> PathProcess {
        let values = self.values.chunks(self.dim).map(|c| c.iter().map(|x| x * x).sum()).collect();
        PathProcess { values, dim: 1, ..*self }
    }

    /// Mean and sample standard deviation over paths at grid point `k`, per coordinate.
    pub fn moments_at(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.paths as f64;
        let mut mean = vec![0.0; self.dim];
        for p in 0..self.paths {
            for (s, v) in mean.iter_mut().zip(self.at(p, k)) {
                *s += v;
            }
        }
        mean.iter_mut().for_each(|s| *s /= m);
        let mut var = vec![0.0; self.dim];
        for p in 0..self.paths {
            for ((s, v), mu) in var.iter_mut().zip(self.at(p, k)).zip(&mean) {
                *s += (v - mu) * (v - mu);
            }
        }
        let denom = if self.paths > 1 { m - 1.0 } else { 1.0 };
        (mean, var.into_iter().map(|s| (s / denom).sqrt()).collect())
    }

    pub(crate) fn check_grid(&self, other: &PathProcess, op: &'static str) -> Result<()> {
        if self.paths != other.paths || self.points != other.points {
            return Err(shape(
                op,
                format!("grids differ: {}x{} vs {}x{}", self.paths, self.points, other.paths, other.points),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &PathProcess, op: &'static str) -> Result<()> {
        self.check_grid(other, op)?;
        if self.dim != other.dim {
            return Err(shape(op, format!("dimensions differ: {} vs {}", self.dim, other.dim)));
        }
        Ok(())
    }

    pub(crate) fn check_ensemble(&self, ens: &BrownianEnsemble, op: &'static str) -> Result<()> {
        if self.paths != ens.paths() || self.points != ens.steps() + 1 {
            return Err(shape(
                op,
                format!(
                    "process is {}x{}, ensemble has {} paths and {} grid points",
                    self.paths,
                    self.points,
                    ens.paths(),
                    ens.steps() + 1
                ),
            ));
        }
        Ok(())
    }
}

/// Cumulative Itô sums `I_k = Σ_{j<k} Z_{t_j} ΔB_j` with `I_0 = 0`.
///
/// The integrand has `m · d` components read as an `m × d` matrix; the result has `m`.
pub fn ito_integral(integrand: &PathProcess, ens: &BrownianEnsemble) -> Result<PathProcess> {
    const OP: &str = "ito_integral";
    integrand.check_ensemble(ens, OP)?;
    let d = ens.dim();
    if integrand.dim() % d != 0 {
        return Err(shape(OP, format!("integrand dimension {} is not a multiple of d = {d}", integrand.dim())));
    }
    if !integrand.adapted {
        return Err(invalid(OP, "integrand is not adapted"));
    }
    let rows = integrand.dim() / d;
    let n = ens.steps();
    let mut out = PathProcess::zeros_like(ens, rows);
    par::for_each_chunk(out.values_mut(), (n + 1) * rows, |m, chunk| {
        for k in 0..n {
            let z = integrand.at(m, k);
            let db = ens.increment(m, k);
            for r in 0..rows {
                let mut s = 0.0;
                for c in 0..d {
                    s += z[r * d + c] * db[c];
                }
                chunk[(k + 1) * rows + r] = chunk[k * rows + r] + s;
            }
        }
    });
    Ok(out)
}

/// Cumulative left-endpoint Riemann sums `Σ_{j<k} X_{t_j} Δt`.
pub fn time_integral(integrand: &PathProcess, ens: &BrownianEnsemble) -> Result<PathProcess> {
    integrand.check_ensemble(ens, "time_integral")?;
    let dim = integrand.dim();
    let n = ens.steps();
    let dt = ens.grid().dt();
    let mut out = PathProcess::zeros_like(ens, dim);
    out.adapted = integrand.adapted;
    par::for_each_chunk(out.values_mut(), (n + 1) * dim, |m, chunk| {
        for k in 0..n {
            let x = integrand.at(m, k);
            for c in 0..dim {
                chunk[(k + 1) * dim + c] = chunk[k * dim + c] + x[c] * dt;
            }
        }
    });
    Ok(out)
}
