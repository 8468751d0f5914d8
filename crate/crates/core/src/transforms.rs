//! Invertible linear changes of variables `(Ȳ, Z̄) = (AY, AZ)`, the reductions that
//! use them to reach a solvable structure, and the terminal shift that removes an
//! unbounded martingale part from `ξ`.
//!
//! Matrices are `n×n`, row-major.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::generators::{dot, gallery, norm, norm_sq, row, FnGenerator, Generator, GeneratorSpec, Growth, ParamValue, Point};
use crate::paths::{ito_integral, BrownianEnsemble, PathProcess, Window};
use crate::system::SystemProblem;

/// Where a transform matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformLabel {
    #[serde(rename = "2.11g")]
    RowReplacement,
    #[serde(rename = "2.14b")]
    PinnedColumn,
    #[serde(rename = "2.14g")]
    QuadraticReduction,
    #[serde(rename = "2.16b")]
    Planar,
    #[serde(rename = "2.12d")]
    DiagonalScaling,
    #[serde(rename = "user")]
    User,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Verdict {
    pub applies: bool,
    pub reason: String,
    /// Worst sampled margin per gate; negative means a violation was found.
    pub margins: BTreeMap<String, f64>,
}

/// A matrix `A`, its inverse, and optionally the transformed generator
/// `ḡ(t, ȳ, z̄) = A g(t, A⁻¹ȳ, A⁻¹z̄)`.
#[derive(Debug, Clone, Serialize)]
pub struct TransformSpec {
    pub n: usize,
    pub matrix: Vec<f64>,
    pub inverse: Vec<f64>,
    pub determinant: f64,
    pub condition: f64,
    pub label: TransformLabel,
    #[serde(skip)]
    pub generator: Option<GeneratorSpec>,
    pub verdict: Option<Verdict>,
}

/// `A x` for `x` an `n×cols` row-major block.
pub fn mat_apply(a: &[f64], n: usize, x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * cols];
    for i in 0..n {
        for j in 0..n {
            let aij = a[i * n + j];
            if aij != 0.0 {
                for c in 0..cols {
                    out[i * cols + c] += aij * x[j * cols + c];
                }
            }
        }
    }
    out
}

impl TransformSpec {
    /// Invert `a` and check `A A⁻¹ = I` to `1e-10` relative.
    pub fn from_matrix(a: Vec<f64>, n: usize, label: TransformLabel) -> Result<Self> {
        const OP: &str = "apply_linear_transform";
        if n == 0 || a.len() != n * n {
            return Err(shape(OP, format!("matrix has {} entries, expected {n}x{n}", a.len())));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid(OP, "matrix has non-finite entries"));
        }
        let m = DMatrix::from_row_slice(n, n, &a);
        let det = m.determinant();
        let sv = m.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > smax * 1e-14) {
            return Err(Error::Singular { op: OP });
        }
        let inv = m.clone().try_inverse().ok_or(Error::Singular { op: OP })?;
        let scale = m.abs().max() * inv.abs().max();
        let err = (&m * &inv - DMatrix::identity(n, n)).abs().max();
        if err > 1e-10 * scale.max(1.0) {
            return Err(Error::Singular { op: OP });
        }
        let inverse: Vec<f64> = (0..n * n).map(|k| inv[(k / n, k % n)]).collect();
        Ok(Self { n, matrix: a, inverse, determinant: det, condition: smax / smin, label, generator: None, verdict: None })
    }

    /// Attach `ḡ` built from `spec`.
    pub fn with_generator(mut self, spec: &GeneratorSpec) -> Result<Self> {
        if spec.n() != self.n {
            return Err(shape("apply_linear_transform", format!("generator has n = {} but A is {}x{}", spec.n(), self.n, self.n)));
        }
        let g = LinearTransformed { inner: spec.generator.clone(), a: self.matrix.clone(), a_inv: self.inverse.clone(), n: self.n, d: spec.d() };
        let mut out = spec.clone();
        out.generator = Arc::new(g);
        out.label = format!("{} under {:?}", spec.label, self.label);
        self.generator = Some(out);
        Ok(self)
    }

    pub fn apply(&self, x: &[f64], cols: usize) -> Vec<f64> {
        mat_apply(&self.matrix, self.n, x, cols)
    }

    pub fn apply_inverse(&self, x: &[f64], cols: usize) -> Vec<f64> {
        mat_apply(&self.inverse, self.n, x, cols)
    }

    /// `(AY, AZ)` pointwise.
    pub fn transform_pair(&self, y: &PathProcess, z: &PathProcess) -> Result<(PathProcess, PathProcess)> {
        self.map_pair(y, z, &self.matrix)
    }

    /// `(A⁻¹Ȳ, A⁻¹Z̄)` pointwise.
    pub fn inverse_pair(&self, y: &PathProcess, z: &PathProcess) -> Result<(PathProcess, PathProcess)> {
        self.map_pair(y, z, &self.inverse)
    }

    fn map_pair(&self, y: &PathProcess, z: &PathProcess, m: &[f64]) -> Result<(PathProcess, PathProcess)> {
        let n = self.n;
        y.check_grid(z, "transform_pair")?;
        if y.dim() != n || z.dim() % n != 0 {
            return Err(shape("transform_pair", format!("Y must have {n} components and Z a multiple of {n}")));
        }
        let d = z.dim() / n;
        let mut yo = y.clone();
        let mut zo = z.clone();
        for p in 0..y.paths() {
            for k in 0..y.points() {
                yo.at_mut(p, k).copy_from_slice(&mat_apply(m, n, y.at(p, k), 1));
                zo.at_mut(p, k).copy_from_slice(&mat_apply(m, n, z.at(p, k), d));
            }
        }
        Ok((yo, zo))
    }

    /// The transformed problem: terminal `Aξ` and generator `ḡ`.
    pub fn transform_problem(&self, problem: &SystemProblem) -> Result<SystemProblem> {
        let spec = match &self.generator {
            Some(g) => g.clone(),
            None => self.clone().with_generator(&problem.spec)?.generator.unwrap(),
        };
        let n = self.n;
        let terminal: Vec<f64> = problem.terminal.chunks(n).flat_map(|r| mat_apply(&self.matrix, n, r, 1)).collect();
        Ok(SystemProblem::new(spec, terminal, problem.window))
    }
}

struct LinearTransformed {
    inner: Arc<dyn Generator>,
    a: Vec<f64>,
    a_inv: Vec<f64>,
    n: usize,
    d: usize,
}

impl Generator for LinearTransformed {
    fn n(&self) -> usize {
        self.n
    }
    fn d(&self) -> usize {
        self.d
    }
    fn component(&self, i: usize, at: Point, y: &[f64], z: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n];
        self.eval(at, y, z, &mut out);
        out[i]
    }
    fn eval(&self, at: Point, y: &[f64], z: &[f64], out: &mut [f64]) {
        let yi = mat_apply(&self.a_inv, self.n, y, 1);
        let zi = mat_apply(&self.a_inv, self.n, z, self.d);
        let mut g = vec![0.0; self.n];
        self.inner.eval(at, &yi, &zi, &mut g);
        out.copy_from_slice(&mat_apply(&self.a, self.n, &g, 1));
    }
}

/// `ḡ = A g(A⁻¹ ·)` for an arbitrary invertible `A`.
pub fn apply_linear_transform(spec: &GeneratorSpec, a: &[f64]) -> Result<TransformSpec> {
    TransformSpec::from_matrix(a.to_vec(), spec.n(), TransformLabel::User)?.with_generator(spec)
}

/// Identity with row `pivot` replaced by `b`; `det = b_pivot`.
pub fn row_replacement_at(b: &[f64], pivot: usize) -> Result<TransformSpec> {
    const OP: &str = "build_transform_2_11g";
    let n = b.len();
    if pivot >= n || b[pivot] == 0.0 {
        return Err(invalid(OP, "the pivot entry of b must be non-zero"));
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
    }
    a[pivot * n..(pivot + 1) * n].copy_from_slice(b);
    TransformSpec::from_matrix(a, n, TransformLabel::RowReplacement)
}

/// First row `b`, identity below, so that `ȳ¹ = bᵀy`.
pub fn row_replacement_transform(b: &[f64]) -> Result<TransformSpec> {
    if b.is_empty() || b[0] == 0.0 {
        return Err(invalid(
            "build_transform_2_11g",
            "b_1 must be non-zero; when some other b_i is non-zero, pivot on it with row_replacement_at",
        ));
    }
    row_replacement_at(b, 0)
}

/// First row `b`, row `i ≥ 2` equal to `a₁ e_i − a_i e_1`; `det = a₁^{n−2} bᵀa`.
pub fn pinned_column_transform(a: &[f64], b: &[f64]) -> Result<TransformSpec> {
    const OP: &str = "build_transform_2_14b";
    let n = a.len();
    if n < 2 || b.len() != n {
        return Err(shape(OP, "a and b must have the same length n >= 2"));
    }
    if a[0] == 0.0 {
        return Err(invalid(OP, "a_1 must be non-zero"));
    }
    let ba = dot(a, b);
    if ba == 0.0 {
        return Err(invalid(OP, "b'a must be non-zero"));
    }
    let mut m = vec![0.0; n * n];
    m[..n].copy_from_slice(b);
    for i in 1..n {
        m[i * n] = -a[i];
        m[i * n + i] = a[0];
    }
    let t = TransformSpec::from_matrix(m, n, TransformLabel::PinnedColumn)?;
    let expected = a[0].powi(n as i32 - 2) * ba;
    if (t.determinant - expected).abs() > 1e-9 * expected.abs().max(1.0) {
        return Err(invalid(OP, format!("determinant {} differs from a_1^(n-2) b'a = {expected}", t.determinant)));
    }
    Ok(t)
}

/// `R^{1×d} → R^k` map used for `h` and `h̄`.
pub type RowMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Sampling plan for the gates of the reduction theorems.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatePlan {
    pub samples: usize,
    pub y_radius: f64,
    pub z_radius: f64,
    /// Radius of the ball on which the inf/sup gates are searched.
    pub w_radius: f64,
    pub seed: u64,
}

impl Default for GatePlan {
    fn default() -> Self {
        Self { samples: 4096, y_radius: 10.0, z_radius: 10.0, w_radius: 100.0, seed: 0x5eed }
    }
}

fn slack(rhs: f64, lhs: f64) -> f64 {
    1e-12 * rhs.abs().max(lhs.abs()).max(1.0)
}

fn ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    if nv == 0.0 {
        return v;
    }
    let r = radius * rng.random::<f64>();
    v.iter_mut().for_each(|x| *x *= r / nv);
    v
}

/// Worst value of `f` on the ball `|w| ≤ radius`: sampling, then coordinate descent
/// from the best sample. `minimize` picks inf or sup.
fn search_extremum(f: &dyn Fn(&[f64]) -> f64, d: usize, radius: f64, samples: usize, rng: &mut ChaCha8Rng, minimize: bool) -> f64 {
    let key = |v: f64| if minimize { v } else { -v };
    let mut best_w = vec![0.0; d];
    let mut best = key(f(&best_w));
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        for s in [-1.0, 1.0] {
            let mut w = vec![0.0; d];
            w[k] = s * radius;
            cands.push(w);
        }
    }
    for _ in 0..samples {
        cands.push(ball(rng, d, radius));
    }
    for w in cands {
        let v = key(f(&w));
        if v < best {
            best = v;
            best_w = w;
        }
    }
    let mut step = radius / 4.0;
    while step > radius * 1e-9 {
        let mut improved = false;
        for k in 0..d {
            for s in [-1.0, 1.0] {
                let mut w = best_w.clone();
                w[k] += s * step;
                let nw = norm(&w);
                if nw > radius {
                    w.iter_mut().for_each(|x| *x *= radius / nw);
                }
                let v = key(f(&w));
                if v < best {
                    best = v;
                    best_w = w;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    if minimize {
        best
    } else {
        -best
    }
}

fn record(m: &mut BTreeMap<String, f64>, name: &str, v: f64) {
    let e = m.entry(name.to_string()).or_insert(f64::INFINITY);
    *e = e.min(v);
}

fn bt_z(b: &[f64], z: &[f64], d: usize) -> Vec<f64> {
    let mut w = vec![0.0; d];
    for (j, bj) in b.iter().enumerate() {
        for c in 0..d {
            w[c] += bj * z[j * d + c];
        }
    }
    w
}

/// `g = f + z h(bᵀz)`, with the growth data needed by its gates.
#[derive(Clone)]
pub struct RowInteraction {
    pub f: Arc<dyn Generator>,
    pub h: RowMap,
    pub b: Vec<f64>,
    pub h_lipschitz: f64,
    pub alpha_tilde: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub v: f64,
    pub phi: Growth,
}

impl RowInteraction {
    pub fn generator(&self) -> FnGenerator {
        let (f, h, b) = (self.f.clone(), self.h.clone(), self.b.clone());
        let (n, d) = (f.n(), f.d());
        FnGenerator::new(n, d, move |i, at, y, z| {
            let hw = h(&bt_z(&b, z, d));
            f.component(i, at, y, z) + dot(row(z, i, d), &hw)
        })
    }
}

/// Sample the continuity and growth gates of `g = f + z h(bᵀz)` and, when they hold,
/// return the row-replacement transform together with `ḡ`.
pub fn classify_row_interaction(ri: &RowInteraction, spec_params: &GeneratorSpec, plan: &GatePlan) -> Result<(Verdict, Option<TransformSpec>)> {
    const OP: &str = "classify_2_12b";
    let (n, d) = (ri.f.n(), ri.f.d());
    if ri.b.len() != n || spec_params.n() != n || spec_params.d() != d {
        return Err(shape(OP, "b, f and the generator spec must agree on n and d"));
    }
    let pivot = ri.b.iter().position(|&x| x != 0.0).ok_or_else(|| invalid(OP, "b is the zero vector"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut margins = BTreeMap::new();
    let at = Point::new(0, 0, 0.0);
    let mut fy = vec![0.0; n];
    let mut fy2 = vec![0.0; n];
    for s in 0..plan.samples {
        let y = ball(&mut rng, n, plan.y_radius);
        let z = if s == 0 { vec![0.0; n * d] } else { ball(&mut rng, n * d, plan.z_radius) };
        let y2 = ball(&mut rng, n, plan.y_radius);
        let z2 = ball(&mut rng, n * d, plan.z_radius);
        ri.f.eval(at, &y, &z, &mut fy);
        ri.f.eval(at, &y2, &z2, &mut fy2);
        let base = ri.alpha_tilde + ri.beta * norm(&y);
        // Growth of bᵀf against the combined row.
        let lhs = dot(&ri.b, &fy).abs();
        let rhs = base + ri.gamma / 2.0 * norm_sq(&bt_z(&ri.b, &z, d));
        record(&mut margins, "(2.7b)", rhs - lhs + slack(rhs, lhs));
        for i in (0..n).filter(|&i| i != pivot) {
            let lhs = fy[i].abs();
            let rhs = base + ri.gamma / 2.0 * norm_sq(row(&z, i, d));
            record(&mut margins, "(2.8b)", rhs - lhs + slack(rhs, lhs));
        }
        let diff: Vec<f64> = fy.iter().zip(&fy2).map(|(a, b)| a - b).collect();
        let lhs = norm(&diff);
        let dy: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| a - b).collect();
        let dz: Vec<f64> = z.iter().zip(&z2).map(|(a, b)| a - b).collect();
        let rhs = ri.phi.eval(norm(&y).max(norm(&y2))) * (ri.v + norm(&z).powf(ri.delta) + norm(&z2).powf(ri.delta)) * (norm(&dy) + norm(&dz));
        record(&mut margins, "(2.7e)", rhs - lhs + slack(rhs, lhs));
        let w1 = ball(&mut rng, d, plan.z_radius);
        let w2 = ball(&mut rng, d, plan.z_radius);
        let dh: Vec<f64> = (ri.h)(&w1).iter().zip((ri.h)(&w2)).map(|(a, b)| a - b).collect();
        let dw: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a - b).collect();
        let (lhs, rhs) = (norm(&dh), ri.h_lipschitz * norm(&dw));
        record(&mut margins, "h lipschitz", rhs - lhs + slack(rhs, lhs));
    }
    let failed: Vec<&String> = margins.iter().filter(|(_, &v)| v < 0.0).map(|(k, _)| k).collect();
    let applies = failed.is_empty();
    let reason = if applies {
        format!("no violation found on {} samples; unique global solution in S-infinity x BMO through the transform pivoting on component {}", plan.samples, pivot + 1)
    } else {
        format!("violated gates: {}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "))
    };
    let verdict = Verdict { applies, reason, margins };
    if !applies {
        return Ok((verdict, None));
    }
    let mut spec = spec_params.clone();
    spec.generator = Arc::new(ri.generator());
    let mut t = row_replacement_at(&ri.b, pivot)?.with_generator(&spec)?;
    t.verdict = Some(verdict.clone());
    Ok((verdict, Some(t)))
}

/// The data of `g^1 = f^1 + z^1 h(bᵀz) − h̄_1(bᵀz) − (1/b_1) Σ_{j≥2} a_j b_j |z^j|²`,
/// `g^i = f^i + z^i h(bᵀz) − h̄_i(bᵀz) + a_i |z^i|²`.
#[derive(Clone)]
pub struct QuadraticReduction {
    pub f: Arc<dyn Generator>,
    pub h: RowMap,
    pub h_bar: RowMap,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Lipschitz constant `L` of `h` and of the growth of `h̄`.
    pub lipschitz: f64,
    pub alpha_tilde: f64,
    pub beta: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub c: f64,
}

impl QuadraticReduction {
    pub fn generator(&self) -> FnGenerator {
        let me = self.clone();
        let (n, d) = (self.f.n(), self.f.d());
        FnGenerator::new(n, d, move |i, at, y, z| {
            let w = bt_z(&me.b, z, d);
            let base = me.f.component(i, at, y, z) + dot(row(z, i, d), &(me.h)(&w)) - (me.h_bar)(&w)[i];
            if i == 0 {
                base - (1..n).map(|j| me.a[j] * me.b[j] * norm_sq(row(z, j, d))).sum::<f64>() / me.b[0]
            } else {
                base + me.a[i] * norm_sq(row(z, i, d))
            }
        })
    }
}

/// Sample the regularity gates of [`QuadraticReduction`] and search the inf/sup
/// gates on `|w| ≤ w_radius`. A pass means no violation was found.
pub fn classify_quadratic_reduction(q: &QuadraticReduction, spec_params: &GeneratorSpec, plan: &GatePlan) -> Result<(Verdict, Option<TransformSpec>)> {
    const OP: &str = "classify_2_14g";
    let (n, d) = (q.f.n(), q.f.d());
    if q.a.len() != n || q.b.len() != n || spec_params.n() != n || spec_params.d() != d {
        return Err(shape(OP, "a, b, f and the generator spec must agree on n and d"));
    }
    if q.a[0] != 0.0 {
        return Err(invalid(OP, "a_1 must be zero"));
    }
    if q.b[0] == 0.0 {
        return Err(invalid(OP, "b_1 must be non-zero"));
    }
    if !(q.lipschitz > 0.0 && q.gamma_bar > 0.0 && q.c >= 0.0) {
        return Err(invalid(OP, "need L > 0, gamma_bar > 0 and c >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut m = BTreeMap::new();
    let at = Point::new(0, 0, 0.0);
    let l = q.lipschitz;
    let hb0 = (q.h_bar)(&vec![0.0; d]);
    record(&mut m, "h_bar(0) = 0", -norm(&hb0));
    let h0 = norm(&(q.h)(&vec![0.0; d]));
    record(&mut m, "|h(0)| <= L", l - h0 + slack(l, h0));
    let mut f0 = vec![0.0; n];
    q.f.eval(at, &vec![0.0; n], &vec![0.0; n * d], &mut f0);
    let nf0 = norm(&f0);
    record(&mut m, "|f(0,0)| <= alpha_tilde", q.alpha_tilde - nf0 + slack(q.alpha_tilde, nf0));
    let (mut g1, mut g2) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..plan.samples {
        let w1 = ball(&mut rng, d, plan.w_radius);
        let w2 = ball(&mut rng, d, plan.w_radius);
        let dw = norm(&w1.iter().zip(&w2).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dh = norm(&(q.h)(&w1).iter().zip((q.h)(&w2)).map(|(a, b)| a - b).collect::<Vec<_>>());
        record(&mut m, "h lipschitz", l * dw - dh + slack(l * dw, dh));
        let dhb = norm(&(q.h_bar)(&w1).iter().zip((q.h_bar)(&w2)).map(|(a, b)| a - b).collect::<Vec<_>>());
        let rhs = l * (1.0 + norm(&w1) + norm(&w2)) * dw;
        record(&mut m, "(2.14g)", rhs - dhb + slack(rhs, dhb));
        let (y1, y2) = (ball(&mut rng, n, plan.y_radius), ball(&mut rng, n, plan.y_radius));
        let (z1, z2) = (ball(&mut rng, n * d, plan.z_radius), ball(&mut rng, n * d, plan.z_radius));
        q.f.eval(at, &y1, &z1, &mut g1);
        q.f.eval(at, &y2, &z2, &mut g2);
        let lhs = norm(&g1.iter().zip(&g2).map(|(a, b)| a - b).collect::<Vec<_>>());
        let rhs = q.beta * norm(&y1.iter().zip(&y2).map(|(a, b)| a - b).collect::<Vec<_>>())
            + q.gamma * norm(&z1.iter().zip(&z2).map(|(a, b)| a - b).collect::<Vec<_>>());
        record(&mut m, "(2.12g)", rhs - lhs + slack(rhs, lhs));
    }
    let gb = q.gamma_bar;
    let inner = |w: &[f64]| dot(w, &(q.h)(w)) - dot(&q.b, &(q.h_bar)(w));
    let lower = search_extremum(&|w| inner(w) - gb / 2.0 * norm_sq(w), d, plan.w_radius, plan.samples, &mut rng, true);
    let upper = search_extremum(&|w| inner(w) + gb / 2.0 * norm_sq(w), d, plan.w_radius, plan.samples, &mut rng, false);
    let first = lower + q.c;
    let second = q.c - upper;
    m.insert("(2.15g) inf branch".into(), first);
    m.insert("(2.15g) sup branch".into(), second);
    let mut failed = Vec::new();
    if first.max(second) < -slack(q.c, lower.abs().max(upper.abs())) {
        failed.push("(2.15g): neither branch holds on the sampled ball".to_string());
    }
    for i in 1..n {
        let hb = |w: &[f64]| (q.h_bar)(w)[i];
        let key = format!("(2.16g) component {}", i + 1);
        let margin = if q.a[i] > 0.0 {
            search_extremum(&|w| hb(w) - gb / 2.0 * norm_sq(w), d, plan.w_radius, plan.samples, &mut rng, true) + q.c
        } else if q.a[i] < 0.0 {
            q.c - search_extremum(&|w| hb(w) + gb / 2.0 * norm_sq(w), d, plan.w_radius, plan.samples, &mut rng, false)
        } else {
            f64::NEG_INFINITY
        };
        if margin < -slack(q.c, margin) {
            failed.push(if q.a[i] == 0.0 { format!("{key}: a_i = 0") } else { key.clone() });
        }
        m.insert(key, margin);
    }
    for (k, v) in m.iter() {
        let sampled = !k.starts_with("(2.15g)") && !k.starts_with("(2.16g)");
        if sampled && *v < 0.0 {
            failed.push(k.clone());
        }
    }
    let applies = failed.is_empty();
    let reason = if applies {
        format!("no violation found ({} samples, |w| <= {}); unique global solution in S-infinity x BMO", plan.samples, plan.w_radius)
    } else {
        failed.join("; ")
    };
    let verdict = Verdict { applies, reason, margins: m };
    if !applies {
        return Ok((verdict, None));
    }
    let mut spec = spec_params.clone();
    spec.generator = Arc::new(q.generator());
    let mut t = row_replacement_transform(&q.b)?.with_generator(&spec)?;
    t.label = TransformLabel::QuadraticReduction;
    t.verdict = Some(verdict.clone());
    Ok((verdict, Some(t)))
}

/// `g^i(z) = zᵀA_i z + zᵀk_i + l_i` with `n = 2`, `d = 1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarQuadratic {
    pub a1: [[f64; 2]; 2],
    pub a2: [[f64; 2]; 2],
    #[serde(default)]
    pub k1: [f64; 2],
    #[serde(default)]
    pub k2: [f64; 2],
    #[serde(default)]
    pub l1: f64,
    #[serde(default)]
    pub l2: f64,
}

fn sym(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let o = (m[0][1] + m[1][0]) / 2.0;
    [[m[0][0], o], [o, m[1][1]]]
}

fn quad_form(m: &[[f64; 2]; 2], z: [f64; 2]) -> f64 {
    z[0] * (m[0][0] * z[0] + m[0][1] * z[1]) + z[1] * (m[1][0] * z[0] + m[1][1] * z[1])
}

impl PlanarQuadratic {
    /// The pair `z^i (z¹ + z²) − (κ_i/2)(z^i)²` with `κ = (α, β)`.
    pub fn reciprocal_pair(alpha: f64, beta: f64) -> Self {
        Self { a1: [[1.0 - alpha / 2.0, 0.5], [0.5, 0.0]], a2: [[0.0, 0.5], [0.5, 1.0 - beta / 2.0]], k1: [0.0; 2], k2: [0.0; 2], l1: 0.0, l2: 0.0 }
    }

    pub fn generator(&self) -> FnGenerator {
        let s = *self;
        FnGenerator::new(2, 1, move |i, _, _, z| {
            let zz = [z[0], z[1]];
            if i == 0 {
                quad_form(&s.a1, zz) + zz[0] * s.k1[0] + zz[1] * s.k1[1] + s.l1
            } else {
                quad_form(&s.a2, zz) + zz[0] * s.k2[0] + zz[1] * s.k2[1] + s.l2
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanarCandidate {
    pub a: f64,
    pub b: f64,
    pub iota: f64,
    pub residual: f64,
    /// `(1/a²) [[1,0],[−b,a]] A₂ [[1,−b],[0,a]]`
    pub alpha: [[f64; 2]; 2],
    pub sign_condition: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanarVerdict {
    pub found: bool,
    pub applies: bool,
    /// Selected candidate, normalized to `a = 1`.
    pub chosen: Option<PlanarCandidate>,
    pub candidates: Vec<PlanarCandidate>,
    pub zero_linear_terms: bool,
    pub note: String,
}

fn real_roots(c2: f64, c1: f64, c0: f64) -> Option<Vec<f64>> {
    let scale = c2.abs().max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return None;
    }
    let tiny = 1e-14 * scale;
    if c2.abs() <= tiny {
        if c1.abs() <= tiny {
            return Some(vec![]);
        }
        return Some(vec![-c0 / c1]);
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < -tiny * scale {
        return Some(vec![]);
    }
    let s = disc.max(0.0).sqrt();
    // Stable form avoiding cancellation.
    let qv = -0.5 * (c1 + if c1 >= 0.0 { s } else { -s });
    let mut r = vec![qv / c2];
    if qv != 0.0 {
        r.push(c0 / qv);
    } else {
        r.push(0.0);
    }
    Some(r)
}

/// Search `(a, b, ι)` with `a A₁ + b A₂ = ι (a, b)ᵀ(a, b)` and test the sign
/// condition on the congruent `A₂`.
///
/// Scaling `(a, b)` by `s` scales `ι` by `1/s`, so `a = 1` loses nothing. The first
/// equation gives `ι`, the off-diagonal one a quadratic for `b`, and the remaining
/// one is the residual gate (`≤ 1e-9`).
pub fn check_planar_quadratic(p: &PlanarQuadratic) -> Result<PlanarVerdict> {
    const OP: &str = "check_prop_2_16b";
    let ls = [p.l1, p.l2];
    let mut all = p.a1.iter().chain(p.a2.iter()).flatten().chain(p.k1.iter()).chain(p.k2.iter()).chain(ls.iter());
    if all.any(|v| !v.is_finite()) {
        return Err(invalid(OP, "coefficients must be finite"));
    }
    let (m1, m2) = (sym(p.a1), sym(p.a2));
    let quad = real_roots(m2[0][0], m1[0][0] - m2[0][1], -m1[0][1]);
    let bs = match quad {
        Some(r) => r,
        // Off-diagonal equation holds for every b; use the last one instead.
        None => real_roots(m1[0][0], -m2[1][1], -m1[1][1]).unwrap_or_else(|| vec![0.0]),
    };
    let scale = m1.iter().chain(m2.iter()).flatten().fold(1.0f64, |a, &b| a.max(b.abs()));
    let mut candidates: Vec<PlanarCandidate> = bs
        .into_iter()
        .filter(|b| b.is_finite())
        .map(|b| {
            let iota = m1[0][0] + b * m2[0][0];
            let r = [m1[0][0] + b * m2[0][0] - iota, m1[0][1] + b * m2[0][1] - iota * b, m1[1][1] + b * m2[1][1] - iota * b * b];
            let residual = r.iter().fold(0.0f64, |a, &x| a.max(x.abs())) / scale.max(1.0 + b * b);
            let left = [[1.0, 0.0], [-b, 1.0]];
            let right = [[1.0, -b], [0.0, 1.0]];
            let mut tmp = [[0.0; 2]; 2];
            let mut alpha = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    tmp[i][j] = (0..2).map(|k| m2[i][k] * right[k][j]).sum();
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    alpha[i][j] = (0..2).map(|k| left[i][k] * tmp[k][j]).sum();
                }
            }
            let tol = 1e-12 * scale;
            let (a11, a22) = (alpha[0][0], alpha[1][1]);
            let sign_condition = (a11.abs() <= tol && a22.abs() > tol) || a11 * a22 < 0.0;
            PlanarCandidate { a: 1.0, b, iota, residual, alpha, sign_condition }
        })
        .collect();
    candidates.sort_by(|x, y| x.residual.total_cmp(&y.residual));
    let accepted: Vec<&PlanarCandidate> = candidates.iter().filter(|c| c.residual <= 1e-9).collect();
    let chosen = accepted.iter().find(|c| c.sign_condition).or(accepted.first()).map(|c| (*c).clone()).or_else(|| candidates.first().cloned());
    let found = !accepted.is_empty();
    let applies = found && chosen.as_ref().is_some_and(|c| c.sign_condition);
    let zero_linear = p.k1 == [0.0; 2] && p.k2 == [0.0; 2] && p.l1 == 0.0 && p.l2 == 0.0;
    let note = if zero_linear {
        String::new()
    } else {
        "linear and constant terms are carried through the transform; the sufficient condition is established for the purely quadratic case".into()
    };
    Ok(PlanarVerdict { found, applies, chosen, candidates, zero_linear_terms: zero_linear, note })
}

/// The planar transform `[[a, b], [0, 1]]` for a found candidate.
pub fn planar_transform(p: &PlanarQuadratic, c: &PlanarCandidate) -> Result<TransformSpec> {
    let spec = GeneratorSpec::new(
        Arc::new(p.generator()),
        crate::generators::StructuralParams { n: 2, d: 1, ..Default::default() },
        crate::generators::ParameterProcesses::zero(),
        "planar quadratic",
    );
    TransformSpec::from_matrix(vec![c.a, c.b, 0.0, 1.0], 2, TransformLabel::Planar)?.with_generator(&spec)
}

/// `1/α + 1/β = 1` to `1e-12`.
pub fn check_reciprocal_condition(alpha: f64, beta: f64) -> Result<bool> {
    if alpha == 0.0 || beta == 0.0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(invalid("check_cor_2_15b", "alpha and beta must be finite and non-zero"));
    }
    Ok((1.0 / alpha + 1.0 / beta - 1.0).abs() <= 1e-12)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingVerdict {
    /// The pair reduces to the known non-solvable form.
    pub nonsolvable: bool,
    /// Diagonal of the scaling matrix.
    pub scaling: Option<[f64; 2]>,
    /// Coefficients `(c₁, c₂)` of `(0, c₁|z̄¹|² + c₂|z̄²|²)` after scaling.
    pub coefficients: Option<[f64; 2]>,
    /// Largest relative deviation from `(0, |z̄¹|² + ½|z̄²|²)` on the samples.
    pub max_deviation: Option<f64>,
    pub reason: String,
}

/// For the diagonal quadratic pair with `θ₁ = ϑ₁ = 0` and `θ₂ϑ₂ > 0`, scale by
/// `diag(√(2θ₂ϑ₂), 2θ₂)` and confirm by sampling that the result is
/// `(0, |z̄¹|² + ½|z̄²|²)`.
pub fn check_nonsolvable_pair(theta1: f64, vartheta1: f64, theta2: f64, vartheta2: f64, d: usize, samples: usize, seed: u64) -> Result<ScalingVerdict> {
    const OP: &str = "check_thm_2_12d";
    if d == 0 {
        return Err(invalid(OP, "d must be at least 1"));
    }
    if !(theta1 == 0.0 && vartheta1 == 0.0 && theta2 * vartheta2 > 0.0) {
        let reason = if theta1 != 0.0 || vartheta1 != 0.0 {
            "first component is not the zero generator".to_string()
        } else {
            "theta2 * vartheta2 <= 0".to_string()
        };
        return Ok(ScalingVerdict { nonsolvable: false, scaling: None, coefficients: None, max_deviation: None, reason });
    }
    let s = [(2.0 * theta2 * vartheta2).sqrt(), 2.0 * theta2];
    let coeffs = [vartheta2 * s[1] / (s[0] * s[0]), theta2 / s[1]];
    let mut over = BTreeMap::new();
    for (k, v) in [("theta1", theta1), ("vartheta1", vartheta1), ("theta2", theta2), ("vartheta2", vartheta2)] {
        over.insert(k.to_string(), ParamValue::Scalar(v));
    }
    let spec = gallery("(2.4b)", d, &over)?;
    let t = TransformSpec::from_matrix(vec![s[0], 0.0, 0.0, s[1]], 2, TransformLabel::DiagonalScaling)?.with_generator(&spec)?;
    let g = t.generator.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let y = ball(&mut rng, 2, 10.0);
        let z = ball(&mut rng, 2 * d, 10.0);
        let out = g.eval(Point::new(0, 0, 0.0), &y, &z)?;
        let target = norm_sq(row(&z, 0, d)) + 0.5 * norm_sq(row(&z, 1, d));
        let dev = out[0].abs().max((out[1] - target).abs()) / target.max(1.0);
        worst = worst.max(dev);
    }
    let ok = worst <= 1e-12;
    Ok(ScalingVerdict {
        nonsolvable: ok,
        scaling: Some(s),
        coefficients: Some(coeffs),
        max_deviation: Some(worst),
        reason: if ok {
            "scales to the pair (0, |z1|^2 + |z2|^2/2), which has bounded terminal values without a global bounded solution".into()
        } else {
            format!("sampled deviation {worst:e} exceeds 1e-12")
        },
    })
}

struct ShiftedGenerator {
    inner: Arc<dyn Generator>,
    h: Arc<PathProcess>,
    integral: Arc<PathProcess>,
}

impl Generator for ShiftedGenerator {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn d(&self) -> usize {
        self.inner.d()
    }
    fn component(&self, i: usize, at: Point, y: &[f64], z: &[f64]) -> f64 {
        let ys: Vec<f64> = y.iter().zip(self.integral.at(at.path, at.step)).map(|(a, b)| a + b).collect();
        let zs: Vec<f64> = z.iter().zip(self.h.at(at.path, at.step)).map(|(a, b)| a + b).collect();
        self.inner.component(i, at, &ys, &zs)
    }
    fn eval(&self, at: Point, y: &[f64], z: &[f64], out: &mut [f64]) {
        let ys: Vec<f64> = y.iter().zip(self.integral.at(at.path, at.step)).map(|(a, b)| a + b).collect();
        let zs: Vec<f64> = z.iter().zip(self.h.at(at.path, at.step)).map(|(a, b)| a + b).collect();
        self.inner.eval(at, &ys, &zs, out);
    }
}

/// A problem with bounded terminal `ξ̄` standing for `ξ = ξ̄ + ∫₀ᵀ H dB`.
#[derive(Debug, Clone)]
pub struct ShiftedProblem {
    pub problem: SystemProblem,
    pub h: Arc<PathProcess>,
    /// `∫₀ᵗ H dB` on the grid.
    pub integral: Arc<PathProcess>,
}

/// `ḡ(t, y, z) = g(t, y + ∫₀ᵗ H dB, z + H_t)` with terminal `ξ̄`.
pub fn shift_terminal(spec: &GeneratorSpec, h: &PathProcess, xi_bar: Vec<f64>, ens: &BrownianEnsemble, window: Window) -> Result<ShiftedProblem> {
    const OP: &str = "shift_terminal";
    let (n, d) = (spec.n(), spec.d());
    h.check_ensemble(ens, OP)?;
    if h.dim() != n * d || d != ens.dim() {
        return Err(shape(OP, format!("H must have {n}x{d} components on a {d}-dimensional ensemble")));
    }
    if xi_bar.len() != ens.paths() * n {
        return Err(shape(OP, format!("xi_bar has {} values, expected {}", xi_bar.len(), ens.paths() * n)));
    }
    if xi_bar.iter().any(|v| !v.is_finite()) {
        return Err(invalid(OP, "xi_bar must be finite"));
    }
    let integral = Arc::new(ito_integral(h, ens)?);
    let h = Arc::new(h.clone());
    let g = ShiftedGenerator { inner: spec.generator.clone(), h: h.clone(), integral: integral.clone() };
    let mut s = spec.clone();
    s.generator = Arc::new(g);
    s.label = format!("{} shifted", spec.label);
    Ok(ShiftedProblem { problem: SystemProblem::new(s, xi_bar, window), h, integral })
}

impl ShiftedProblem {
    /// `(Y, Z) = (Ȳ + ∫H dB, Z̄ + H)`.
    pub fn unshift(&self, y_bar: &PathProcess, z_bar: &PathProcess) -> Result<(PathProcess, PathProcess)> {
        Ok((y_bar.add(&self.integral)?, z_bar.add(&self.h)?))
    }

    /// `(Ȳ, Z̄) = (Y − ∫H dB, Z − H)`.
    pub fn shift(&self, y: &PathProcess, z: &PathProcess) -> Result<(PathProcess, PathProcess)> {
        Ok((y.sub(&self.integral)?, z.sub(&self.h)?))
    }

    /// The original terminal `ξ̄ + ∫₀ᵀ H dB`.
    pub fn original_terminal(&self) -> Vec<f64> {
        let n = self.integral.dim();
        let last = self.integral.points() - 1;
        self.problem
            .terminal
            .chunks(n)
            .enumerate()
            .flat_map(|(p, r)| r.iter().zip(self.integral.at(p, last)).map(|(a, b)| a + b).collect::<Vec<_>>())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{ParameterProcesses, StructuralParams};

    fn quad1() -> GeneratorSpec {
        let g = FnGenerator::new(1, 1, |_, _, _, z| z[0] * z[0]);
        GeneratorSpec::new(Arc::new(g), StructuralParams::default(), ParameterProcesses::zero(), "q")
    }

    #[test]
    fn scaling_halves_quadratic() {
        let t = apply_linear_transform(&quad1(), &[2.0]).unwrap();
        let g = t.generator.unwrap();
        let v = g.eval(Point::new(0, 0, 0.0), &[0.0], &[3.0]).unwrap();
        assert!((v[0] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn row_replacement_examples() {
        let t = row_replacement_transform(&[2.0, 3.0]).unwrap();
        assert_eq!(t.matrix, vec![2.0, 3.0, 0.0, 1.0]);
        assert!((t.determinant - 2.0).abs() < 1e-12);
        let t = row_replacement_transform(&[1.0, -1.0]).unwrap();
        assert_eq!(t.apply(&[5.0, 2.0], 1), vec![3.0, 2.0]);
        assert!(row_replacement_transform(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn pinned_column_examples() {
        let t = pinned_column_transform(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(t.matrix, vec![1.0, 0.0, -1.0, 1.0]);
        assert!(pinned_column_transform(&[2.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).is_err());
        assert!(pinned_column_transform(&[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn reciprocal_condition() {
        assert!(check_reciprocal_condition(2.0, 2.0).unwrap());
        assert!(check_reciprocal_condition(3.0, 1.5).unwrap());
        assert!(!check_reciprocal_condition(2.0, 3.0).unwrap());
        assert!(check_reciprocal_condition(0.0, 1.0).is_err());
    }

    #[test]
    fn planar_reciprocal_pairs() {
        let v = check_planar_quadratic(&PlanarQuadratic::reciprocal_pair(2.0, 2.0)).unwrap();
        let c = v.chosen.unwrap();
        assert!(v.applies);
        assert!((c.b + 1.0).abs() < 1e-12 && c.iota.abs() < 1e-12);
        assert!(c.alpha[0][0].abs() < 1e-12 && (c.alpha[1][1] - 1.0).abs() < 1e-12);

        let v = check_planar_quadratic(&PlanarQuadratic::reciprocal_pair(3.0, 1.5)).unwrap();
        let c = v.chosen.unwrap();
        assert!(v.applies);
        // (a, b, ι) = (−1/2, 1/4, 1) rescaled to a = 1.
        assert!((c.b + 0.5).abs() < 1e-12 && (c.iota + 0.5).abs() < 1e-12);

        let id = PlanarQuadratic { a1: [[1.0, 0.0], [0.0, 1.0]], a2: [[1.0, 0.0], [0.0, 1.0]], k1: [0.0; 2], k2: [0.0; 2], l1: 0.0, l2: 0.0 };
        let v = check_planar_quadratic(&id).unwrap();
        assert!(v.found && !v.applies);
    }

    #[test]
    fn nonsolvable_pair() {
        let v = check_nonsolvable_pair(0.0, 0.0, 0.5, 1.0, 1, 1000, 3).unwrap();
        assert!(v.nonsolvable);
        assert_eq!(v.coefficients, Some([1.0, 0.5]));
        assert!(!check_nonsolvable_pair(0.0, 0.0, -0.5, 1.0, 1, 10, 3).unwrap().nonsolvable);
        assert!(!check_nonsolvable_pair(1.0, 0.0, 1.0, 0.0, 1, 10, 3).unwrap().nonsolvable);
    }

    #[test]
    fn quadratic_reduction_gates() {
        let zero: Arc<dyn Generator> = Arc::new(FnGenerator::new(2, 1, |_, _, _, _| 0.0));
        let spec = GeneratorSpec::new(zero.clone(), StructuralParams { n: 2, ..Default::default() }, ParameterProcesses::zero(), "r");
        let plan = GatePlan { samples: 256, ..Default::default() };
        let base = QuadraticReduction {
            f: zero.clone(),
            h: Arc::new(|w: &[f64]| vec![0.0; w.len()]),
            h_bar: Arc::new(|_: &[f64]| vec![0.0, 0.0]),
            a: vec![0.0, 1.0],
            b: vec![1.0, 0.0],
            lipschitz: 1.0,
            alpha_tilde: 0.0,
            beta: 0.0,
            gamma: 0.0,
            gamma_bar: 1.0,
            c: 0.0,
        };
        let (v, _) = classify_quadratic_reduction(&base, &spec, &plan).unwrap();
        assert!(!v.applies);
        let lin = QuadraticReduction { h: Arc::new(|w: &[f64]| w.to_vec()), ..base.clone() };
        let (v, _) = classify_quadratic_reduction(&lin, &spec, &plan).unwrap();
        assert!(v.margins["(2.15g) inf branch"].abs() < 1e-9);
        // The second component still needs h̄_2 to generate the quadratic.
        let full = QuadraticReduction { h_bar: Arc::new(|w: &[f64]| vec![0.0, 0.5 * w[0] * w[0]]), ..lin };
        let (v, t) = classify_quadratic_reduction(&full, &spec, &plan).unwrap();
        assert!(v.applies, "{}", v.reason);
        assert!(t.is_some());
    }
}
