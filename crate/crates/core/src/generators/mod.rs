//! Generators `g(t, y, z)`, their structural constants, the example gallery and the
//! sample-based classifiers for the growth and regularity conditions.
//!
//! `z ∈ R^{n×d}` is passed row-major: row `i` (the `i`-th component's martingale
//! integrand) occupies `z[i*d..(i+1)*d]`.

mod classify;
mod gallery;
mod inequalities;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::PathProcess;

pub use classify::{
    check_ab, check_ab_span, check_b2, check_d2, classify_assumptions, AbCheck, AbSpanSpec, CaseLabel, CaseResult,
    ClassificationVerdict, ComponentVerdict, FamilyVerdict, JSets, Orientation, PairCheck, SamplePlan,
};
pub use gallery::{gallery, list_gallery, GalleryEntry, GalleryParams, ParamValue};
pub use inequalities::{three_component_bounds, two_component_sandwich, Sandwich, ThreeComponentParams};

/// Location of an evaluation: path index, grid step and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub path: usize,
    pub step: usize,
    pub t: f64,
}

impl Point {
    pub fn new(path: usize, step: usize, t: f64) -> Self {
        Self { path, step, t }
    }
}

/// An `n`-dimensional drift with `z ∈ R^{n×d}`.
///
/// Implementations must be pure and safe to call concurrently.
pub trait Generator: Send + Sync {
    fn n(&self) -> usize;
    fn d(&self) -> usize;
    /// Component `i` of `g(t, y, z)`.
    fn component(&self, i: usize, at: Point, y: &[f64], z: &[f64]) -> f64;

    fn eval(&self, at: Point, y: &[f64], z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.component(i, at, y, z);
        }
    }
}

type ComponentFn = dyn Fn(usize, Point, &[f64], &[f64]) -> f64 + Send + Sync;

/// Generator defined by a closure `(i, point, y, z) -> g^i`.
#[derive(Clone)]
pub struct FnGenerator {
    n: usize,
    d: usize,
    f: Arc<ComponentFn>,
}

impl FnGenerator {
    pub fn new(n: usize, d: usize, f: impl Fn(usize, Point, &[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { n, d, f: Arc::new(f) }
    }
}

impl Generator for FnGenerator {
    fn n(&self) -> usize {
        self.n
    }
    fn d(&self) -> usize {
        self.d
    }
    fn component(&self, i: usize, at: Point, y: &[f64], z: &[f64]) -> f64 {
        (self.f)(i, at, y, z)
    }
}

/// Nondecreasing growth function `φ` on `[0, ∞)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Growth {
    /// `c (1 + x^m)`
    Polynomial { c: f64, m: f64 },
    /// `c e^{rate x}`
    Exponential { c: f64, rate: f64 },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Growth {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Growth::Polynomial { c, m } => c * (1.0 + x.powf(*m)),
            Growth::Exponential { c, rate } => c * (rate * x).exp(),
            Growth::Custom(f) => f(x),
        }
    }

    /// The identically zero growth function.
    pub fn zero() -> Self {
        Growth::Polynomial { c: 0.0, m: 1.0 }
    }
}

impl fmt::Debug for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Growth::Polynomial { c, m } => write!(f, "Polynomial {{ c: {c}, m: {m} }}"),
            Growth::Exponential { c, rate } => write!(f, "Exponential {{ c: {c}, rate: {rate} }}"),
            Growth::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// The constants `n, d, γ, γ̄, λ, λ̄, c, c̄, θ, δ, β, p` and growth function `φ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructuralParams {
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub lambda: f64,
    pub lambda_bar: f64,
    pub c: f64,
    pub c_bar: f64,
    pub theta: f64,
    pub delta: f64,
    pub beta: f64,
    /// Integrability exponent; `p = 1` is allowed only with `λ = 0` and `θ = 0`.
    pub p: f64,
    pub phi: Growth,
}

impl Default for StructuralParams {
    fn default() -> Self {
        Self {
            n: 1,
            d: 1,
            gamma: 1.0,
            gamma_bar: 1.0,
            lambda: 0.0,
            lambda_bar: 0.0,
            c: 0.0,
            c_bar: 0.0,
            theta: 0.0,
            delta: 0.0,
            beta: 0.0,
            p: 2.0,
            phi: Growth::Polynomial { c: 1.0, m: 1.0 },
        }
    }
}

impl StructuralParams {
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "StructuralParams";
        if self.n == 0 || self.d == 0 {
            return Err(invalid(OP, "n and d must be at least 1"));
        }
        if !(self.gamma_bar > 0.0 && self.gamma_bar <= self.gamma) {
            return Err(invalid(OP, format!("need 0 < gamma_bar <= gamma, got {} and {}", self.gamma_bar, self.gamma)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(invalid(OP, format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("lambda_bar", self.lambda_bar),
            ("c", self.c),
            ("c_bar", self.c_bar),
            ("theta", self.theta),
            ("beta", self.beta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(OP, format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        if !(self.p >= 1.0) {
            return Err(invalid(OP, format!("p must be at least 1, got {}", self.p)));
        }
        let mut prev = self.phi.eval(0.0);
        if !(prev >= 0.0) {
            return Err(invalid(OP, "phi(0) must be non-negative"));
        }
        for k in 1..=200 {
            let v = self.phi.eval(k as f64 * 0.1);
            if !(v >= prev) {
                return Err(invalid(OP, format!("phi decreases near x = {}", k as f64 * 0.1)));
            }
            prev = v;
        }
        Ok(())
    }

    /// The exception `p = 1` requires `λ = 0` and `θ = 0`.
    pub fn validate_exponent(&self) -> Result<()> {
        if self.p == 1.0 && (self.lambda > 0.0 || self.theta > 0.0) {
            return Err(invalid(
                "compute_local_constants",
                "p = 1 is admissible only when lambda = 0 and theta = 0 (the local existence result holds for p = 1 only in that case)",
            ));
        }
        Ok(())
    }

    /// Conjugate exponent `q = p / (p − 1)`, taken as 0 when `p = 1`.
    pub fn q(&self) -> f64 {
        if self.p == 1.0 {
            0.0
        } else {
            self.p / (self.p - 1.0)
        }
    }
}

/// A non-negative parameter process: constant, or sampled on an ensemble.
#[derive(Debug, Clone)]
pub enum ParamProcess {
    Constant(f64),
    Path(Arc<PathProcess>),
}

impl ParamProcess {
    pub fn value(&self, path: usize, step: usize) -> f64 {
        match self {
            ParamProcess::Constant(c) => *c,
            ParamProcess::Path(p) => p.at(path, step)[0],
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            ParamProcess::Constant(c) => *c,
            ParamProcess::Path(p) => p.values().iter().fold(0.0f64, |a, &b| a.max(b)),
        }
    }
}

/// `(v, α̃, ᾱ, α)` in their BMO, L∞, M∞ and E∞(pγ) roles.
#[derive(Debug, Clone)]
pub struct ParameterProcesses {
    pub v: ParamProcess,
    pub alpha_tilde: ParamProcess,
    pub alpha_bar: ParamProcess,
    pub alpha: ParamProcess,
}

impl ParameterProcesses {
    pub fn zero() -> Self {
        Self::constant(0.0, 0.0)
    }

    /// `v ≡ v`, and every α-type process equal to `alpha`.
    pub fn constant(v: f64, alpha: f64) -> Self {
        Self {
            v: ParamProcess::Constant(v),
            alpha_tilde: ParamProcess::Constant(alpha),
            alpha_bar: ParamProcess::Constant(alpha),
            alpha: ParamProcess::Constant(alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("v", &self.v), ("alpha_tilde", &self.alpha_tilde), ("alpha_bar", &self.alpha_bar), ("alpha", &self.alpha)] {
            let ok = match p {
                ParamProcess::Constant(c) => *c >= 0.0 && c.is_finite(),
                ParamProcess::Path(pp) => pp.dim() == 1 && pp.values().iter().all(|&x| x >= 0.0 && x.is_finite()),
            };
            if !ok {
                return Err(invalid("ParameterProcesses", format!("{name} must be a finite non-negative scalar process")));
            }
        }
        Ok(())
    }
}

/// An evaluable generator together with its structural description.
#[derive(Clone)]
pub struct GeneratorSpec {
    pub generator: Arc<dyn Generator>,
    pub params: StructuralParams,
    pub procs: ParameterProcesses,
    pub label: String,
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("label", &self.label)
            .field("n", &self.generator.n())
            .field("d", &self.generator.d())
            .field("params", &self.params)
            .finish()
    }
}

impl GeneratorSpec {
    pub fn new(generator: Arc<dyn Generator>, params: StructuralParams, procs: ParameterProcesses, label: &str) -> Self {
        Self { generator, params, procs, label: label.to_string() }
    }

    pub fn n(&self) -> usize {
        self.generator.n()
    }

    pub fn d(&self) -> usize {
        self.generator.d()
    }

    /// `g(t, y, z)` with a finiteness check naming the offending component.
    pub fn eval(&self, at: Point, y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let (n, d) = (self.n(), self.d());
        if y.len() != n || z.len() != n * d {
            return Err(Error::Shape {
                op: "eval_generator",
                msg: format!("expected y in R^{n} and z in R^{n}x{d}, got {} and {} values", y.len(), z.len()),
            });
        }
        let mut out = vec![0.0; n];
        self.generator.eval(at, y, z, &mut out);
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "eval_generator", component: i });
        }
        Ok(out)
    }
}

pub(crate) fn row(z: &[f64], i: usize, d: usize) -> &[f64] {
    &z[i * d..(i + 1) * d]
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
