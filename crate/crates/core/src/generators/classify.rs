//! Sample-based verification of the growth (B1/C1a/C1b/D1), regularity (B2/D2) and
//! a priori boundedness (AB) conditions.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize, Serializer};

use super::{dot, norm, norm_sq, row, GeneratorSpec, Point, StructuralParams};
use crate::error::{invalid, Result};

/// Relative tolerance for a sampled inequality `lower ≤ f ≤ upper`.
const SLACK: f64 = 1e-12;

/// Where and how densely the conditions are probed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplePlan {
    pub count: usize,
    pub pairs: usize,
    pub y_radius: f64,
    pub z_radius: f64,
    pub seed: u64,
    /// Evaluation points cycled through by the samples (matters only for
    /// path-dependent generators or parameter processes).
    #[serde(skip)]
    pub points: Vec<Point>,
    pub ab: Option<AbSpanSpec>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            count: 4096,
            pairs: 4096,
            y_radius: 10.0,
            z_radius: 10.0,
            seed: 0x5eed,
            points: vec![Point::new(0, 0, 0.0)],
            ab: None,
        }
    }
}

/// Candidate spanning set for (AB) with its bound parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbSpanSpec {
    pub vectors: Vec<Vec<f64>>,
    pub alpha_tilde: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "B1(i)")]
    B1i,
    #[serde(rename = "B1(ii)")]
    B1ii,
    #[serde(rename = "B1(iii)")]
    B1iii,
    #[serde(rename = "C1a(i)")]
    C1ai,
    #[serde(rename = "C1a(ii)")]
    C1aii,
    #[serde(rename = "C1a(iii)")]
    C1aiii,
    #[serde(rename = "C1b(i)")]
    C1bi,
    #[serde(rename = "C1b(ii)")]
    C1bii,
    #[serde(rename = "C1b(iii)")]
    C1biii,
    #[serde(rename = "D1(i)")]
    D1i,
    #[serde(rename = "D1(ii)")]
    D1ii,
    #[serde(rename = "D1(iii)")]
    D1iii,
    #[serde(rename = "none")]
    None,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::B1i => "B1(i)",
            CaseLabel::B1ii => "B1(ii)",
            CaseLabel::B1iii => "B1(iii)",
            CaseLabel::C1ai => "C1a(i)",
            CaseLabel::C1aii => "C1a(ii)",
            CaseLabel::C1aiii => "C1a(iii)",
            CaseLabel::C1bi => "C1b(i)",
            CaseLabel::C1bii => "C1b(ii)",
            CaseLabel::C1biii => "C1b(iii)",
            CaseLabel::D1i => "D1(i)",
            CaseLabel::D1ii => "D1(ii)",
            CaseLabel::D1iii => "D1(iii)",
            CaseLabel::None => "none",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which version of `g^i` was tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `f = g^i`
    Identity,
    /// `f = −g^i`
    Negated,
    /// `f(y, z) = −g^i(y(−y^i; i), z(−z^i; i))`
    Reflected,
}

impl Orientation {
    /// Evaluate `f` for component `i` at `(y, z)` in this orientation.
    pub fn apply(self, spec: &GeneratorSpec, i: usize, at: Point, y: &[f64], z: &[f64]) -> f64 {
        let g = &spec.generator;
        match self {
            Orientation::Identity => g.component(i, at, y, z),
            Orientation::Negated => -g.component(i, at, y, z),
            Orientation::Reflected => {
                let d = g.d();
                let mut yr = y.to_vec();
                yr[i] = -yr[i];
                let mut zr = z.to_vec();
                for v in &mut zr[i * d..(i + 1) * d] {
                    *v = -*v;
                }
                -g.component(i, at, &yr, &zr)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub case: CaseLabel,
    pub orientation: Orientation,
    #[serde(serialize_with = "finite_or_null")]
    pub worst_margin: f64,
    pub violations: usize,
}

impl CaseResult {
    pub fn satisfied(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyVerdict {
    pub label: CaseLabel,
    /// Worst margin of the accepted case; of the least violated case when `label` is none.
    #[serde(serialize_with = "finite_or_null")]
    pub margin: f64,
    pub orientation: Orientation,
    pub cases: Vec<CaseResult>,
}

impl FamilyVerdict {
    pub fn satisfied(&self) -> bool {
        self.label != CaseLabel::None
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentVerdict {
    pub component: usize,
    pub b1: FamilyVerdict,
    pub c1a: FamilyVerdict,
    pub c1b: FamilyVerdict,
    pub d1: FamilyVerdict,
}

/// Outcome of a pairwise (regularity) or one-sided (AB) check.
#[derive(Debug, Clone, Serialize)]
pub struct PairCheck {
    pub satisfied: bool,
    #[serde(serialize_with = "finite_or_null")]
    pub worst_margin: f64,
    pub violations: usize,
    /// Worst margin per component.
    pub per_component: Vec<f64>,
    /// Coincident pairs must give an exactly zero difference.
    pub coincident_exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbCheck {
    pub spans: bool,
    pub witnesses: Vec<Vec<f64>>,
    pub satisfied: bool,
    #[serde(serialize_with = "finite_or_null")]
    pub worst_margin: f64,
    pub per_vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JSets {
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
    pub j3: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationVerdict {
    pub label: String,
    pub samples: usize,
    pub pairs: usize,
    pub components: Vec<ComponentVerdict>,
    pub c1b_sets: JSets,
    pub b2: PairCheck,
    pub d2: PairCheck,
    pub ab: Option<AbCheck>,
}

impl ClassificationVerdict {
    pub fn labels(&self, family: &str) -> Vec<CaseLabel> {
        self.components
            .iter()
            .map(|c| match family {
                "B1" => c.b1.label,
                "C1a" => c.c1a.label,
                "C1b" => c.c1b.label,
                "D1" => c.d1.label,
                _ => CaseLabel::None,
            })
            .collect()
    }
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

struct Sample {
    at: Point,
    y: Vec<f64>,
    z: Vec<f64>,
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn random_direction(rng: &mut ChaCha8Rng, len: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| 2.0 * unit(rng) - 1.0).collect();
    let nv = norm(&v);
    let u = unit(rng);
    let scale = if nv > 0.0 { u * u * radius / nv } else { 0.0 };
    v.iter_mut().for_each(|x| *x *= scale);
    v
}

/// Fixed probes followed by a random stream, so that a larger `count` with the same
/// seed always extends the smaller sample set.
fn draw_samples(n: usize, d: usize, plan: &SamplePlan, count: usize, salt: u64) -> Vec<Sample> {
    let points = if plan.points.is_empty() { vec![Point::new(0, 0, 0.0)] } else { plan.points.clone() };
    let mut out = Vec::with_capacity(count + 2 * (n + 1));
    let zero = || (vec![0.0; n], vec![0.0; n * d]);
    let (y, z) = zero();
    out.push(Sample { at: points[0], y, z });
    for i in 0..n {
        for s in [1.0, -1.0] {
            let (mut y, mut z) = zero();
            y[i] = s * plan.y_radius;
            out.push(Sample { at: points[0], y, z: z.clone() });
            let (y, _) = zero();
            z[i * d] = s * plan.z_radius;
            out.push(Sample { at: points[0], y, z });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(salt);
    for k in 0..count {
        let y = if unit(&mut rng) < 0.25 {
            let _ = random_direction(&mut rng, n, 0.0);
            vec![0.0; n]
        } else {
            random_direction(&mut rng, n, plan.y_radius)
        };
        let mut z = Vec::with_capacity(n * d);
        for _ in 0..n {
            let zero_row = unit(&mut rng) < 0.25;
            let r = random_direction(&mut rng, d, plan.z_radius);
            if zero_row {
                z.extend(std::iter::repeat(0.0).take(d));
            } else {
                z.extend(r);
            }
        }
        let nz = norm(&z);
        if nz > plan.z_radius {
            let s = plan.z_radius / nz;
            z.iter_mut().for_each(|x| *x *= s);
        }
        out.push(Sample { at: points[k % points.len()], y, z });
    }
    out
}

/// Quantities shared by all bounds at one sample.
struct Probe {
    y_norm: f64,
    z_norm: f64,
    rows: Vec<f64>,
    phi: f64,
    v: f64,
    alpha: f64,
    alpha_bar: f64,
    alpha_tilde: f64,
}

impl Probe {
    fn new(spec: &GeneratorSpec, s: &Sample) -> Self {
        let d = spec.d();
        let n = spec.n();
        let y_norm = norm(&s.y);
        let (path, step) = (s.at.path, s.at.step);
        Self {
            y_norm,
            z_norm: norm(&s.z),
            rows: (0..n).map(|j| norm(row(&s.z, j, d))).collect(),
            phi: spec.params.phi.eval(y_norm),
            v: spec.procs.v.value(path, step),
            alpha: spec.procs.alpha.value(path, step),
            alpha_bar: spec.procs.alpha_bar.value(path, step),
            alpha_tilde: spec.procs.alpha_tilde.value(path, step),
        }
    }
}

fn cross_sum(z: &[f64], i: usize, d: usize) -> f64 {
    (0..i).map(|j| dot(row(z, i, d), row(z, j, d)).abs()).sum()
}

/// `(lower, upper)` of a case at one sample, evaluated at `(y, z)`.
fn bounds(case: CaseLabel, p: &StructuralParams, pr: &Probe, s: &Sample, i: usize, d: usize, j1: &[bool], j3: &[bool]) -> (f64, f64) {
    let n = pr.rows.len();
    let zi = pr.rows[i];
    let zi2 = zi * zi;
    let yi = s.y[i];
    // On {y^i = 0} the sign-split brackets carry no information, so both apply.
    let pos = yi >= 0.0;
    let neg = yi <= 0.0;
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let sum_over = |f: &dyn Fn(usize) -> f64, range: &mut dyn Iterator<Item = usize>| -> f64 { range.map(f).sum() };
    let pow = |x: f64, e: f64| x.powf(e);
    let above = |lam: f64| {
        sum_over(&|j| lam * pow(pr.rows[j], 1.0 + p.delta) + p.theta * pr.rows[j] * pr.rows[j], &mut (i + 1..n))
    };
    let below_sq = sum_over(&|j| pr.rows[j] * pr.rows[j], &mut (0..i));
    let off_sq = sum_over(&|j| if j == i { 0.0 } else { pr.rows[j] * pr.rows[j] }, &mut (0..n));
    let quad_lower = |alpha_bar: f64, ygrowth: f64| {
        p.gamma_bar / 2.0 * zi2 - alpha_bar - ygrowth - above(p.lambda_bar) - p.c_bar * below_sq
    };
    let sym = |r: f64| (-r, r);
    match case {
        CaseLabel::B1i => {
            let upper = pr.alpha
                + pr.phi
                + sum_over(&|j| if j == i { 0.0 } else { p.lambda * pow(pr.rows[j], 1.0 + p.delta) + p.theta * pr.rows[j] * pr.rows[j] }, &mut (0..n))
                + p.gamma / 2.0 * zi2;
            (quad_lower(pr.alpha_bar, pr.phi), upper)
        }
        CaseLabel::B1ii => sym(pr.alpha_tilde + pr.phi + (pr.v + pr.phi) * zi + p.c * cross_sum(&s.z, i, d) + p.gamma / 2.0 * zi2),
        CaseLabel::B1iii => sym(pr.alpha_bar + pr.phi + p.lambda_bar * pr.z_norm + p.theta * off_sq),
        CaseLabel::C1ai => {
            let e = 1.0 + p.delta * ind(neg);
            let upper = pr.alpha
                + (p.beta * pr.y_norm * ind(pos) + pr.phi * ind(neg))
                + sum_over(&|j| if j == i { 0.0 } else { p.lambda * pow(pr.rows[j], e) + p.theta * pr.rows[j] * pr.rows[j] }, &mut (0..n))
                + p.gamma / 2.0 * zi2;
            (quad_lower(pr.alpha_bar, p.beta * pr.y_norm), upper)
        }
        CaseLabel::C1aii | CaseLabel::C1aiii => {
            let up = p.beta * yi.abs() * ind(pos) + pr.phi * ind(neg);
            let lo = p.beta * yi.abs() * ind(neg) + pr.phi * ind(pos);
            let l = if case == CaseLabel::C1aii {
                pr.alpha_tilde + pr.v * zi + p.c * cross_sum(&s.z, i, d) + p.gamma / 2.0 * zi2
            } else {
                pr.alpha_bar + p.lambda_bar * pr.z_norm + p.theta * off_sq
            };
            (-lo - l, up + l)
        }
        CaseLabel::C1bi => {
            let lam = p.lambda * sum_over(&|j| if j1[j] { pow(pr.rows[j], 1.0 + p.delta) } else { 0.0 }, &mut (0..n));
            let lower = p.gamma_bar / 2.0 * zi2 - pr.alpha_tilde - p.beta * pr.y_norm - lam;
            let upper = pr.alpha_tilde + (p.beta * pr.y_norm * ind(pos) + pr.phi * ind(neg)) + lam + p.gamma / 2.0 * zi2;
            (lower, upper)
        }
        CaseLabel::C1bii | CaseLabel::C1biii => {
            let up = p.beta * pr.y_norm * ind(pos) + pr.phi * ind(neg);
            let lo = p.beta * pr.y_norm * ind(neg) + pr.phi * ind(pos);
            let l = if case == CaseLabel::C1bii {
                pr.alpha_tilde + (pr.v + pr.phi) * zi + p.c * cross_sum(&s.z, i, d) + p.gamma / 2.0 * zi2
            } else {
                pr.alpha_tilde + p.lambda * sum_over(&|j| if j3[j] { pr.rows[j] } else { 0.0 }, &mut (0..n))
            };
            (-lo - l, up + l)
        }
        CaseLabel::D1i => {
            let upper = pr.alpha
                + p.beta * pr.y_norm
                + sum_over(&|j| if j == i { 0.0 } else { p.lambda * pr.rows[j] + p.theta * pr.rows[j] * pr.rows[j] }, &mut (0..n))
                + p.gamma / 2.0 * zi2;
            (quad_lower(pr.alpha_bar, p.beta * pr.y_norm), upper)
        }
        CaseLabel::D1ii => {
            let below: f64 = (0..i).map(|j| pr.rows[j]).sum();
            sym(pr.alpha_tilde + p.beta * yi.abs() + (pr.v + p.c * below) * zi + p.gamma / 2.0 * zi2)
        }
        CaseLabel::D1iii => sym(pr.alpha_bar + p.beta * yi.abs() + p.lambda_bar * pr.z_norm + p.theta * off_sq),
        CaseLabel::None => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn within(lower: f64, f: f64, upper: f64) -> (f64, bool) {
    let m = (f - lower).min(upper - f);
    let scale = lower.abs().max(upper.abs()).max(f.abs()).max(1.0);
    // NaN margins count as violations.
    (m, m >= -SLACK * scale)
}

struct Evaluated<'a> {
    spec: &'a GeneratorSpec,
    samples: Vec<Sample>,
    probes: Vec<Probe>,
}

impl<'a> Evaluated<'a> {
    fn case(&self, case: CaseLabel, orient: Orientation, i: usize, j1: &[bool], j3: &[bool]) -> CaseResult {
        let d = self.spec.d();
        let mut worst = f64::INFINITY;
        let mut violations = 0;
        for (s, pr) in self.samples.iter().zip(&self.probes) {
            let f = orient.apply(self.spec, i, s.at, &s.y, &s.z);
            let (lo, up) = bounds(case, &self.spec.params, pr, s, i, d, j1, j3);
            let (m, ok) = within(lo, f, up);
            if !ok {
                violations += 1;
            }
            if m.is_nan() {
                worst = f64::NEG_INFINITY;
            } else {
                worst = worst.min(m);
            }
        }
        CaseResult { case, orientation: orient, worst_margin: worst, violations }
    }

    fn family(&self, cases: [CaseLabel; 3], first_orient: [Orientation; 2], i: usize, j1: &[bool], j3: &[bool]) -> FamilyVerdict {
        let mut results = Vec::new();
        for (k, &case) in cases.iter().enumerate() {
            if k == 0 {
                for &o in &first_orient {
                    results.push(self.case(case, o, i, j1, j3));
                }
            } else {
                results.push(self.case(case, Orientation::Identity, i, j1, j3));
            }
        }
        let chosen = results.iter().find(|r| r.satisfied());
        match chosen {
            Some(r) => FamilyVerdict { label: r.case, margin: r.worst_margin, orientation: r.orientation, cases: results.clone() },
            None => {
                let best = results
                    .iter()
                    .max_by(|a, b| a.worst_margin.partial_cmp(&b.worst_margin).unwrap_or(std::cmp::Ordering::Less))
                    .expect("three cases");
                FamilyVerdict { label: CaseLabel::None, margin: best.worst_margin, orientation: best.orientation, cases: results.clone() }
            }
        }
    }
}

/// Classify every component of `spec` against each growth family, and check the
/// regularity conditions on random pairs.
pub fn classify_assumptions(spec: &GeneratorSpec, plan: &SamplePlan) -> Result<ClassificationVerdict> {
    if plan.count == 0 {
        return Err(invalid("classify_assumptions", "sample count must be positive"));
    }
    if !(plan.y_radius >= 0.0 && plan.z_radius >= 0.0) {
        return Err(invalid("classify_assumptions", "sample radii must be non-negative"));
    }
    let (n, d) = (spec.n(), spec.d());
    let samples = draw_samples(n, d, plan, plan.count, 0);
    let probes = samples.iter().map(|s| Probe::new(spec, s)).collect();
    let ev = Evaluated { spec, samples, probes };

    use CaseLabel::*;
    use Orientation::*;
    let all = vec![true; n];
    let b1: Vec<_> = (0..n).map(|i| ev.family([B1i, B1ii, B1iii], [Identity, Negated], i, &all, &all)).collect();
    let c1a: Vec<_> = (0..n).map(|i| ev.family([C1ai, C1aii, C1aiii], [Identity, Reflected], i, &all, &all)).collect();
    let d1: Vec<_> = (0..n).map(|i| ev.family([D1i, D1ii, D1iii], [Identity, Negated], i, &all, &all)).collect();

    // The J-sets enter the bounds of their own members; shrink them until every
    // component's label agrees with the set it sits in.
    let mut j1 = all.clone();
    let mut j3 = all.clone();
    let mut c1b = Vec::new();
    for _ in 0..=n + 1 {
        c1b = (0..n).map(|i| ev.family([C1bi, C1bii, C1biii], [Identity, Reflected], i, &j1, &j3)).collect::<Vec<_>>();
        let nj1: Vec<bool> = c1b.iter().map(|v: &FamilyVerdict| v.label == C1bi).collect();
        let nj3: Vec<bool> = c1b.iter().map(|v| v.label == C1biii).collect();
        if nj1 == j1 && nj3 == j3 {
            break;
        }
        j1 = nj1;
        j3 = nj3;
    }
    let sets = JSets {
        j1: (0..n).filter(|&i| c1b[i].label == C1bi).map(|i| i + 1).collect(),
        j2: (0..n).filter(|&i| c1b[i].label == C1bii).map(|i| i + 1).collect(),
        j3: (0..n).filter(|&i| c1b[i].label == C1biii).map(|i| i + 1).collect(),
    };

    let components = (0..n)
        .map(|i| ComponentVerdict { component: i + 1, b1: b1[i].clone(), c1a: c1a[i].clone(), c1b: c1b[i].clone(), d1: d1[i].clone() })
        .collect();

    let b2 = check_b2(spec, plan)?;
    let d2 = check_d2(spec, plan)?;
    let ab = plan.ab.as_ref().map(|ab| check_ab(spec, ab, plan)).transpose()?;
    Ok(ClassificationVerdict {
        label: spec.label.clone(),
        samples: ev.samples.len(),
        pairs: plan.pairs,
        components,
        c1b_sets: sets,
        b2,
        d2,
        ab,
    })
}

/// Regularity bound shape shared by B2 and D2.
#[derive(Clone, Copy)]
enum Regularity {
    B2,
    D2,
}

fn pair_check(spec: &GeneratorSpec, plan: &SamplePlan, kind: Regularity) -> Result<PairCheck> {
    let (n, d) = (spec.n(), spec.d());
    let p = &spec.params;
    let a = draw_samples(n, d, plan, plan.pairs, 1);
    let b = draw_samples(n, d, plan, plan.pairs, 2);
    let mut per = vec![f64::INFINITY; n];
    let mut violations = 0;
    let mut coincident_exact = true;
    for (sa, sb) in a.iter().zip(&b) {
        let v = spec.procs.v.value(sa.at.path, sa.at.step);
        let (zn, zbn) = (norm(&sa.z), norm(&sb.z));
        let dy = norm(&sa.y.iter().zip(&sb.y).map(|(x, y)| x - y).collect::<Vec<_>>());
        let drow: Vec<f64> =
            (0..n).map(|j| norm(&row(&sa.z, j, d).iter().zip(row(&sb.z, j, d)).map(|(x, y)| x - y).collect::<Vec<_>>())).collect();
        let lin = v + zn + zbn;
        for i in 0..n {
            let gi = spec.generator.component(i, sa.at, &sa.y, &sa.z);
            let gib = spec.generator.component(i, sa.at, &sb.y, &sb.z);
            let lhs = (gi - gib).abs();
            let head: f64 = drow[..=i].iter().sum();
            let tail: f64 = drow[i + 1..].iter().sum();
            let rhs = match kind {
                Regularity::B2 => {
                    let phi = p.phi.eval(norm(&sa.y).max(norm(&sb.y)));
                    let e = 1.0 + p.delta;
                    phi * ((v.powf(e) + zn.powf(e) + zbn.powf(e)) * dy
                        + lin * head
                        + ((v.powf(p.delta) + zn.powf(p.delta) + zbn.powf(p.delta)) + p.theta * lin) * tail)
                }
                Regularity::D2 => {
                    p.gamma * lin * (dy + head)
                        + (p.gamma * (v.powf(p.delta) + zn.powf(p.delta) + zbn.powf(p.delta)) + p.theta * lin) * tail
                }
            };
            let (m, ok) = within(f64::NEG_INFINITY, lhs, rhs);
            if !ok {
                violations += 1;
            }
            per[i] = if m.is_nan() { f64::NEG_INFINITY } else { per[i].min(m) };
            // The same point twice must give exactly zero.
            if spec.generator.component(i, sa.at, &sa.y, &sa.z) != gi {
                coincident_exact = false;
            }
        }
    }
    let worst = per.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PairCheck { satisfied: violations == 0 && coincident_exact, worst_margin: worst, violations, per_component: per, coincident_exact })
}

/// B2: the `φ`-weighted local Lipschitz condition.
pub fn check_b2(spec: &GeneratorSpec, plan: &SamplePlan) -> Result<PairCheck> {
    pair_check(spec, plan, Regularity::B2)
}

/// D2: the `γ`-weighted local Lipschitz condition (linear growth in `y`).
pub fn check_d2(spec: &GeneratorSpec, plan: &SamplePlan) -> Result<PairCheck> {
    pair_check(spec, plan, Regularity::D2)
}

/// AB: positive spanning plus `a_kᵀg ≤ α̃ + γ|a_kᵀz|²` on the sample box.
pub fn check_ab(spec: &GeneratorSpec, ab: &AbSpanSpec, plan: &SamplePlan) -> Result<AbCheck> {
    let (n, d) = (spec.n(), spec.d());
    if ab.vectors.iter().any(|a| a.len() != n) {
        return Err(invalid("check_ab", format!("every vector must have length {n}")));
    }
    let (spans, witnesses) = check_ab_span(&ab.vectors)?;
    let samples = draw_samples(n, d, plan, plan.count, 3);
    let mut per = vec![f64::INFINITY; ab.vectors.len()];
    let mut ok = true;
    let mut g = vec![0.0; n];
    for s in &samples {
        spec.generator.eval(s.at, &s.y, &s.z, &mut g);
        for (k, a) in ab.vectors.iter().enumerate() {
            let lhs = dot(a, &g);
            let az: Vec<f64> = (0..d).map(|c| (0..n).map(|j| a[j] * s.z[j * d + c]).sum()).collect();
            let rhs = ab.alpha_tilde + ab.gamma * norm_sq(&az);
            let (m, good) = within(f64::NEG_INFINITY, lhs, rhs);
            ok &= good;
            per[k] = if m.is_nan() { f64::NEG_INFINITY } else { per[k].min(m) };
        }
    }
    let worst = per.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AbCheck { spans, witnesses, satisfied: ok && spans, worst_margin: worst, per_vector: per })
}

/// Does `{a_k}` positively span `R^n`? Each `±e_i` is fitted by non-negative least
/// squares; the witnesses are the weights, ordered `+e_1, −e_1, +e_2, …`.
pub fn check_ab_span(vectors: &[Vec<f64>]) -> Result<(bool, Vec<Vec<f64>>)> {
    const OP: &str = "check_ab_span";
    let k = vectors.len();
    if k == 0 {
        return Err(invalid(OP, "no vectors given"));
    }
    let n = vectors[0].len();
    if n == 0 || vectors.iter().any(|v| v.len() != n) {
        return Err(invalid(OP, "vectors must share a positive length"));
    }
    if let Some(i) = vectors.iter().position(|v| norm(v) == 0.0 || v.iter().any(|x| !x.is_finite())) {
        return Err(invalid(OP, format!("vector {} is zero or non-finite", i + 1)));
    }
    let a = DMatrix::from_fn(n, k, |r, c| vectors[c][r]);
    let mut spans = true;
    let mut witnesses = Vec::with_capacity(2 * n);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut b = DVector::zeros(n);
            b[i] = s;
            let w = nnls(&a, &b);
            let res = (&a * &w - &b).norm();
            spans &= res <= 1e-9;
            witnesses.push(w.iter().copied().collect());
        }
    }
    Ok((spans, witnesses))
}

/// Lawson–Hanson active-set NNLS: `min ‖Ax − b‖` subject to `x ≥ 0`.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let k = a.ncols();
    let tol = 1e-12 * (1.0 + a.amax()) * (1.0 + b.amax());
    let mut x = DVector::zeros(k);
    let mut passive = vec![false; k];
    for _ in 0..(3 * k + 10) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..k).filter(|&j| !passive[j] && w[j] > tol).max_by(|&p, &q| w[p].partial_cmp(&w[q]).unwrap());
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let s_p = match sub.clone().svd(true, true).solve(b, 1e-14) {
                Ok(s) => s,
                Err(_) => return x,
            };
            let mut s = DVector::zeros(k);
            for (c, &j) in idx.iter().enumerate() {
                s[j] = s_p[c];
            }
            if idx.iter().all(|&j| s[j] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &idx {
                if s[j] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - s[j]));
                }
            }
            x = &x + (s - &x) * alpha;
            for &j in &idx {
                if x[j] <= 1e-15 {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    x
}
