//! Built-in example generators.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{dot, norm, norm_sq, row, FnGenerator, GeneratorSpec, Growth, ParamProcess, ParameterProcesses, StructuralParams};
use crate::error::{invalid, Result};

/// A parameter override: scalar, vector or row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

pub type GalleryParams = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Serialize)]
pub struct GalleryEntry {
    pub label: &'static str,
    pub components: &'static str,
    pub description: &'static str,
    pub parameters: &'static str,
}

const ENTRIES: &[GalleryEntry] = &[
    GalleryEntry {
        label: "(2.4b)",
        components: "2",
        description: "diagonal quadratic pair: theta_i |z^i|^2 plus cross term vartheta_i |z^j|^2",
        parameters: "theta1, theta2, vartheta1, vartheta2",
    },
    GalleryEntry {
        label: "(2.5b)",
        components: "2",
        description: "pair with a linear cross term in component 1 and an inner-product interaction in component 2",
        parameters: "theta1, vartheta1, theta2, vartheta2, l",
    },
    GalleryEntry {
        label: "(2.5d)",
        components: "3",
        description: "triangular three-component system with mixed quadratic interactions",
        parameters: "vartheta1, theta1, vartheta2, theta2, l21, k2, vartheta3, theta3, kappa3, l31, l32, l33, k3",
    },
    GalleryEntry {
        label: "ex2.7(i)",
        components: "rows of a",
        description: "alternating-sign quadratic system with sub-quadratic upper coupling and a Lipschitz perturbation",
        parameters: "a, delta, alpha_tilde, h_scale",
    },
    GalleryEntry { label: "burgers", components: "d", description: "backward stochastic Burgers system g(y,z) = z y", parameters: "" },
    GalleryEntry {
        label: "ex2.7(iii)",
        components: "rows of c",
        description: "linear-plus-3/2-power growth with lower triangular inner products",
        parameters: "c, alpha_tilde, v",
    },
    GalleryEntry {
        label: "ex2.7(iv)",
        components: "5",
        description: "five-component system mixing the three growth regimes (d = 2)",
        parameters: "a",
    },
    GalleryEntry {
        label: "frei-dosreis",
        components: "2",
        description: "the diagonal pair with theta1 = vartheta1 = 0, theta2 = 1/2, vartheta2 = 1 (no global bounded solution)",
        parameters: "",
    },
    GalleryEntry { label: "zero", components: "n", description: "g = 0", parameters: "n" },
    GalleryEntry { label: "constant", components: "len(kappa)", description: "g = kappa", parameters: "kappa" },
    GalleryEntry { label: "pure-quadratic", components: "1", description: "g = gamma/2 |z|^2", parameters: "gamma" },
    GalleryEntry { label: "linear", components: "n", description: "g = -beta y", parameters: "n, beta" },
];

/// Gallery entries sorted by label.
pub fn list_gallery() -> Vec<GalleryEntry> {
    let mut v = ENTRIES.to_vec();
    v.sort_by(|a, b| a.label.cmp(b.label));
    v
}

/// Reads overrides and remembers which keys were consumed.
struct Overrides<'a> {
    label: &'a str,
    params: &'a GalleryParams,
    used: BTreeSet<&'a str>,
}

impl<'a> Overrides<'a> {
    fn new(label: &'a str, params: &'a GalleryParams) -> Self {
        Self { label, params, used: BTreeSet::new() }
    }

    fn get(&mut self, key: &'a str) -> Option<&'a ParamValue> {
        self.used.insert(key);
        self.params.get(key)
    }

    fn scalar(&mut self, key: &'a str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Scalar(v)) if v.is_finite() => Ok(*v),
            Some(_) => Err(invalid("gallery", format!("{}: parameter {key} must be a finite number", self.label))),
        }
    }

    fn count(&mut self, key: &'a str, default: usize) -> Result<usize> {
        let v = self.scalar(key, default as f64)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(invalid("gallery", format!("{}: parameter {key} must be a positive integer", self.label)));
        }
        Ok(v as usize)
    }

    fn vector(&mut self, key: &'a str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Vector(v)) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v.clone()),
            Some(ParamValue::Scalar(v)) if v.is_finite() => Ok(vec![*v]),
            Some(_) => Err(invalid("gallery", format!("{}: parameter {key} must be a non-empty vector", self.label))),
        }
    }

    fn matrix(&mut self, key: &'a str, default: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        let m = match self.get(key) {
            None => default,
            Some(ParamValue::Matrix(m)) => m.clone(),
            Some(_) => return Err(invalid("gallery", format!("{}: parameter {key} must be a square matrix", self.label))),
        };
        let k = m.len();
        if k == 0 || m.iter().any(|r| r.len() != k || r.iter().any(|x| !x.is_finite())) {
            return Err(invalid("gallery", format!("{}: parameter {key} must be a square matrix", self.label)));
        }
        Ok(m)
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.params.keys().find(|k| !self.used.contains(k.as_str())) {
            return Err(invalid("gallery", format!("{}: unknown parameter {k}", self.label)));
        }
        Ok(())
    }
}

fn params(n: usize, d: usize) -> StructuralParams {
    StructuralParams { n, d, phi: Growth::zero(), ..Default::default() }
}

/// `γ̄` must stay positive even when the strictly quadratic part vanishes.
fn lower_gamma(candidate: f64, gamma: f64) -> f64 {
    if candidate > 0.0 {
        candidate.min(gamma)
    } else {
        gamma
    }
}

/// Construct a gallery generator with Brownian dimension `d`, applying overrides.
pub fn gallery(label: &str, d: usize, overrides: &GalleryParams) -> Result<GeneratorSpec> {
    if d == 0 {
        return Err(invalid("gallery", "Brownian dimension d must be at least 1"));
    }
    let mut o = Overrides::new(label, overrides);
    let spec = match label {
        "(2.4b)" => {
            let t1 = o.scalar("theta1", 1.0)?;
            let t2 = o.scalar("theta2", 1.0)?;
            let v1 = o.scalar("vartheta1", 0.0)?;
            let v2 = o.scalar("vartheta2", 0.0)?;
            diagonal_pair(label, d, t1, t2, v1, v2)
        }
        "frei-dosreis" => diagonal_pair(label, d, 0.0, 0.5, 0.0, 1.0),
        "(2.5b)" => {
            let t1 = o.scalar("theta1", 1.0)?;
            let v1 = o.scalar("vartheta1", 0.1)?;
            let t2 = o.scalar("theta2", 1.0)?;
            let v2 = o.scalar("vartheta2", -1.0)?;
            let l = o.scalar("l", 1.0)?;
            let g = FnGenerator::new(2, d, move |i, _, _, z| {
                let (z1, z2) = (row(z, 0, d), row(z, 1, d));
                match i {
                    0 => t1 * norm_sq(z1) + v1 * norm(z2),
                    _ => v2 * norm_sq(z1) + t2 * norm_sq(z2) + l * dot(z1, z2),
                }
            });
            let mut p = params(2, d);
            // Bounds from the sandwich of the second component (valid when θ₂ > 0 > ϑ₂).
            let (up2, lo2, cbar) = if t2 > 0.0 && v2 < 0.0 {
                (t2 - l * l / (2.0 * v2), t2, l * l / (2.0 * t2) - v2)
            } else {
                (t2.abs() + l.abs(), 0.0, v2.abs() + l.abs())
            };
            p.gamma = (2.0 * t1.abs()).max(2.0 * up2).max(1e-12);
            p.gamma_bar = lower_gamma((2.0 * t1.abs()).min(lo2), p.gamma);
            p.c_bar = cbar.max(0.0);
            p.lambda = v1.abs();
            p.lambda_bar = v1.abs();
            GeneratorSpec::new(Arc::new(g), p, ParameterProcesses::zero(), label)
        }
        "(2.5d)" => three_component(label, d, &mut o)?,
        "ex2.7(i)" => {
            let a = o.matrix("a", vec![vec![1.0, 0.5], vec![0.5, 1.0]])?;
            let delta = o.scalar("delta", 0.5)?;
            let at = o.scalar("alpha_tilde", 1.0)?;
            let hs = o.scalar("h_scale", 0.5)?;
            if a.iter().flatten().any(|&x| x <= 0.0) {
                return Err(invalid("gallery", "ex2.7(i): every entry of a must be positive"));
            }
            if !(0.0..1.0).contains(&delta) || at < 0.0 {
                return Err(invalid("gallery", "ex2.7(i): need delta in [0,1) and alpha_tilde >= 0"));
            }
            let n = a.len();
            let am = a.clone();
            let g = FnGenerator::new(n, d, move |i, _, y, z| {
                let mut s = 0.0;
                for (j, &aij) in am[i].iter().enumerate() {
                    let r = norm(row(z, j, d));
                    s += match j.cmp(&i) {
                        std::cmp::Ordering::Less => aij * r * r,
                        std::cmp::Ordering::Equal => -aij * r * r,
                        std::cmp::Ordering::Greater => aij * r.powf(1.0 + delta),
                    };
                }
                // Components are 1-based in the sign (−1)^i.
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                at + sign * s + hs * y[i].sin()
            });
            let amax = a.iter().flatten().fold(0.0f64, |m, &x| m.max(x));
            let dmin = (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min);
            let dmax = (0..n).map(|i| a[i][i]).fold(0.0f64, f64::max);
            let mut p = params(n, d);
            p.gamma = 2.0 * dmax;
            p.gamma_bar = 2.0 * dmin;
            p.delta = delta;
            p.lambda = amax;
            p.lambda_bar = amax;
            p.c_bar = amax;
            p.c = amax;
            p.phi = Growth::Polynomial { c: (2.0 * amax * (1.0 + delta)).max(hs.abs()).max(1.0), m: 1.0 };
            let procs = ParameterProcesses {
                v: ParamProcess::Constant(1.0),
                alpha_tilde: ParamProcess::Constant(at + hs.abs()),
                alpha_bar: ParamProcess::Constant(at + hs.abs()),
                alpha: ParamProcess::Constant(at + hs.abs()),
            };
            GeneratorSpec::new(Arc::new(g), p, procs, label)
        }
        "burgers" => {
            let n = d;
            let g = FnGenerator::new(n, d, move |i, _, y, z| dot(row(z, i, d), y));
            let mut p = params(n, d);
            p.phi = Growth::Polynomial { c: 1.0, m: 1.0 };
            GeneratorSpec::new(Arc::new(g), p, ParameterProcesses::constant(1.0, 0.0), label)
        }
        "ex2.7(iii)" => {
            let c = o.matrix("c", vec![vec![1.0, 0.0], vec![0.5, -1.0]])?;
            let at = o.scalar("alpha_tilde", 1.0)?;
            let v = o.scalar("v", 1.0)?;
            if at < 0.0 || v < 0.0 {
                return Err(invalid("gallery", "ex2.7(iii): alpha_tilde and v must be non-negative"));
            }
            let n = c.len();
            let cm = c.clone();
            let g = FnGenerator::new(n, d, move |i, _, y, z| {
                let zi = row(z, i, d);
                let r = norm(zi);
                let inner: f64 = (0..=i).map(|j| cm[i][j] * dot(zi, row(z, j, d))).sum();
                at + (v + norm(y).exp()) * r + (-y[i]).exp() * r.powf(1.5) + inner
            });
            let diag = (0..n).map(|i| c[i][i].abs()).fold(0.0f64, f64::max);
            let off = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| c[i][j].abs()).fold(0.0f64, f64::max);
            let mut p = params(n, d);
            p.gamma = 2.0 * (diag + 1.0);
            p.gamma_bar = p.gamma;
            p.c = off;
            p.phi = Growth::Exponential { c: 2.0, rate: 2.0 };
            let procs = ParameterProcesses {
                v: ParamProcess::Constant(v),
                alpha_tilde: ParamProcess::Constant(at),
                alpha_bar: ParamProcess::Constant(at),
                alpha: ParamProcess::Constant(at),
            };
            GeneratorSpec::new(Arc::new(g), p, procs, label)
        }
        "ex2.7(iv)" => {
            let a = o.matrix("a", vec![vec![1.0, 1.0], vec![0.0, 0.0]])?;
            if a.len() != d {
                return Err(invalid("gallery", format!("ex2.7(iv): the matrix a is {0}x{0} but d = {d}", a.len())));
            }
            let g = FnGenerator::new(5, d, move |i, _, y, z| {
                let r = |j: usize| norm(row(z, j, d));
                let yn = norm(y);
                // Inverse trigonometric arguments are clamped to their domain.
                let unit = |x: f64| x.min(1.0);
                match i {
                    0 => (-y[0]).exp() - yn + r(0).powi(2) - r(1).powf(4.0 / 3.0) + r(2).sin(),
                    1 => yn * yn.cos() - r(1).powi(2) + r(0).powf(1.25) - r(3).cos(),
                    2 => {
                        let z1 = row(z, 0, d);
                        let z2 = row(z, 1, d);
                        let z3 = row(z, 2, d);
                        let mix: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
                        let quad: f64 = (0..d).map(|k| z3[k] * (0..d).map(|l| a[k][l] * z3[l]).sum::<f64>()).sum();
                        yn + dot(z3, &mix) + quad - unit(r(4)).asin()
                    }
                    3 => 2.0 * yn * yn.sin() + r(3) - r(4) + unit(r(0)).acos(),
                    _ => y[0] + 3.0 * y[2] - y[3] + y[4] - r(3) + 2.0 * r(4) - r(1).atan(),
                }
            });
            let mut p = params(5, d);
            p.gamma = 3.0;
            p.gamma_bar = 2.0;
            p.lambda = 2.0;
            p.lambda_bar = 2.0;
            p.delta = 1.0 / 3.0;
            p.beta = 4.0;
            p.c = 3.0;
            p.phi = Growth::Exponential { c: 4.0, rate: 1.0 };
            GeneratorSpec::new(Arc::new(g), p, ParameterProcesses::constant(1.0, 2.0), label)
        }
        "zero" => {
            let n = o.count("n", 1)?;
            let mut p = params(n, d);
            p.p = 1.0;
            GeneratorSpec::new(Arc::new(FnGenerator::new(n, d, |_, _, _, _| 0.0)), p, ParameterProcesses::zero(), label)
        }
        "constant" => {
            let k = o.vector("kappa", vec![1.0])?;
            let n = k.len();
            let amax = k.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let kk = k.clone();
            let g = FnGenerator::new(n, d, move |i, _, _, _| kk[i]);
            GeneratorSpec::new(Arc::new(g), params(n, d), ParameterProcesses::constant(0.0, amax), label)
        }
        "pure-quadratic" => {
            let gamma = o.scalar("gamma", 1.0)?;
            if gamma <= 0.0 {
                return Err(invalid("gallery", "pure-quadratic: gamma must be positive"));
            }
            let g = FnGenerator::new(1, d, move |_, _, _, z| gamma / 2.0 * norm_sq(z));
            let mut p = params(1, d);
            p.gamma = gamma;
            p.gamma_bar = gamma;
            GeneratorSpec::new(Arc::new(g), p, ParameterProcesses::zero(), label)
        }
        "linear" => {
            let n = o.count("n", 1)?;
            let beta = o.scalar("beta", 1.0)?;
            let g = FnGenerator::new(n, d, move |i, _, y, _| -beta * y[i]);
            let mut p = params(n, d);
            p.beta = beta.abs();
            GeneratorSpec::new(Arc::new(g), p, ParameterProcesses::zero(), label)
        }
        other => {
            let known: Vec<&str> = ENTRIES.iter().map(|e| e.label).collect();
            return Err(invalid("gallery", format!("unknown label {other:?}; known labels: {}", known.join(", "))));
        }
    };
    o.finish()?;
    Ok(spec)
}

fn diagonal_pair(label: &str, d: usize, t1: f64, t2: f64, v1: f64, v2: f64) -> GeneratorSpec {
    let g = FnGenerator::new(2, d, move |i, _, _, z| {
        let (a, b) = (norm_sq(row(z, 0, d)), norm_sq(row(z, 1, d)));
        match i {
            0 => t1 * a + v1 * b,
            _ => v2 * a + t2 * b,
        }
    });
    let mut p = params(2, d);
    p.gamma = (2.0 * t1.abs().max(t2.abs())).max(1e-12);
    p.gamma_bar = lower_gamma(2.0 * t1.abs().min(t2.abs()), p.gamma);
    p.theta = v1.abs().max(v2.abs());
    p.c_bar = p.theta;
    GeneratorSpec::new(Arc::new(g), p, ParameterProcesses::zero(), label)
}

fn three_component<'a>(label: &str, d: usize, o: &mut Overrides<'a>) -> Result<GeneratorSpec> {
    let v1 = o.scalar("vartheta1", 1.0)?;
    let t1 = o.scalar("theta1", 1.0)?;
    let v2 = o.scalar("vartheta2", -1.0)?;
    let t2 = o.scalar("theta2", 1.0)?;
    let l21 = o.scalar("l21", 1.0)?;
    let k2 = o.scalar("k2", 1.0)?;
    let v3 = o.scalar("vartheta3", -1.0)?;
    let t3 = o.scalar("theta3", -1.0)?;
    let k3c = o.scalar("kappa3", 1.0)?;
    let l31 = o.scalar("l31", 0.5)?;
    let l32 = o.scalar("l32", 0.5)?;
    let l33 = o.scalar("l33", 1.0)?;
    let k3 = o.scalar("k3", 1.0)?;
    let g = FnGenerator::new(3, d, move |i, _, _, z| {
        let (z1, z2, z3) = (row(z, 0, d), row(z, 1, d), row(z, 2, d));
        match i {
            0 => v1 * norm_sq(z1) + t1 * norm(z3),
            1 => v2 * norm_sq(z1) + t2 * norm_sq(z2) + l21 * dot(z2, z1) + k2 * norm(z3),
            _ => {
                v3 * norm_sq(z1)
                    + t3 * norm_sq(z2)
                    + k3c * norm_sq(z3)
                    + l31 * dot(z3, z1)
                    + l32 * dot(z3, z2)
                    + l33 * dot(z1, z2)
                    + k3 * norm(z2)
            }
        }
    });
    let mut p = params(3, d);
    let normalized = t2 > 0.0 && v2 < 0.0 && k3c > 0.0 && t3 < 0.0 && v3 < 0.0 && l33 * l33 < 4.0 * t3 * v3;
    let (up, lo, cbar) = if normalized {
        let q = super::inequalities::ThreeComponentParams { kappa3: k3c, theta3: t3, vartheta3: v3, l31, l32, l33 };
        let eps = q.epsilon();
        let up3 = k3c - l31 * l31 / (4.0 * eps * v3) - l32 * l32 / (4.0 * eps * t3);
        let c3 = (0.5 + l31 * l31 / k3c - v3).max(l33 * l33 / 2.0 + l32 * l32 / k3c - t3);
        let up2 = t2 - l21 * l21 / (2.0 * v2);
        let c2 = l21 * l21 / (2.0 * t2) - v2;
        (up2.max(up3).max(v1.abs()), (2.0 * v1.abs()).min(t2).min(k3c), c2.max(c3))
    } else {
        let s = [v1, t2, v2, l21, v3, t3, k3c, l31, l32, l33].iter().map(|x| x.abs()).sum::<f64>();
        (s, 0.0, s)
    };
    p.gamma = (2.0 * up).max(1e-12);
    p.gamma_bar = lower_gamma(lo, p.gamma);
    p.c_bar = cbar.max(0.0);
    let lin = t1.abs().max(k2.abs()).max(k3.abs());
    p.lambda = lin;
    p.lambda_bar = lin;
    Ok(GeneratorSpec::new(Arc::new(g), p, ParameterProcesses::zero(), label))
}
