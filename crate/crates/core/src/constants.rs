//! Explicit constants of the local and global existence arguments.
//!
//! Everything here is plain arithmetic on the structural parameters and on norm
//! estimates supplied by the caller. `c0` is the uniform constant of the scalar
//! comparison estimate; it has no closed form, so every report that depends on it
//! echoes the value it was computed with.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::generators::StructuralParams;

/// Cap on the number of pasting steps evaluated for the global bound.
pub const MAX_PASTING_STEPS: usize = 10_000_000;

/// Norm estimates entering the constant chains.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormInputs {
    /// `‖ξ‖∞`
    pub xi_inf: f64,
    /// `‖α‖_{E∞(r)}` at the exponent the chain asks for.
    pub alpha_einf: f64,
    /// `‖ᾱ‖_{M∞}`
    pub alpha_bar_minf: f64,
    /// `‖α̃‖_{L∞}`
    pub alpha_tilde_linf: f64,
    /// `‖v‖_BMO`
    pub v_bmo: f64,
    pub c0: f64,
    pub horizon: f64,
}

impl NormInputs {
    fn validate(&self, op: &'static str) -> Result<()> {
        for (name, v) in [
            ("xi_inf", self.xi_inf),
            ("alpha_einf", self.alpha_einf),
            ("alpha_bar_minf", self.alpha_bar_minf),
            ("alpha_tilde_linf", self.alpha_tilde_linf),
            ("v_bmo", self.v_bmo),
            ("c0", self.c0),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(op, format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(op, format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }
}

/// Young constant `λ (1−δ)/2 · (p n r λ (1+δ) / (p−1))^{(1+δ)/(1−δ)}`, taken as 0
/// when `λ = 0`.
pub fn young_constant(p: f64, n: usize, r: f64, lambda: f64, delta: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let e = (1.0 + delta) / (1.0 - delta);
    lambda * (1.0 - delta) / 2.0 * (p * n as f64 * r * lambda * (1.0 + delta) / (p - 1.0)).powf(e)
}

/// The local constant `C_{p,n,γ,λ,δ}`: the Young constant at `r = γ`, plus one.
pub fn local_c(p: f64, n: usize, gamma: f64, lambda: f64, delta: f64) -> f64 {
    young_constant(p, n, gamma, lambda, delta) + 1.0
}

/// `C^0 = 0`, `C^i = C^{i−1} + C₁ + C₂ (C^{i−1})^{(1+δ)/(1−δ)}` for `i = 1..=n`.
pub fn c1_recursion(c1: f64, c2: f64, delta: f64, n: usize) -> Vec<f64> {
    let e = (1.0 + delta) / (1.0 - delta);
    let mut out = vec![0.0];
    for i in 1..=n {
        let prev = out[i - 1];
        out.push(prev + c1 + c2 * prev.powf(e));
    }
    out
}

/// The five terms whose minimum bounds the local window length, given `φ(K)`.
pub fn local_epsilon_terms(horizon: f64, phi_k: f64, n: usize, c: f64, lambda_bar: f64, delta: f64, k: f64) -> [f64; 5] {
    let nf = n as f64;
    [
        horizon,
        1.0 / (1.0 + phi_k).powi(2),
        1.0 / (nf * c * k.powf((1.0 + delta) / (1.0 - delta))),
        (1.0 / (1.0 + 2.0 * nf * lambda_bar * k.powf((1.0 + delta) / 2.0))).powf(2.0 / (1.0 - delta)),
        1.0 / (1.0 + nf * nf * lambda_bar * lambda_bar * k),
    ]
}

/// `1 / (4 n (qγ ∨ 1) K)`.
pub fn theta_max(n: usize, q: f64, gamma: f64, k: f64) -> f64 {
    1.0 / (4.0 * n as f64 * (q * gamma).max(1.0) * k)
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalConstantsReport {
    /// `C_{p,n,γ,λ,δ}`
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    /// `C₁^i` for `i = 0..=n`.
    pub c1_sequence: Vec<f64>,
    /// `K = C₁^n`
    pub k: f64,
    pub phi_k: f64,
    pub epsilon_terms: [f64; 5],
    pub epsilon_max: f64,
    pub theta_max: f64,
    pub q: f64,
    /// The constants above are conditional on this value of `c0`.
    pub c0: f64,
    pub params: StructuralParams,
    pub inputs: NormInputs,
}

/// Local constants `C`, `C₁`, `C₂`, the recursion `C₁^i`, `K`, and the admissible
/// window length and `θ` range derived from them.
pub fn compute_local_constants(params: &StructuralParams, inputs: &NormInputs) -> Result<LocalConstantsReport> {
    const OP: &str = "compute_local_constants";
    params.validate_exponent()?;
    params.validate().map_err(|e| invalid(OP, e.to_string()))?;
    inputs.validate(OP)?;
    let sp = params;
    let n = sp.n as f64;
    let (g, gb) = (sp.gamma, sp.gamma_bar);
    let t = inputs.horizon;
    let xi = inputs.xi_inf;
    let c = local_c(sp.p, sp.n, g, sp.lambda, sp.delta);
    let quad = 4.0 * (g + 1.0) / (g * g) * (4.0 * g * (xi + inputs.alpha_tilde_linf + 1.0)).exp();
    let lb2t = sp.lambda_bar * sp.lambda_bar * t;
    let c1 = (2.0 + gb) / gb
        * (8.0 + 2f64.ln() / g + 3.0 * xi + inputs.alpha_einf + 2.0 * inputs.alpha_bar_minf + n * c * t + 2.0 * n * sp.c_bar)
        + quad * (5.0 + inputs.alpha_tilde_linf + 3.0 * inputs.v_bmo.powi(2) + 3.0 * n * n * sp.c * sp.c)
        + 1.0
        + inputs.c0 * (2.0 * lb2t).exp() * (54.0 + xi * xi + 6.0 * inputs.alpha_bar_minf.powi(2) + 6.0 * n * n * lb2t);
    let c2 = (2.0 + gb) / gb * (2.0 * c * t + 4.0 * sp.c_bar)
        + 3.0 * n * sp.c * sp.c * quad
        + 12.0 * n * inputs.c0 * lb2t * (2.0 * lb2t).exp();
    let seq = c1_recursion(c1, c2, sp.delta, sp.n);
    let k = seq[sp.n];
    let phi_k = sp.phi.eval(k);
    let terms = local_epsilon_terms(t, phi_k, sp.n, c, sp.lambda_bar, sp.delta, k);
    let eps = terms.iter().copied().fold(f64::INFINITY, f64::min);
    let q = sp.q();
    Ok(LocalConstantsReport {
        c,
        c1,
        c2,
        c1_sequence: seq,
        k,
        phi_k,
        epsilon_terms: terms,
        epsilon_max: eps,
        theta_max: theta_max(sp.n, q, g, k),
        q,
        c0: inputs.c0,
        params: params.clone(),
        inputs: *inputs,
    })
}

/// `n γ p λ² / (2(p−1)) · e^{βT}`, taken as 0 when `λ = 0`.
pub fn global_c(p: f64, n: usize, beta: f64, gamma: f64, lambda: f64, horizon: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    n as f64 * gamma * p * lambda * lambda / (2.0 * (p - 1.0)) * (beta * horizon).exp()
}

/// The increasing function `Φ` of the global a priori bound, stored by its
/// coefficients: `Φ(x) = lead (base + 3x) + quad + 1 + tail (tail_base + x²)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhiFunction {
    pub lead: f64,
    pub base: f64,
    pub quad: f64,
    pub tail: f64,
    pub tail_base: f64,
}

impl PhiFunction {
    pub fn new(params: &StructuralParams, inputs: &NormInputs) -> Self {
        let sp = params;
        let t = inputs.horizon;
        let n = sp.n as f64;
        let ebt = (sp.beta * t).exp();
        let lead = (2.0 * (1.0 + sp.beta * t) + sp.gamma_bar) / sp.gamma_bar * (2.0 * sp.beta * t).exp();
        let base = 2.0
            + 2.0 * n * sp.lambda_bar * t.powf((1.0 - sp.delta) / 2.0)
            + 2f64.ln() / (sp.gamma * ebt)
            + inputs.alpha_einf
            + 2.0 * inputs.alpha_bar_minf;
        let s = inputs.xi_inf + inputs.alpha_tilde_linf;
        let quad = 4.0 * (sp.gamma + 1.0) / sp.gamma.powi(2)
            * (4.0 * sp.gamma * ebt * s).exp()
            * (sp.beta * t * ebt * s + 1.0 + inputs.alpha_tilde_linf + 2.0 * inputs.v_bmo.powi(2));
        let tail = inputs.c0 * (2.0 * sp.beta * t + 2.0 * sp.lambda_bar.powi(2) * t).exp();
        let tail_base = 6.0 + 6.0 * inputs.alpha_bar_minf.powi(2);
        Self { lead, base, quad, tail, tail_base }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.lead * (self.base + 3.0 * x) + self.quad + 1.0 + self.tail * (self.tail_base + x * x)
    }
}

/// `C̄₅^1 = 1`, `C̄₅^i = C̄₅^{i−1} + 1 + C̄₄ C̄₅^{i−1}`; entry `i−1` holds `C̄₅^i`.
pub fn c5_recursion(c4: f64, n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 1..n {
        let prev = *out.last().unwrap();
        out.push(prev + 1.0 + c4 * prev);
    }
    out
}

/// `C̄₆^1 = 2 C̄₁ C̄₅`, `C̄₆^{m+1} = C̄₆^m + 2 Φ(C̄₆^m) C̄₅` for `m = 1..count`.
///
/// Stops early once the sequence leaves the finite range.
pub fn c6_sequence(c1bar: f64, c5n: f64, phi: impl Fn(f64) -> f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count.min(1 << 16));
    if count == 0 {
        return out;
    }
    out.push(2.0 * c1bar * c5n);
    while out.len() < count {
        let prev = *out.last().unwrap();
        let next = prev + 2.0 * phi(prev) * c5n;
        out.push(next);
        if !next.is_finite() {
            break;
        }
    }
    out
}

/// Inputs of the global bound under the (i)/(ii)/(iii) partition of the components.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionInputs {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub beta: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub lambda: f64,
    pub delta: f64,
    pub horizon: f64,
    /// Bound on `‖ξ‖∞`.
    pub c1: f64,
    /// Bound on `‖∫ α̃ dt‖∞`.
    pub c2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionConstants {
    pub epsilon0: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub k_tilde: f64,
    pub inputs: PartitionInputs,
}

#[derive(Debug, Clone, Serialize)]
pub struct PastingConstants {
    pub phi: PhiFunction,
    pub c_lambda: f64,
    pub c1bar: f64,
    pub c2bar: f64,
    pub c3bar: f64,
    pub c4bar: f64,
    /// `C̄₅^i` for `i = 1..=n`.
    pub c5bar: Vec<f64>,
    pub epsilon0: f64,
    /// `1 + ⌈T/ε₀⌉`
    pub steps: Option<usize>,
    /// Leading entries of `C̄₆^m`, at most 64 of them.
    pub c6bar_head: Vec<f64>,
    /// `C̄₆` at index `1 + ⌈T/ε₀⌉`; infinite when the sequence overflows, absent
    /// when the index exceeds [`MAX_PASTING_STEPS`].
    pub k_tilde: Option<f64>,
    pub theta_max: Option<f64>,
    pub c0: f64,
    pub params: StructuralParams,
    pub inputs: NormInputs,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalConstantsReport {
    pub pasting: Option<PastingConstants>,
    pub partition: Option<PartitionConstants>,
}

/// Constants of the global bound under the (C1a)-type structure, ending in `K̃`.
///
/// `inputs.alpha_einf` is read as `‖α‖_{E∞(pγ e^{βT})}`.
pub fn compute_global_constants_41(params: &StructuralParams, inputs: &NormInputs) -> Result<PastingConstants> {
    const OP: &str = "compute_global_constants_41";
    if params.p == 1.0 && (params.lambda > 0.0 || params.theta > 0.0) {
        return Err(invalid(OP, "p = 1 is admissible only when lambda = 0 and theta = 0"));
    }
    params.validate().map_err(|e| invalid(OP, e.to_string()))?;
    inputs.validate(OP)?;
    let sp = params;
    let t = inputs.horizon;
    let n = sp.n as f64;
    let (g, gb, b) = (sp.gamma, sp.gamma_bar, sp.beta);
    let phi = PhiFunction::new(sp, inputs);
    let e2bt = (2.0 * b * t).exp();
    let c_lambda = global_c(sp.p, sp.n, b, g, sp.lambda, t);
    let c1bar = phi.eval(inputs.xi_inf);
    let c2bar = (6.0 * b * (1.0 + b * t) + 3.0 * b * gb) / gb * e2bt;
    let c3bar = phi.lead * (c_lambda + 2.0 * n * sp.lambda_bar)
        + 12.0 * n * inputs.c0 * sp.lambda_bar.powi(2) * t * (2.0 * b * t + 2.0 * sp.lambda_bar.powi(2) * t).exp();
    let c4bar = (4.0 * sp.c_bar * (1.0 + b * t) + 2.0 * sp.c * gb) / gb * e2bt
        + 8.0 * n * sp.c * sp.c * (g + 1.0) / (g * g)
            * (4.0 * g * (b * t).exp() * (inputs.xi_inf + inputs.alpha_tilde_linf)).exp();
    let c5bar = c5_recursion(c4bar, sp.n);
    let c5n = *c5bar.last().unwrap();
    let eps0 = 1f64
        .min(1.0 / (2.0 * c2bar * c5n))
        .min((1.0 / (2.0 * c3bar * c5n)).powf(2.0 / (1.0 - sp.delta)));
    let ratio = (t / eps0).ceil();
    let steps = (ratio.is_finite() && ratio + 1.0 <= MAX_PASTING_STEPS as f64).then(|| 1 + ratio as usize);
    let (head, k_tilde) = match steps {
        Some(m) => {
            let seq = c6_sequence(c1bar, c5n, |x| phi.eval(x), m);
            let last = *seq.last().unwrap();
            let k = if seq.len() == m { last } else { f64::INFINITY };
            (seq.into_iter().take(64).collect(), Some(k))
        }
        None => (c6_sequence(c1bar, c5n, |x| phi.eval(x), 64), None),
    };
    let theta = k_tilde.map(|k| theta_max(sp.n, sp.q(), g, k));
    Ok(PastingConstants {
        phi,
        c_lambda,
        c1bar,
        c2bar,
        c3bar,
        c4bar,
        c5bar,
        epsilon0: eps0,
        steps,
        c6bar_head: head,
        k_tilde,
        theta_max: theta,
        c0: inputs.c0,
        params: params.clone(),
        inputs: *inputs,
    })
}

/// Constants of the global bound when the components split into the three (C1b)
/// cases; `K̃ = C₆ exp(C₇ T)`.
///
/// With `n₁ = 0` the terms that carry `1/n₁`, and the case-(i) part of `C₇`, are
/// dropped.
pub fn compute_global_constants_42c(q: &PartitionInputs) -> Result<PartitionConstants> {
    const OP: &str = "compute_global_constants_42c";
    for (name, v) in [("beta", q.beta), ("lambda", q.lambda), ("c1", q.c1), ("c2", q.c2)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(OP, format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    if !(q.gamma > 0.0 && q.gamma_bar > 0.0 && q.gamma.is_finite() && q.gamma_bar.is_finite()) {
        return Err(invalid(OP, "gamma and gamma_bar must be positive"));
    }
    if !(0.0..1.0).contains(&q.delta) {
        return Err(invalid(OP, format!("delta must lie in [0, 1), got {}", q.delta)));
    }
    if !(q.horizon > 0.0 && q.horizon.is_finite()) {
        return Err(invalid(OP, "horizon must be positive"));
    }
    if q.n1 + q.n2 + q.n3 == 0 {
        return Err(invalid(OP, "the partition is empty"));
    }
    let (g, gb, d, t, b, l) = (q.gamma, q.gamma_bar, q.delta, q.horizon, q.beta, q.lambda);
    let (n1, n2, n3) = (q.n1 as f64, q.n2 as f64, q.n3 as f64);
    let eps0 = (gb / 9.0).min(g / 24.0);
    let young = ((1.0 + d) / 2.0).powf((1.0 + d) / (1.0 - d));
    let (c3, c4, c5) = if q.n1 == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let c3 = gb * eps0 * (1.0 - d) / (8.0 * n1) * young * (12.0 * n1 * l / gb).powf(2.0 / (1.0 - d));
        let c4 = gb * eps0 * (1.0 - d) / (4.0 * n1) * young * (2.0 * n1 * n1 * l * g / (gb * eps0)).powf(2.0 / (1.0 - d));
        let c5 = 2.0 * n1 * (q.c1 + q.c2) + 2.0 * c4 * t / g + (12.0 * eps0 * q.c2 + 4.0 * c3 * t) / g;
        (c3, c4, c5)
    };
    let c6 = 2.0 * c5 * c5 + 2.0 * n2 * n2 * (q.c1 + q.c2).powi(2) + 2.0 * q.c1 * q.c1 + 4.0 * n3 * q.c2 * q.c2;
    let first = if q.n1 == 0 { 0.0 } else { 8.0 * b * b * t * (n1 + 1.0).powi(2) };
    let c7 = first + 2.0 * t * n2 * n2 * b * b + 4.0 * n3 * (b + n3 * l * l);
    Ok(PartitionConstants { epsilon0: eps0, c3, c4, c5, c6, c7, k_tilde: c6 * (c7 * t).exp(), inputs: *q })
}

/// Left and right sides of `λ x^{1+δ} ≤ (p−1)/(2pnr m²) x² + C m^{2(1+δ)/(1−δ)}`
/// with `C` the Young constant; `x ≥ 0`, `m > 0`.
pub fn young_bmo_sides(lambda: f64, p: f64, n: usize, r: f64, delta: f64, x: f64, m: f64) -> (f64, f64) {
    let lhs = lambda * x.powf(1.0 + delta);
    let rhs = (p - 1.0) / (2.0 * p * n as f64 * r * m * m) * x * x
        + young_constant(p, n, r, lambda, delta) * m.powf(2.0 * (1.0 + delta) / (1.0 - delta));
    (lhs, rhs)
}

/// Left and right sides of `a b^{1+δ} ≤ b² + (1−δ)/2 ((1+δ)/2)^{(1+δ)/(1−δ)} a^{2/(1−δ)}`.
pub fn young_power_sides(a: f64, b: f64, delta: f64) -> (f64, f64) {
    let lhs = a * b.powf(1.0 + delta);
    let rhs = b * b + (1.0 - delta) / 2.0 * ((1.0 + delta) / 2.0).powf((1.0 + delta) / (1.0 - delta)) * a.powf(2.0 / (1.0 - delta));
    (lhs, rhs)
}

#[derive(Debug, Clone, Serialize)]
pub struct YoungReport {
    pub samples: usize,
    /// Worst relative margin `(rhs − lhs) / max(1, rhs)`.
    pub worst_margin_bmo: f64,
    pub worst_margin_power: f64,
    pub violations: usize,
}

/// Sample both Young inequalities on random `(a, b, λ, δ, p)` draws.
pub fn verify_young_inequalities(samples: usize, seed: u64) -> YoungReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut w1, mut w2) = (f64::INFINITY, f64::INFINITY);
    let mut violations = 0;
    let rel = |(l, r): (f64, f64)| (r - l) / r.abs().max(1.0);
    for _ in 0..samples {
        // Log-uniform magnitudes so that both tails are visited.
        let mag = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi));
        let delta = rng.random_range(0.0..0.9);
        let p = 1.0 + mag(&mut rng, -2.0, 1.0);
        let n = rng.random_range(1..=5usize);
        let r = mag(&mut rng, -1.0, 1.0);
        let lambda = if rng.random_bool(0.1) { 0.0 } else { mag(&mut rng, -2.0, 0.5) };
        let x = if rng.random_bool(0.1) { 0.0 } else { mag(&mut rng, -3.0, 2.0) };
        let m = mag(&mut rng, -1.0, 1.0);
        let a = if rng.random_bool(0.1) { 0.0 } else { mag(&mut rng, -3.0, 1.5) };
        let b = mag(&mut rng, -3.0, 2.0);
        let m1 = rel(young_bmo_sides(lambda, p, n, r, delta, x, m));
        let m2 = rel(young_power_sides(a, b, delta));
        if m1 < -1e-12 || m2 < -1e-12 {
            violations += 1;
        }
        w1 = w1.min(m1);
        w2 = w2.min(m2);
    }
    YoungReport { samples, worst_margin_bmo: w1, worst_margin_power: w2, violations }
}
