//! Estimators for the process norms S∞, L∞, M∞, BMO and E∞(r) on a window `[a, b]`.
//!
//! Suprema over stopping times are replaced by suprema over grid times and paths, and
//! conditional expectations come from [`crate::regression`]. Vector-valued inputs are
//! reduced to their pointwise Euclidean norm, scalar inputs to their absolute value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::paths::{BrownianEnsemble, PathProcess, Window};
use crate::regression::{Projector, RegressionOptions};

/// Largest exponent passed to `exp` before an estimate is flagged as overflowing.
pub const EXP_CAP: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub sup_norm: f64,
    pub linf: f64,
    pub minf: f64,
    pub bmo: f64,
    pub einf: BTreeMap<String, f64>,
    pub interval: [f64; 2],
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub basis_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnNirenbergReport {
    pub bmo_sq: f64,
    pub applicable: bool,
    pub exp_moment: Option<f64>,
    pub bound: Option<f64>,
    pub satisfied: bool,
}

/// Norm estimators bound to one ensemble.
#[derive(Debug, Clone)]
pub struct Norms<'a> {
    ens: &'a BrownianEnsemble,
    pub regression: RegressionOptions,
    pub exp_cap: f64,
}

impl<'a> Norms<'a> {
    pub fn new(ens: &'a BrownianEnsemble) -> Self {
        Self { ens, regression: RegressionOptions::default(), exp_cap: EXP_CAP }
    }

    pub fn with_regression(mut self, regression: RegressionOptions) -> Self {
        self.regression = regression;
        self
    }

    fn check(&self, proc: &PathProcess, w: Window, op: &'static str) -> Result<()> {
        proc.check_ensemble(self.ens, op)?;
        if w.is_empty() || w.b > self.ens.steps() {
            return Err(invalid(op, format!("empty or out-of-grid interval [{}, {}]", w.a, w.b)));
        }
        Ok(())
    }

    fn magnitude(proc: &PathProcess) -> PathProcess {
        if proc.dim() == 1 {
            proc.map(f64::abs)
        } else {
            proc.pointwise_norm()
        }
    }

    /// Tail sums `S_k = Σ_{k<=j<b} x_j Δt` for `k ∈ [a, b]`, laid out `[k - a][path]`.
    fn tail_integrals(&self, x: &PathProcess, w: Window) -> Vec<Vec<f64>> {
        let dt = self.ens.grid().dt();
        let len = w.len() + 1;
        let per_path: Vec<Vec<f64>> = par::map_indices(self.ens.paths(), |m| {
            let mut s = vec![0.0; len];
            for k in (w.a..w.b).rev() {
                s[k - w.a] = s[k + 1 - w.a] + x.at(m, k)[0] * dt;
            }
            s
        });
        (0..len).map(|i| per_path.iter().map(|s| s[i]).collect()).collect()
    }

    /// Regression estimate of `E_k[target]`, kept inside the range of `target`.
    fn fitted(&self, k: usize, w: Window, target: Vec<f64>) -> Result<Vec<f64>> {
        if k == w.b {
            return Ok(target);
        }
        let (lo, hi) = target.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let fit = Projector::at_step(self.ens, k, &self.regression)?.conditional_expectation(&target);
        Ok(fit.into_iter().map(|v| v.clamp(lo, hi)).collect())
    }

    /// `sup_{k ∈ [a,b]} sup_paths E_k[S_k]`.
    fn sup_conditional(&self, x: &PathProcess, w: Window) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for (i, s) in self.tail_integrals(x, w).into_iter().enumerate() {
            best = self.fitted(w.a + i, w, s)?.into_iter().fold(best, f64::max);
        }
        Ok(best)
    }

    /// Max over paths and grid times in `[a, b]` of the pointwise norm.
    pub fn sup_norm(&self, proc: &PathProcess, w: Window) -> Result<f64> {
        self.check(proc, w, "estimate_sup_norm")?;
        let mag = Self::magnitude(proc);
        let mut best = 0.0f64;
        for m in 0..self.ens.paths() {
            for k in w.a..=w.b {
                best = best.max(mag.at(m, k)[0]);
            }
        }
        Ok(best)
    }

    /// Pathwise max of `∫_a^b |x| ds`.
    pub fn linf(&self, proc: &PathProcess, w: Window) -> Result<f64> {
        self.check(proc, w, "estimate_linf")?;
        let tails = self.tail_integrals(&Self::magnitude(proc), w);
        Ok(tails[0].iter().fold(0.0f64, |b, &v| b.max(v)))
    }

    /// `sup_k sup_paths E_k[∫_{t_k}^b |x| ds]`.
    pub fn minf(&self, proc: &PathProcess, w: Window) -> Result<f64> {
        self.check(proc, w, "estimate_minf")?;
        Ok(self.sup_conditional(&Self::magnitude(proc), w)?.max(0.0))
    }

    /// Squared BMO estimate, which is by construction `minf(|x|²)`.
    pub fn bmo_squared(&self, proc: &PathProcess, w: Window) -> Result<f64> {
        self.check(proc, w, "estimate_bmo")?;
        self.minf(&proc.pointwise_norm_sq(), w)
    }

    pub fn bmo(&self, proc: &PathProcess, w: Window) -> Result<f64> {
        Ok(self.bmo_squared(proc, w)?.sqrt())
    }

    /// `sup_k sup_paths E_k[exp(r S_k)]`, with each fitted value raised to at least
    /// `exp(r E_k[S_k])` so the two regressions respect Jensen's inequality.
    fn exp_sup(&self, x: &PathProcess, r: f64, w: Window, op: &'static str) -> Result<f64> {
        let tails = self.tail_integrals(x, w);
        let top = tails[0].iter().fold(0.0f64, |b, &v| b.max(v));
        if r * top > self.exp_cap {
            return Err(Error::Overflow { op, exponent: r * top, cap: self.exp_cap });
        }
        let mut best = f64::NEG_INFINITY;
        for (i, s) in tails.into_iter().enumerate() {
            let k = w.a + i;
            let e = self.fitted(k, w, s.iter().map(|&v| (r * v).exp()).collect())?;
            let m = self.fitted(k, w, s)?;
            best = e.iter().zip(&m).fold(best, |b, (&e, &m)| b.max(e.max((r * m).exp())));
        }
        Ok(best)
    }

    /// `(1/r) ln sup_k sup_paths E_k[exp(r ∫_{t_k}^b |x| ds)]`.
    pub fn einf(&self, proc: &PathProcess, r: f64, w: Window) -> Result<f64> {
        const OP: &str = "estimate_einf";
        self.check(proc, w, OP)?;
        if !(r > 0.0) {
            return Err(invalid(OP, format!("rate must be positive, got {r}")));
        }
        Ok((self.exp_sup(&Self::magnitude(proc), r, w, OP)?.ln() / r).max(0.0))
    }

    pub fn report(&self, proc: &PathProcess, w: Window, rates: &[f64]) -> Result<NormReport> {
        let mut einf = BTreeMap::new();
        for &r in rates {
            einf.insert(format!("{r}"), self.einf(proc, r, w)?);
        }
        let grid = self.ens.grid();
        Ok(NormReport {
            sup_norm: self.sup_norm(proc, w)?,
            linf: self.linf(proc, w)?,
            minf: self.minf(proc, w)?,
            bmo: self.bmo(proc, w)?,
            einf,
            interval: [grid.time(w.a), grid.time(w.b)],
            m: self.ens.paths(),
            n: grid.steps(),
            basis_degree: self.regression.degree,
        })
    }

    /// Compares `sup E_k[exp ∫_{t_k}^b |Z|² ds]` with `1 / (1 − ‖Z‖²_BMO)`.
    pub fn john_nirenberg(&self, z: &PathProcess, w: Window, slack: f64) -> Result<JohnNirenbergReport> {
        const OP: &str = "john_nirenberg_check";
        self.check(z, w, OP)?;
        let sq = z.pointwise_norm_sq();
        let bmo_sq = self.minf(&sq, w)?;
        if bmo_sq >= 1.0 {
            return Ok(JohnNirenbergReport { bmo_sq, applicable: false, exp_moment: None, bound: None, satisfied: false });
        }
        let moment = self.exp_sup(&sq, 1.0, w, OP)?;
        let bound = 1.0 / (1.0 - bmo_sq);
        Ok(JohnNirenbergReport {
            bmo_sq,
            applicable: true,
            exp_moment: Some(moment),
            bound: Some(bound),
            satisfied: moment <= bound * (1.0 + slack),
        })
    }
}
