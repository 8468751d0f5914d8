//! Least-squares conditional expectations `E[Y | B_{t_k}]`.
//!
//! The basis is the tensor family of probabilists' Hermite polynomials of total degree
//! at most `degree` in the standardised position `B_{t_k} / √t_k`. Under the law of
//! `B_{t_k}` these are orthogonal, so the Gram matrix stays close to diagonal even for
//! high degrees. A ridge term is added to the normal equations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paths::BrownianEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionOptions {
    pub degree: usize,
    pub ridge: f64,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        Self { degree: 3, ridge: 1e-8 }
    }
}

/// Multi-indices of total degree `<= degree` in `dim` variables, graded order.
pub fn multi_indices(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut cur = vec![0; dim];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, left: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for v in (0..=left).rev() {
        cur[pos] = v;
        fill(out, cur, pos + 1, left - v);
    }
}

/// `He_0(x), …, He_p(x)` into `out`.
fn hermite(x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for j in 2..out.len() {
        out[j] = x * out[j - 1] - (j - 1) as f64 * out[j - 2];
    }
}

/// Design matrix and factorised normal equations for one grid time.
#[derive(Debug, Clone)]
pub struct Projector {
    rows: usize,
    width: usize,
    design: Vec<f64>,
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl Projector {
    /// Builds the regression on `B_{t_k}` for all paths of `ens`.
    pub fn at_step(ens: &BrownianEnsemble, k: usize, opts: &RegressionOptions) -> Result<Self> {
        if !(opts.ridge >= 0.0) {
            return Err(invalid("regression", "ridge must be non-negative"));
        }
        let rows = ens.paths();
        let t = ens.grid().time(k);
        if k == 0 || opts.degree == 0 || t <= 0.0 {
            return Ok(Self { rows, width: 1, design: vec![1.0; rows], chol: None });
        }
        let d = ens.dim();
        let idx = multi_indices(d, opts.degree);
        let width = idx.len();
        let scale = 1.0 / t.sqrt();
        let mut design = vec![0.0; rows * width];
        let mut h = vec![0.0; d * (opts.degree + 1)];
        for m in 0..rows {
            let b = ens.position(m, k);
            for c in 0..d {
                hermite(b[c] * scale, &mut h[c * (opts.degree + 1)..(c + 1) * (opts.degree + 1)]);
            }
            let row = &mut design[m * width..(m + 1) * width];
            for (j, alpha) in idx.iter().enumerate() {
                let mut v = 1.0;
                for (c, &a) in alpha.iter().enumerate() {
                    v *= h[c * (opts.degree + 1) + a];
                }
                row[j] = v;
            }
        }
        let mut gram = DMatrix::<f64>::zeros(width, width);
        for row in design.chunks(width) {
            for i in 0..width {
                let ri = row[i];
                for j in 0..=i {
                    gram[(i, j)] += ri * row[j];
                }
            }
        }
        let inv_m = 1.0 / rows as f64;
        for i in 0..width {
            for j in 0..=i {
                let v = gram[(i, j)] * inv_m;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            gram[(i, i)] += opts.ridge;
        }
        let chol = gram.cholesky().ok_or(Error::Regression { op: "regression", step: k })?;
        Ok(Self { rows, width, design, chol: Some(chol) })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Least-squares fitted values of `y` on the basis.
    ///
    /// A target that is identical on every path is its own conditional expectation and
    /// is returned unchanged, so deterministic inputs stay exact.
    pub fn fit(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "regression target length");
        if y.iter().all(|&v| v == y[0]) {
            return y.to_vec();
        }
        let Some(chol) = &self.chol else {
            let mean = y.iter().sum::<f64>() / self.rows as f64;
            return vec![mean; self.rows];
        };
        let mut rhs = DVector::<f64>::zeros(self.width);
        for (row, &v) in self.design.chunks(self.width).zip(y) {
            for j in 0..self.width {
                rhs[j] += row[j] * v;
            }
        }
        rhs /= self.rows as f64;
        let beta = chol.solve(&rhs);
        self.design
            .chunks(self.width)
            .map(|row| row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Conditional expectation estimate, projected onto `[min y, max y]`.
    ///
    /// The true conditional expectation lies in that range, so the projection only
    /// removes polynomial overshoot in sparsely populated tails.
    pub fn conditional_expectation(&self, y: &[f64]) -> Vec<f64> {
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let mut f = self.fit(y);
        for v in &mut f {
            *v = v.clamp(lo, hi);
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::TimeGrid;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(2, 3).len(), 10);
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert!(multi_indices(2, 2).iter().all(|a| a.iter().sum::<usize>() <= 2));
    }

    #[test]
    fn hermite_recurrence() {
        let mut h = [0.0; 5];
        hermite(2.0, &mut h);
        assert_eq!(h, [1.0, 2.0, 3.0, 2.0, -5.0]);
    }

    #[test]
    fn polynomial_targets_are_reproduced() {
        let e = BrownianEnsemble::generate(2, 2000, TimeGrid::new(1.0, 4).unwrap(), 2).unwrap();
        let p = Projector::at_step(&e, 2, &RegressionOptions::default()).unwrap();
        let y: Vec<f64> = (0..e.paths())
            .map(|m| {
                let b = e.position(m, 2);
                1.0 + b[0] - 0.5 * b[0] * b[1] + b[1].powi(3)
            })
            .collect();
        let f = p.fit(&y);
        let err = y.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "max error {err}");
    }

    #[test]
    fn constants_and_start_time() {
        let e = BrownianEnsemble::generate(2, 100, TimeGrid::new(1.0, 4).unwrap(), 1).unwrap();
        let p = Projector::at_step(&e, 3, &RegressionOptions::default()).unwrap();
        assert_eq!(p.fit(&vec![0.3; 100]), vec![0.3; 100]);
        let p0 = Projector::at_step(&e, 0, &RegressionOptions::default()).unwrap();
        let y: Vec<f64> = (0..100).map(|m| m as f64).collect();
        assert!(p0.fit(&y).iter().all(|&v| (v - 49.5).abs() < 1e-12));
    }

    #[test]
    fn clamped_expectation_stays_in_range() {
        let e = BrownianEnsemble::generate(5, 500, TimeGrid::new(1.0, 2).unwrap(), 1).unwrap();
        let p = Projector::at_step(&e, 1, &RegressionOptions { degree: 5, ridge: 1e-8 }).unwrap();
        let y: Vec<f64> = (0..500).map(|m| e.position(m, 2)[0].abs().min(1.0)).collect();
        let f = p.conditional_expectation(&y);
        assert!(f.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
