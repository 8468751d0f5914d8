//! Quadratic sandwich bounds used to place the interacting examples under the
//! growth conditions.

use serde::Serialize;

use super::{dot, norm_sq};
use crate::error::{invalid, Result};

/// Values of a two-sided bound `lower ≤ middle ≤ upper` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl Sandwich {
    /// `(middle − lower, upper − middle)`.
    pub fn margins(&self) -> (f64, f64) {
        (self.middle - self.lower, self.upper - self.middle)
    }

    /// Magnitude used to turn an absolute tolerance into a relative one.
    pub fn scale(&self) -> f64 {
        self.lower.abs().max(self.middle.abs()).max(self.upper.abs()).max(1.0)
    }
}

/// `ϑ₂|z¹|² + θ₂|z²|² + l z¹·z²` between
/// `θ₂/2 |z²|² − (l²/(2θ₂) − ϑ₂)|z¹|²` and `(θ₂ − l²/(2ϑ₂))|z²|²`.
pub fn two_component_sandwich(theta2: f64, vartheta2: f64, l: f64, z1: &[f64], z2: &[f64]) -> Result<Sandwich> {
    const OP: &str = "verify_inequality_2_5c";
    if !(theta2 > 0.0 && vartheta2 < 0.0) {
        return Err(invalid(OP, format!("need theta2 > 0 > vartheta2, got {theta2} and {vartheta2}")));
    }
    if z1.len() != z2.len() {
        return Err(invalid(OP, "z1 and z2 must have the same length"));
    }
    let (a, b) = (norm_sq(z1), norm_sq(z2));
    let middle = vartheta2 * a + theta2 * b + l * dot(z1, z2);
    let lower = theta2 / 2.0 * b - (l * l / (2.0 * theta2) - vartheta2) * a;
    let upper = (theta2 - l * l / (2.0 * vartheta2)) * b;
    Ok(Sandwich { lower, middle, upper })
}

/// Coefficients of the third component's quadratic part, in the normalization
/// `κ₃ > 0`, `θ₃ < 0`, `ϑ₃ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeComponentParams {
    pub kappa3: f64,
    pub theta3: f64,
    pub vartheta3: f64,
    pub l31: f64,
    pub l32: f64,
    pub l33: f64,
}

impl ThreeComponentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa3 > 0.0 && self.theta3 < 0.0 && self.vartheta3 < 0.0) {
            return Err(invalid("verify_delta_bounds_2_5d", "need kappa3 > 0, theta3 < 0 and vartheta3 < 0"));
        }
        if !(self.l33 * self.l33 < 4.0 * self.theta3 * self.vartheta3) {
            return Err(invalid("verify_delta_bounds_2_5d", "need l33^2 < 4 theta3 vartheta3"));
        }
        Ok(())
    }

    /// The `ε ∈ (0, 1]` with `l₃₃² = 4(1 − ε)² θ₃ϑ₃`.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.l33.abs() / (2.0 * (self.theta3 * self.vartheta3).sqrt())
    }
}

/// `Δ = ϑ₃|z¹|² + θ₃|z²|² + κ₃|z³|² + l₃₁z³·z¹ + l₃₂z³·z² + l₃₃z¹·z²` against its
/// bounds in `|z¹|², |z²|², |z³|²`. `z` holds the three rows, each of length `d`.
pub fn three_component_bounds(q: &ThreeComponentParams, z: &[f64], d: usize) -> Result<Sandwich> {
    q.validate()?;
    if d == 0 || z.len() != 3 * d {
        return Err(invalid("verify_delta_bounds_2_5d", "z must hold three rows of length d"));
    }
    let (z1, z2, z3) = (&z[..d], &z[d..2 * d], &z[2 * d..]);
    let (a, b, c) = (norm_sq(z1), norm_sq(z2), norm_sq(z3));
    let eps = q.epsilon();
    let middle = q.vartheta3 * a + q.theta3 * b + q.kappa3 * c + q.l31 * dot(z3, z1) + q.l32 * dot(z3, z2) + q.l33 * dot(z1, z2);
    let upper = (q.kappa3 - q.l31 * q.l31 / (4.0 * eps * q.vartheta3) - q.l32 * q.l32 / (4.0 * eps * q.theta3)) * c;
    let lower = q.kappa3 / 2.0 * c
        - (0.5 + q.l31 * q.l31 / q.kappa3 - q.vartheta3) * a
        - (q.l33 * q.l33 / 2.0 + q.l32 * q.l32 / q.kappa3 - q.theta3) * b;
    Ok(Sandwich { lower, middle, upper })
}
