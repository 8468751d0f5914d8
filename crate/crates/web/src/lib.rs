//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each export returns a JSON string; errors come back as a thrown string. The
//! `*_json` functions hold the logic so they can be tested natively.

use qbsde::constants::{compute_local_constants, NormInputs};
use qbsde::generators::{list_gallery, StructuralParams};
use qbsde::transforms::{check_planar_quadratic, check_reciprocal_condition, PlanarQuadratic};
use serde_json::json;
use wasm_bindgen::prelude::*;

pub fn gallery_json() -> String {
    serde_json::to_string(&list_gallery()).expect("gallery serializes")
}

pub fn reciprocal_pair_json(alpha: f64, beta: f64) -> Result<String, String> {
    let condition = check_reciprocal_condition(alpha, beta).map_err(|e| e.to_string())?;
    let verdict = check_planar_quadratic(&PlanarQuadratic::reciprocal_pair(alpha, beta)).map_err(|e| e.to_string())?;
    Ok(json!({ "reciprocal_condition": condition, "planar": verdict }).to_string())
}

/// Local constants for `n` components with `‖ξ‖∞ = xi_inf` and the other norm
/// inputs set to `alpha` (and `v = 0`, `c0 = 1`).
pub fn local_constants_json(n: usize, gamma: f64, lambda: f64, delta: f64, p: f64, xi_inf: f64, alpha: f64, horizon: f64) -> Result<String, String> {
    let params = StructuralParams { n, gamma, gamma_bar: gamma, lambda, delta, p, ..StructuralParams::default() };
    let inputs = NormInputs {
        xi_inf,
        alpha_einf: alpha,
        alpha_bar_minf: alpha,
        alpha_tilde_linf: alpha,
        v_bmo: 0.0,
        c0: 1.0,
        horizon,
    };
    let report = compute_local_constants(&params, &inputs).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn gallery() -> String {
    gallery_json()
}

#[wasm_bindgen]
pub fn reciprocal_pair(alpha: f64, beta: f64) -> Result<String, JsValue> {
    reciprocal_pair_json(alpha, beta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn local_constants(n: usize, gamma: f64, lambda: f64, delta: f64, p: f64, xi_inf: f64, alpha: f64, horizon: f64) -> Result<String, JsValue> {
    local_constants_json(n, gamma, lambda, delta, p, xi_inf, alpha, horizon).map_err(|e| JsValue::from_str(&e))
}
