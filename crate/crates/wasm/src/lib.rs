//! Three cheap operations for the static page in `www/`: a Kantorovich
//! curve, the mean of two 2x2 Hermitian matrices, and a Lie-Trotter study.
//!
//! A 2x2 Hermitian matrix travels as `[a, re b, im b, c]` for
//! `[[a, b], [conj b, c]]`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use tmlab_core::bounds::kantorovich;
use tmlab_core::lie_trotter::{convergence_study, default_q_grid, lt_limit};
use tmlab_core::means::mean_psd;
use tmlab_core::{ConnectionFunction, GaugeNormKind, HermitianTensor, Tensor, TensorJson};
use wasm_bindgen::prelude::*;

fn hermitian(v: &[f64]) -> Result<HermitianTensor, String> {
    let [a, br, bi, c] = v else {
        return Err(format!("expected [a, re b, im b, c], got {} numbers", v.len()));
    };
    let json = TensorJson {
        dims: vec![2],
        re: vec![*a, *br, *br, *c],
        im: vec![0.0, *bi, -bi, 0.0],
    };
    let t = Tensor::from_json(&json).map_err(|e| e.to_string())?;
    HermitianTensor::new(t).map_err(|e| e.to_string())
}

fn flatten(h: &HermitianTensor) -> Vec<f64> {
    let e = h.entries();
    vec![e[0].re, e[1].re, e[1].im, e[3].re]
}

/// `K(m, M, p)` on `steps + 1` evenly spaced exponents in `[1, p_max]`.
pub fn kantorovich_curve_impl(m: f64, big_m: f64, p_max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps == 0 || !(p_max >= 1.0) {
        return Err("need steps >= 1 and p_max >= 1".into());
    }
    (0..=steps)
        .map(|i| {
            let p = 1.0 + (p_max - 1.0) * i as f64 / steps as f64;
            kantorovich(m, big_m, p).map_err(|e| e.to_string())
        })
        .collect()
}

/// `X #_g Y` plus its extreme eigenvalues: `[a, re b, im b, c, lmin, lmax]`.
pub fn mean_2x2_impl(x: &[f64], y: &[f64], function: &str) -> Result<Vec<f64>, String> {
    let g = ConnectionFunction::parse(function).map_err(|e| e.to_string())?;
    let m = mean_psd(&hermitian(x)?, &hermitian(y)?, &g).map_err(|e| e.to_string())?;
    let mut out = flatten(&m);
    out.extend([m.lambda_min(), m.lambda_max()]);
    Ok(out)
}

/// JSON with the q grid, Frobenius distances to the limit, the monotonicity
/// flag, the final relative error and the limit itself.
pub fn lie_trotter_study_impl(x: &[f64], y: &[f64], function: &str) -> Result<String, String> {
    let g = ConnectionFunction::parse(function).map_err(|e| e.to_string())?;
    let (x, y) = (hermitian(x)?, hermitian(y)?);
    let study = convergence_study(&x, &y, &g, &default_q_grid(), GaugeNormKind::Frobenius).map_err(|e| e.to_string())?;
    let limit = lt_limit(&x, &y, &g).map_err(|e| e.to_string())?;
    let mut v = serde_json::to_value(&study).map_err(|e| e.to_string())?;
    v["limit"] = flatten(&limit).into();
    Ok(v.to_string())
}

#[wasm_bindgen]
pub fn kantorovich_curve(m: f64, big_m: f64, p_max: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    kantorovich_curve_impl(m, big_m, p_max, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mean_2x2(x: &[f64], y: &[f64], function: &str) -> Result<Vec<f64>, JsError> {
    mean_2x2_impl(x, y, function).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lie_trotter_study(x: &[f64], y: &[f64], function: &str) -> Result<String, JsError> {
    lie_trotter_study_impl(x, y, function).map_err(|e| JsError::new(&e))
}
