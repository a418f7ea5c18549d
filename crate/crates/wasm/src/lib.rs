//! Browser bindings: every export returns a JSON string or throws an `Error`.

use serde_json::json;
use wasm_bindgen::prelude::*;

use qthermo::qfun::QParam;
use qthermo::qsolve::{qruelle_solve, SolveOptions};
use qthermo::shift::PotentialSpec;
use qthermo::staticq;
use qthermo::variational;

/// `β ↦ P_q(βa)` as `[{"beta": .., "pressure": ..|null}, ..]`.
pub fn beta_sweep_json(a: &[f64], q: f64, lo: f64, hi: f64, steps: usize) -> Result<String, String> {
    if a.len() < 2 || a.iter().any(|x| !x.is_finite()) {
        return Err("a needs at least two finite values".into());
    }
    if !(lo.is_finite() && hi.is_finite()) || steps == 0 || steps > 10_000 {
        return Err("need finite bounds and 1..=10000 steps".into());
    }
    let q = QParam::new(q).map_err(|e| e.to_string())?;
    let points = staticq::beta_sweep(a, q, lo, hi, steps);
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

/// `H_q` of two-state chains as `{"grid_n", "points": [[p12, p21, h], ..], "max": [p12, p21, h]}`.
pub fn entropy_surface_json(q: f64, grid_n: usize) -> Result<String, String> {
    if !(2..=400).contains(&grid_n) {
        return Err("grid must be between 2 and 400".into());
    }
    let q = QParam::new(q).map_err(|e| e.to_string())?;
    let s = variational::entropy_surface(q, grid_n).map_err(|e| e.to_string())?;
    let points: Vec<[f64; 3]> = s.points.iter().map(|p| [p.p12, p.p21, p.h_q]).collect();
    serde_json::to_string(&json!({
        "grid_n": grid_n,
        "points": points,
        "max": [s.max.p12, s.max.p21, s.max.h_q],
    }))
    .map_err(|e| e.to_string())
}

/// Every root of `Σ_a e_{q̃}^{A(ax)+φ(ax)-φ(x)-c} = 1` for a potential given in the
/// `{"d", "memory", "values"}` or `{"values_named"}` schema.
pub fn solve_branches_json(potential: &str, q_tilde: f64) -> Result<String, String> {
    let spec: PotentialSpec = serde_json::from_str(potential).map_err(|e| e.to_string())?;
    let a = spec.into_potential().map_err(|e| e.to_string())?;
    let q_tilde = QParam::new(q_tilde).map_err(|e| e.to_string())?;
    let out = qruelle_solve(&a, q_tilde, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let branches: Vec<_> = out
        .branches
        .iter()
        .map(|b| {
            json!({
                "branch_id": b.branch_id,
                "c": b.c,
                "phi": b.phi,
                "residual": b.residual,
                "summands_positive": b.summands_positive,
                "min_base": b.min_base,
            })
        })
        .collect();
    serde_json::to_string(&json!({ "q_tilde": q_tilde.value(), "branches": branches })).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn beta_sweep(a: Vec<f64>, q: f64, lo: f64, hi: f64, steps: usize) -> Result<String, JsError> {
    js(beta_sweep_json(&a, q, lo, hi, steps))
}

#[wasm_bindgen]
pub fn entropy_surface(q: f64, grid_n: usize) -> Result<String, JsError> {
    js(entropy_surface_json(q, grid_n))
}

#[wasm_bindgen]
pub fn solve_branches(potential: &str, q_tilde: f64) -> Result<String, JsError> {
    js(solve_branches_json(potential, q_tilde))
}
