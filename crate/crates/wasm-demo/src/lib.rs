//! Browser bindings for three operations: classify a model manifold, solve
//! for the minimal exterior solution, and compare the solutions for `λ` and
//! `2λ`. Every entry point takes the manifold as a family name
//! (`euclidean`, `hyperbolic(-1)`, `cusp_cubic`, `flare_cubic`) or a warping
//! expression in `t`, and returns a JSON string.
// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pfeller::analysis::{compare_ordering, decay_limit, lambda_power_comparison, AnalysisError};
use pfeller::classify::{classify, ClassifyError, VerdictPolicy};
use pfeller::radial_solver::{
    minimal_exterior_solution, ExhaustionOptions, ExteriorProblem, LambdaSpec, RadialSolution, SolverError,
};
use pfeller::warping::{parse_sigma, Family, ModelManifold, WarpingError, WarpingFunction};
use serde_json::json;
use thiserror::Error;
use wasm_bindgen::prelude::*;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Warping(#[from] WarpingError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl From<DemoError> for JsValue {
    fn from(e: DemoError) -> JsValue {
        JsValue::from_str(&e.to_string())
    }
}

/// Kept small so a solve stays interactive in the browser.
const WINDOW: f64 = 10.0;
const MAX_CELLS: usize = 4096;

fn manifold(spec: &str, m: u32) -> Result<ModelManifold, DemoError> {
    let spec = spec.trim();
    let sigma = match Family::parse(spec) {
        Ok(f) => WarpingFunction::family(f),
        Err(_) => parse_sigma(spec)?,
    };
    Ok(ModelManifold::new(m, sigma)?)
}

fn check_p(p: f64) -> Result<(), DemoError> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(DemoError::Input(format!("p must be in (1, inf), got {p}")))
    }
}

fn problem(spec: &str, m: u32, p: f64, lambda: f64, xi: f64) -> Result<ExteriorProblem, DemoError> {
    check_p(p)?;
    let lambda = if lambda == 0.0 {
        LambdaSpec::Zero
    } else {
        LambdaSpec::power_law(lambda, xi)?
    };
    Ok(ExteriorProblem::new(manifold(spec, m)?, 1.0, p, lambda)?)
}

fn exhaustion(cells: usize) -> Result<ExhaustionOptions, DemoError> {
    if !(16..=MAX_CELLS).contains(&cells) {
        return Err(DemoError::Input(format!("cells must be in [16, {MAX_CELLS}], got {cells}")));
    }
    Ok(ExhaustionOptions::new(WINDOW, cells))
}

fn profile(sol: &RadialSolution) -> serde_json::Value {
    json!({ "r": sol.grid.nodes, "u": sol.values })
}

pub fn classify_json(spec: &str, m: u32, p: f64) -> Result<String, DemoError> {
    check_p(p)?;
    let report = classify(&manifold(spec, m)?, p, &VerdictPolicy::default())?;
    let verdicts = json!({
        "hyperbolic": report.is_hyperbolic().label(),
        "complete": report.is_complete().label(),
        "feller": report.is_feller().label(),
        "warnings": report.consistency_violations(),
        "report": report,
    });
    Ok(verdicts.to_string())
}

pub fn solve_json(spec: &str, m: u32, p: f64, lambda: f64, xi: f64, cells: usize) -> Result<String, DemoError> {
    let sol = minimal_exterior_solution(&problem(spec, m, p, lambda, xi)?, &exhaustion(cells)?)?;
    let decay = decay_limit(&sol);
    let settled = sol.exhaustion.as_ref().map(|r| r.settled);
    Ok(json!({
        "profile": profile(&sol),
        "decay": decay,
        "settled": settled,
        "svg": sol.to_svg(),
        "csv": sol.to_csv(),
    })
    .to_string())
}

pub fn compare_json(spec: &str, m: u32, p: f64, lambda: f64, cells: usize) -> Result<String, DemoError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(DemoError::Input(format!("lambda must be positive, got {lambda}")));
    }
    let opts = exhaustion(cells)?;
    let small = minimal_exterior_solution(&problem(spec, m, p, lambda, p - 1.0)?, &opts)?;
    let big = minimal_exterior_solution(&problem(spec, m, p, 2.0 * lambda, p - 1.0)?, &opts)?;
    Ok(json!({
        "small": profile(&small),
        "big": profile(&big),
        "ordering": compare_ordering(&big, &small)?,
        "power": lambda_power_comparison(&small, &big)?,
    })
    .to_string())
}

/// Hyperbolicity, completeness and the Feller property as JSON.
#[wasm_bindgen]
pub fn classify_manifold(spec: &str, m: u32, p: f64) -> Result<String, JsValue> {
    Ok(classify_json(spec, m, p)?)
}

/// Minimal solution of `Δ_p h = λ h^ξ`, `h(1) = 1`, on `[1, 11]`.
#[wasm_bindgen]
pub fn solve_minimal(spec: &str, m: u32, p: f64, lambda: f64, xi: f64, cells: usize) -> Result<String, JsValue> {
    Ok(solve_json(spec, m, p, lambda, xi, cells)?)
}

/// Minimal solutions for `λ` and `2λ` with `ξ = p − 1`, and the two
/// comparison checks between them.
#[wasm_bindgen]
pub fn compare_lambdas(spec: &str, m: u32, p: f64, lambda: f64, cells: usize) -> Result<String, JsValue> {
    Ok(compare_json(spec, m, p, lambda, cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_accepts_families_and_expressions() {
        let v: serde_json::Value = serde_json::from_str(&classify_json("sinh(t)", 3, 2.0).unwrap()).unwrap();
        assert_eq!(v["feller"], "yes");
        let v: serde_json::Value = serde_json::from_str(&classify_json("euclidean", 2, 2.0).unwrap()).unwrap();
        assert_eq!(v["hyperbolic"], "no");
        assert!(classify_json("t^2", 3, 2.0).is_err());
        assert!(classify_json("euclidean", 3, 1.0).is_err());
    }

    #[test]
    fn solve_returns_profile_and_chart() {
        let v: serde_json::Value =
            serde_json::from_str(&solve_json("euclidean", 3, 2.0, 1.0, 1.0, 256).unwrap()).unwrap();
        let u = v["profile"]["u"].as_array().unwrap();
        assert_eq!(u[0], 1.0);
        assert!(v["svg"].as_str().unwrap().contains("<svg"));
        assert!(solve_json("euclidean", 3, 2.0, 1.0, 1.0, 8).is_err());
    }

    #[test]
    fn doubling_lambda_lowers_the_solution() {
        let v: serde_json::Value =
            serde_json::from_str(&compare_json("hyperbolic(-1)", 2, 3.0, 1.0, 256).unwrap()).unwrap();
        assert_eq!(v["ordering"]["holds"], true);
        assert_eq!(v["power"]["holds"], true);
    }
}
