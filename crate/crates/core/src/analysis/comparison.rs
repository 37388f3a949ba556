use serde::{Deserialize, Serialize};

use crate::radial_solver::{LambdaSpec, RadialSolution};

use super::AnalysisError;

/// Slack allowed in `u ≤ v`.
const ORDER_SLACK: f64 = 1e-8;
/// Slack allowed in `h̃^α ≤ h`.
const POWER_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ordering {
    /// `u ≤ v + 1e−8` at every compared radius.
    pub holds: bool,
    /// `max(u − v)` over the compared radii.
    pub max_violation: f64,
    /// Common radial interval on which the functions were compared.
    pub interval: [f64; 2],
}

/// Radii of both grids inside their common interval, merged and
/// deduplicated; both functions are linear between consecutive entries.
fn common_radii(u: &RadialSolution, v: &RadialSolution) -> Result<(Vec<f64>, [f64; 2]), AnalysisError> {
    let (a0, a1) = (u.grid.first(), u.grid.last());
    let (b0, b1) = (v.grid.first(), v.grid.last());
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    if !(hi > lo) {
        return Err(AnalysisError::GridMismatch { a0, a1, b0, b1 });
    }
    let mut radii: Vec<f64> = u
        .grid
        .nodes
        .iter()
        .chain(&v.grid.nodes)
        .copied()
        .filter(|&r| r >= lo && r <= hi)
        .chain([lo, hi])
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    Ok((radii, [lo, hi]))
}

/// Pointwise comparison `u ≤ v` on the common part of the two domains. Where
/// the grids differ both functions are evaluated as their piecewise-linear
/// interpolants (which preserves monotonicity) at the union of the nodes.
pub fn compare_ordering(u: &RadialSolution, v: &RadialSolution) -> Result<Ordering, AnalysisError> {
    let (radii, interval) = common_radii(u, v)?;
    let max_violation = radii
        .iter()
        .map(|&r| u.grid.interpolate(&u.values, r) - v.grid.interpolate(&v.values, r))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Ordering {
        holds: max_violation <= ORDER_SLACK,
        max_violation,
        interval,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    /// `α = (λ/λ̃)^{1/(p−1)}`
    pub alpha: f64,
    /// `h̃^α ≤ h + 1e−6` everywhere on the common interval.
    pub holds: bool,
    /// `max(h̃^α − h)`.
    pub max_violation: f64,
    pub interval: [f64; 2],
}

fn power_law(sol: &RadialSolution) -> Result<(f64, f64), AnalysisError> {
    match sol.lambda {
        LambdaSpec::PowerLaw { lambda, xi } => Ok((lambda, xi)),
        _ => Err(AnalysisError::InvalidArgument(format!(
            "power comparison needs a power-law nonlinearity, got {}",
            sol.lambda.label()
        ))),
    }
}

/// For minimal solutions `h̃` (coefficient `λ̃`) and `h` (coefficient
/// `λ ≥ λ̃`) of `Δ_p h = λ h^{p−1}` on the same manifold, checks
/// `h̃^α ≤ h` with `α = (λ/λ̃)^{1/(p−1)}`: the power `h̃^α` is a
/// subsolution of the problem for `λ`.
pub fn lambda_power_comparison(
    h_small: &RadialSolution,
    h_big: &RadialSolution,
) -> Result<PowerComparison, AnalysisError> {
    let (l_small, xi_small) = power_law(h_small)?;
    let (l_big, xi_big) = power_law(h_big)?;
    let p = h_small.p;
    if h_big.p != p || h_big.m != h_small.m || h_big.manifold != h_small.manifold {
        return Err(AnalysisError::InvalidArgument(
            "both solutions must use the same manifold and p".into(),
        ));
    }
    let homogeneous = |xi: f64| (xi - (p - 1.0)).abs() <= 1e-12;
    if !(homogeneous(xi_small) && homogeneous(xi_big)) {
        return Err(AnalysisError::InvalidArgument(format!(
            "both nonlinearities must be λ u^(p-1), got xi = {xi_small} and {xi_big}"
        )));
    }
    if l_small > l_big {
        return Err(AnalysisError::InvalidArgument(format!(
            "expected the smaller coefficient first, got {l_small} > {l_big}"
        )));
    }
    power_ordering(h_small, h_big, (l_big / l_small).powf(1.0 / (p - 1.0)))
}

/// `h̃^α ≤ h + 1e−6` on the common interval for a caller-supplied exponent.
pub fn power_ordering(
    h_small: &RadialSolution,
    h_big: &RadialSolution,
    alpha: f64,
) -> Result<PowerComparison, AnalysisError> {
    let (radii, interval) = common_radii(h_small, h_big)?;
    let max_violation = radii
        .iter()
        .map(|&r| {
            h_small.grid.interpolate(&h_small.values, r).powf(alpha) - h_big.grid.interpolate(&h_big.values, r)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerComparison {
        alpha,
        holds: max_violation <= POWER_SLACK,
        max_violation,
        interval,
    })
}
