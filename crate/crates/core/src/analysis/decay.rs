use serde::{Deserialize, Serialize};

use crate::radial_solver::RadialSolution;

/// Estimates below this count as a zero limit.
pub const LIMIT_ZERO: f64 = 1e-6;
/// Estimates above this (with a flat tail) count as a positive limit.
pub const LIMIT_POSITIVE: f64 = 1e-3;
/// A tail is flat when its total variation is at most this fraction of its
/// mean.
pub const FLAT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    DecaysToZero,
    PositiveLimit,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Flat,
    Increasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Extrapolated `lim u`, clipped at zero.
    pub limit_estimate: f64,
    pub method: String,
    /// `[start, end]` of the trailing quarter the estimate is built from.
    pub window_used: [f64; 2],
    /// Length-weighted mean of `u` over the window.
    pub tail_mean: f64,
    /// Fitted coefficient `b` of `u ≈ a + b/r`.
    pub slope_in_inverse_r: f64,
    pub trend: Trend,
    /// False when the solution spans less than four inner radii, in which
    /// case the classification is always `Undetermined`.
    pub span_sufficient: bool,
    pub classification: DecayClass,
}

/// Estimates `lim_{r→∞} u` from the trailing quarter of the grid.
///
/// The window values are fitted by weighted least squares to `a + b/r`
/// (first-order Richardson extrapolation in `1/r`, weights are the dual cell
/// lengths so the fit does not depend on how the grid clusters), and `a` is
/// the estimate. The tail is flat when `|u_end − u_start|` is within
/// [`FLAT_TOLERANCE`] of the window mean.
pub fn decay_limit(sol: &RadialSolution) -> DecayReport {
    let r = &sol.grid.nodes;
    let u = &sol.values;
    let n = r.len() - 1;
    let (r0, r_end) = (r[0], r[n]);
    let start = r_end - 0.25 * (r_end - r0);
    let first = r.partition_point(|&x| x < start).min(n - 1);
    let idx = first..=n;

    let weight = |i: usize| {
        let left = if i > first { r[i] - r[i - 1] } else { 0.0 };
        let right = if i < n { r[i + 1] - r[i] } else { 0.0 };
        0.5 * (left + right)
    };
    let total: f64 = idx.clone().map(weight).sum();
    let x_bar = idx.clone().map(|i| weight(i) / r[i]).sum::<f64>() / total;
    let u_bar = idx.clone().map(|i| weight(i) * u[i]).sum::<f64>() / total;
    let sxx: f64 = idx.clone().map(|i| weight(i) * (1.0 / r[i] - x_bar).powi(2)).sum();
    let sxu: f64 = idx
        .clone()
        .map(|i| weight(i) * (1.0 / r[i] - x_bar) * (u[i] - u_bar))
        .sum();
    let b = if sxx > 0.0 { sxu / sxx } else { 0.0 };
    let a = u_bar - b * x_bar;
    let limit_estimate = a.max(0.0);

    let (u_start, u_last) = (u[first], u[n]);
    let trend = if (u_last - u_start).abs() <= FLAT_TOLERANCE * u_bar.abs() {
        Trend::Flat
    } else if u_last < u_start {
        Trend::Decreasing
    } else {
        Trend::Increasing
    };

    let span_sufficient = r_end - r0 >= 4.0 * r0;
    let classification = if !span_sufficient {
        DecayClass::Undetermined
    } else if limit_estimate < LIMIT_ZERO && u_last <= u_start {
        DecayClass::DecaysToZero
    } else if limit_estimate > LIMIT_POSITIVE && trend == Trend::Flat {
        DecayClass::PositiveLimit
    } else {
        DecayClass::Undetermined
    };
    DecayReport {
        limit_estimate,
        method: "tail-average+richardson(1/r)".into(),
        window_used: [r[first], r_end],
        tail_mean: u_bar,
        slope_in_inverse_r: b,
        trend,
        span_sufficient,
        classification,
    }
}
