//! Doubling-window convergence test for improper integrals `∫_{r0}^{∞} f`.
//!
//! The integral is split into windows `[r0·2^{k−1}, r0·2^k]`. Window
//! increments `ΔI_k` are compared against two decay models:
//!
//! * geometric in `k` (power-law or faster decay of `f` in `r`), and
//! * power-law in `k` (logarithmic decay such as `1/(t log² t)`).
//!
//! Increments that stay bounded away from zero or grow mean divergence.
//! Anything in between is reported as inconclusive.

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_log, log_add};
use crate::warping::EvalError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictPolicy {
    /// Maximum number of doubling windows.
    pub windows: usize,
    /// Relative tolerance for each window's quadrature.
    pub quad_rel_tol: f64,
    pub max_panels: usize,
    /// Geometric model: every one of the last `decisive` ratios must be below this.
    pub ratio_threshold: f64,
    pub decisive: usize,
    /// Geometric model: extrapolated tail relative to the partial integral.
    pub tail_tol: f64,
    /// Divergence: every one of the last `decisive` ratios at or above this.
    pub divergence_ratio: f64,
    /// Number of trailing windows used for the power-law fit.
    pub power_fit: usize,
    pub power_converge_min: f64,
    pub power_diverge_max: f64,
    pub power_tail_tol: f64,
    /// Windows computed before an early stop is allowed.
    pub min_windows: usize,
}

impl Default for VerdictPolicy {
    fn default() -> Self {
        VerdictPolicy {
            windows: 40,
            quad_rel_tol: 1e-11,
            max_panels: 4000,
            ratio_threshold: 0.9,
            decisive: 5,
            tail_tol: 1e-6,
            divergence_ratio: 0.99,
            power_fit: 8,
            power_converge_min: 1.5,
            power_diverge_max: 0.5,
            power_tail_tol: 0.05,
            min_windows: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictStatus {
    Converges { estimate: f64, error_bound: f64 },
    /// `growth_exponent` is `b` in `ΔI ∝ r^b` over the last window; 0 means
    /// logarithmic growth of the partial integrals.
    Diverges { growth_exponent: f64 },
    Inconclusive { evidence: String },
}

/// Serialized flat as `{status, estimate, error_bound, windows, ...}`;
/// `estimate` and `error_bound` are `null` unless the integral converges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VerdictRecord", try_from = "VerdictRecord")]
pub struct ConvergenceVerdict {
    pub status: VerdictStatus,
    /// `(upper limit, partial integral)` per window.
    pub windows: Vec<(f64, f64)>,
    /// Natural log of the partial integrals (finite even when they overflow).
    pub log_windows: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StatusName {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictRecord {
    status: StatusName,
    estimate: Option<f64>,
    error_bound: Option<f64>,
    windows: Vec<(f64, f64)>,
    log_windows: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    growth_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    evidence: Option<String>,
}

impl From<ConvergenceVerdict> for VerdictRecord {
    fn from(v: ConvergenceVerdict) -> Self {
        let mut rec = VerdictRecord {
            status: StatusName::Inconclusive,
            estimate: None,
            error_bound: None,
            windows: v.windows,
            log_windows: v.log_windows,
            growth_exponent: None,
            evidence: None,
        };
        match v.status {
            VerdictStatus::Converges { estimate, error_bound } => {
                rec.status = StatusName::Converges;
                rec.estimate = Some(estimate);
                rec.error_bound = Some(error_bound);
            }
            VerdictStatus::Diverges { growth_exponent } => {
                rec.status = StatusName::Diverges;
                // Non-finite exponents would be written as null anyway.
                rec.growth_exponent = Some(growth_exponent);
            }
            VerdictStatus::Inconclusive { evidence } => rec.evidence = Some(evidence),
        }
        rec
    }
}

impl TryFrom<VerdictRecord> for ConvergenceVerdict {
    type Error = String;

    fn try_from(r: VerdictRecord) -> Result<Self, String> {
        let status = match r.status {
            StatusName::Converges => VerdictStatus::Converges {
                estimate: r.estimate.ok_or("converging verdict without estimate")?,
                error_bound: r.error_bound.ok_or("converging verdict without error_bound")?,
            },
            StatusName::Diverges => VerdictStatus::Diverges {
                growth_exponent: r.growth_exponent.unwrap_or(f64::NAN),
            },
            StatusName::Inconclusive => VerdictStatus::Inconclusive {
                evidence: r.evidence.unwrap_or_default(),
            },
        };
        Ok(ConvergenceVerdict {
            status,
            windows: r.windows,
            log_windows: r.log_windows,
        })
    }
}

impl ConvergenceVerdict {
    pub fn converges(&self) -> Option<bool> {
        match self.status {
            VerdictStatus::Converges { .. } => Some(true),
            VerdictStatus::Diverges { .. } => Some(false),
            VerdictStatus::Inconclusive { .. } => None,
        }
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self.status, VerdictStatus::Inconclusive { .. })
    }

    pub fn short(&self) -> &'static str {
        match self.status {
            VerdictStatus::Converges { .. } => "converges",
            VerdictStatus::Diverges { .. } => "diverges",
            VerdictStatus::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Decides whether `∫_{r0}^{∞} exp(log_f)` is finite.
pub fn improper_integral_verdict<F>(
    mut log_f: F,
    r0: f64,
    policy: &VerdictPolicy,
) -> Result<ConvergenceVerdict, EvalError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    if !(r0 > 0.0) {
        return Err(EvalError::BadRadius(r0));
    }
    let mut log_incr: Vec<f64> = Vec::with_capacity(policy.windows);
    let mut log_partial: Vec<f64> = Vec::with_capacity(policy.windows);
    let mut log_quad_err = f64::NEG_INFINITY;
    let mut uppers = Vec::with_capacity(policy.windows);
    let mut total = f64::NEG_INFINITY;
    for k in 1..=policy.windows {
        let a = r0 * 2f64.powi(k as i32 - 1);
        let b = 2.0 * a;
        let w = integrate_log(&mut log_f, a, b, policy.quad_rel_tol, policy.max_panels)?;
        total = log_add(total, w.log_value);
        log_quad_err = log_add(log_quad_err, w.log_error);
        log_incr.push(w.log_value);
        log_partial.push(total);
        uppers.push(b);
        if k >= policy.min_windows && decided_early(&log_incr, total, policy) {
            break;
        }
    }
    let status = decide(&log_incr, total, log_quad_err, policy);
    Ok(ConvergenceVerdict {
        status,
        windows: uppers
            .iter()
            .zip(&log_partial)
            .map(|(&r, &l)| (r, l.exp()))
            .collect(),
        log_windows: log_partial,
    })
}

/// Log of `ΔI_k / ΔI_{k−1}`; a vanishing increment counts as ratio 0.
fn log_ratio(prev: f64, cur: f64) -> f64 {
    if cur == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if prev == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        cur - prev
    }
}

fn last_log_ratios(log_incr: &[f64], count: usize) -> Option<Vec<f64>> {
    if log_incr.len() < count + 1 {
        return None;
    }
    let tail = &log_incr[log_incr.len() - count - 1..];
    Some(tail.windows(2).map(|w| log_ratio(w[0], w[1])).collect())
}

fn decided_early(log_incr: &[f64], log_total: f64, policy: &VerdictPolicy) -> bool {
    let Some(ratios) = last_log_ratios(log_incr, policy.decisive) else {
        return false;
    };
    let lt = policy.ratio_threshold.ln();
    if ratios.iter().all(|&r| r <= lt) {
        let last = *log_incr.last().expect("non-empty");
        return geometric_log_tail(last, &ratios) <= log_total + (1e-16f64).ln();
    }
    ratios.iter().all(|&r| r >= policy.divergence_ratio.ln())
}

fn geometric_log_tail(last_incr: f64, log_ratios: &[f64]) -> f64 {
    let worst = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if worst == f64::NEG_INFINITY || last_incr == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let rho = worst.exp();
    last_incr + (rho / (1.0 - rho)).ln()
}

fn decide(
    log_incr: &[f64],
    log_total: f64,
    log_quad_err: f64,
    policy: &VerdictPolicy,
) -> VerdictStatus {
    let Some(ratios) = last_log_ratios(log_incr, policy.decisive) else {
        return VerdictStatus::Inconclusive {
            evidence: format!("only {} windows evaluated", log_incr.len()),
        };
    };
    let last = *log_incr.last().expect("non-empty");
    let lt = policy.ratio_threshold.ln();
    if log_total == f64::NEG_INFINITY {
        return VerdictStatus::Converges {
            estimate: 0.0,
            error_bound: 0.0,
        };
    }
    if ratios.iter().all(|&r| r <= lt) {
        let tail = geometric_log_tail(last, &ratios);
        if tail <= log_total + policy.tail_tol.ln() {
            let total = log_total.exp();
            let tail_v = tail.exp();
            return VerdictStatus::Converges {
                estimate: total + tail_v,
                error_bound: tail_v + log_quad_err.exp(),
            };
        }
        return VerdictStatus::Inconclusive {
            evidence: format!(
                "geometric decay but extrapolated tail {:.3e} exceeds {:.1e} of the partial integral",
                (tail - log_total).exp(),
                policy.tail_tol
            ),
        };
    }
    if ratios.iter().all(|&r| r >= policy.divergence_ratio.ln()) {
        let growth = ratios.last().copied().unwrap_or(0.0) / std::f64::consts::LN_2;
        return VerdictStatus::Diverges {
            growth_exponent: growth,
        };
    }
    // Power-law model in the window index: ΔI_k ≈ C k^{−a}.
    let n = log_incr.len();
    let fit = policy.power_fit.min(n);
    let pts: Vec<(f64, f64)> = (n - fit..n)
        .filter(|&i| log_incr[i].is_finite())
        .map(|i| (((i + 1) as f64).ln(), log_incr[i]))
        .collect();
    if pts.len() >= 3 {
        let a = -least_squares_slope(&pts);
        if a >= policy.power_converge_min {
            let k = n as f64;
            let tail = last + (k / (a - 1.0)).ln();
            if tail <= log_total + policy.power_tail_tol.ln() {
                let tail_v = tail.exp();
                return VerdictStatus::Converges {
                    estimate: log_total.exp() + tail_v,
                    error_bound: 0.5 * tail_v + last.exp() + log_quad_err.exp(),
                };
            }
        } else if a <= policy.power_diverge_max {
            let growth = ratios.last().copied().unwrap_or(0.0) / std::f64::consts::LN_2;
            return VerdictStatus::Diverges {
                growth_exponent: growth,
            };
        }
        return VerdictStatus::Inconclusive {
            evidence: format!(
                "window increments decay like k^-{a:.3}; borderline between the convergent and divergent models"
            ),
        };
    }
    VerdictStatus::Inconclusive {
        evidence: "increments neither geometric nor power-law".into(),
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `log ∫_{r}^{∞} exp(log_f)` by summing doubling windows until the
/// increments are negligible. `None` when the tail does not settle.
pub fn log_tail_integral<F>(
    mut log_f: F,
    r: f64,
    policy: &VerdictPolicy,
) -> Result<Option<f64>, EvalError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    let mut total = f64::NEG_INFINITY;
    let mut a = r;
    let mut small_in_a_row = 0;
    for _ in 0..60 {
        let b = 2.0 * a;
        let w = integrate_log(&mut log_f, a, b, policy.quad_rel_tol, policy.max_panels)?;
        total = log_add(total, w.log_value);
        if w.log_value <= total + (1e-17f64).ln() {
            small_in_a_row += 1;
            if small_in_a_row >= 2 {
                return Ok(Some(total));
            }
        } else {
            small_in_a_row = 0;
        }
        a = b;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: impl Fn(f64) -> f64, r0: f64) -> ConvergenceVerdict {
        improper_integral_verdict(|t| Ok(f(t)), r0, &VerdictPolicy::default()).unwrap()
    }

    #[test]
    fn json_always_carries_the_verdict_fields() {
        for v in [run(|t| -2.0 * t.ln(), 1.0), run(|t| -t.ln(), 1.0)] {
            let value = serde_json::to_value(&v).unwrap();
            for key in ["status", "estimate", "error_bound", "windows"] {
                assert!(value.get(key).is_some(), "{key} missing in {value}");
            }
            assert!(value["windows"][0].as_array().unwrap().len() == 2);
            let back: ConvergenceVerdict = serde_json::from_value(value).unwrap();
            assert_eq!(back.short(), v.short());
            assert_eq!(back.windows, v.windows);
        }
    }

    #[test]
    fn inverse_square_converges_to_one() {
        let v = run(|t| -2.0 * t.ln(), 1.0);
        match v.status {
            VerdictStatus::Converges {
                estimate,
                error_bound,
            } => {
                assert!((estimate - 1.0).abs() < 1e-8, "{estimate}");
                assert!(error_bound < 1e-8);
            }
            ref s => panic!("{s:?}"),
        }
        assert!(v.windows.len() >= 3);
    }

    #[test]
    fn harmonic_diverges_logarithmically() {
        let v = run(|t| -t.ln(), 1.0);
        match v.status {
            VerdictStatus::Diverges { growth_exponent } => assert!(growth_exponent.abs() < 1e-6),
            ref s => panic!("{s:?}"),
        }
    }

    #[test]
    fn log_squared_stress_case() {
        // ∫_2^∞ dt/(t log² t) = 1/log 2
        let v = run(|t| -t.ln() - 2.0 * t.ln().ln(), 2.0);
        match v.status {
            VerdictStatus::Converges { estimate, .. } => {
                assert!((estimate - 1.0 / std::f64::consts::LN_2).abs() < 1e-2, "{estimate}")
            }
            ref s => panic!("{s:?}"),
        }
    }

    #[test]
    fn t_log_t_is_inconclusive() {
        let v = run(|t| -t.ln() - t.ln().ln(), 2.0);
        assert!(v.is_inconclusive(), "{:?}", v.status);
    }

    #[test]
    fn growing_integrand_diverges() {
        let v = run(|t| t.ln(), 1.0);
        match v.status {
            VerdictStatus::Diverges { growth_exponent } => {
                assert!((growth_exponent - 2.0).abs() < 1e-6)
            }
            ref s => panic!("{s:?}"),
        }
    }

    #[test]
    fn windows_are_nondecreasing() {
        for f in [
            (|t: f64| -2.0 * t.ln()) as fn(f64) -> f64,
            |t: f64| -t,
            |t: f64| t.ln(),
        ] {
            let v = run(f, 1.0);
            assert!(v.log_windows.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn tail_integral_of_exponential() {
        let l = log_tail_integral(|t| Ok(-t), 3.0, &VerdictPolicy::default())
            .unwrap()
            .unwrap();
        assert!((l + 3.0).abs() < 1e-10);
    }
}
