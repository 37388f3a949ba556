use serde::{Deserialize, Serialize};

use crate::classify::quadrature::gauss_legendre_10;
use crate::radial_solver::RadialSolution;

use super::AnalysisError;

/// Whether a radial integral looks convergent at the end of the sampled
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFlag {
    Finite,
    Divergent,
}

/// The integral counts as finite when the integrand decays at least like
/// `r^{−TAIL_EXPONENT}` across the last two eighths of the interval, which
/// is well inside the integrable range `r^{−b}`, `b > 1`. Exponential decay
/// passes easily; `1/r`-type decay does not.
const TAIL_EXPONENT: f64 = 1.5;
/// Tail contributions below this fraction of the total are negligible.
const NEGLIGIBLE: f64 = 1e-12;
/// Integration stops where `u` first drops below this fraction of `max u`.
/// Far below it the nodal values are at the noise level of the linear
/// algebra (around `1e−54` on the flare fixtures), and on manifolds whose
/// volume grows like `e^{r³}` that noise would dominate every tail integral.
pub const UNRESOLVED: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    /// The reported quantity (may be `inf` when it overflows `f64`).
    pub value: f64,
    /// Natural log of the underlying integral (`-inf` for zero).
    pub log_integral: f64,
    /// End of the integration interval: the grid end, or the first radius
    /// where `u` is below [`UNRESOLVED`] relative to its maximum or below the
    /// solver's final regularization level.
    pub upper_limit: f64,
    /// Ratio of the integral over the last eighth to that over the eighth
    /// before it.
    pub tail_ratio: f64,
    /// `b` such that the tail ratio equals that of `r^{−b}` between the
    /// midpoints of those eighths.
    pub tail_exponent: f64,
    pub tail: TailFlag,
}

/// Log-space integral of `c_m σ^{m−1} g` over the cells of the grid whose
/// midpoint lies at or beyond `from`, where `log_g(x, u(x), u'(x))` is the log
/// of `g` for the piecewise-linear interpolant. Returns `(midpoint, log)` per
/// cell.
fn cell_logs<F>(sol: &RadialSolution, from: f64, log_g: F) -> Result<Vec<(f64, f64)>, AnalysisError>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let r = &sol.grid.nodes;
    let u = &sol.values;
    let log_c = sol.manifold.sphere_measure().ln();
    let end = resolved_end(sol);
    let mut out = Vec::with_capacity(r.len());
    for j in 0..end {
        let (a, b) = (r[j], r[j + 1]);
        let mid = 0.5 * (a + b);
        if mid < from {
            continue;
        }
        let slope = (u[j + 1] - u[j]) / (b - a);
        let mut terms = [f64::NEG_INFINITY; 10];
        for (k, (x, w)) in gauss_legendre_10(a, b).into_iter().enumerate() {
            let t = (x - a) / (b - a);
            let ux = u[j] * (1.0 - t) + u[j + 1] * t;
            terms[k] = w.ln() + sol.manifold.log_sigma_pow(x)? + log_g(x, ux, slope);
        }
        out.push((mid, log_c + log_sum_exp(terms.iter().copied())));
    }
    Ok(out)
}

/// Number of cells before the first node where `u < UNRESOLVED · max u`, or
/// where `u` drops below the final regularization level `ε` of the solver.
/// Below `ε` the slopes are below `ε` too (the profiles are decreasing and
/// decay at rate of order one), so the regularized flux and nonlinearity are
/// linear there and the computed tail decays at the rate of a linear problem
/// rather than the actual one.
fn resolved_end(sol: &RadialSolution) -> usize {
    let u = &sol.values;
    let cut = (UNRESOLVED * u.iter().fold(0.0f64, |m, &v| m.max(v))).max(sol.epsilon_final);
    u.iter().position(|&v| v < cut).map_or(u.len() - 1, |i| i.max(1))
}

fn upper_limit(sol: &RadialSolution) -> f64 {
    sol.grid.nodes[resolved_end(sol)]
}

fn log_sum_exp<I: Iterator<Item = f64> + Clone>(it: I) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Total and tail flag from per-cell logs; `root` turns the integral into the
/// reported value (e.g. a `q`-th root).
fn report(cells: &[(f64, f64)], end: f64, start: f64, root: f64) -> IntegralReport {
    let total = log_sum_exp(cells.iter().map(|c| c.1));
    let eighth = (end - start) / 8.0;
    let part = |lo: f64, hi: f64| {
        log_sum_exp(
            cells
                .iter()
                .filter(move |c| c.0 >= lo && c.0 < hi)
                .map(|c| c.1),
        )
    };
    let before = part(end - 2.0 * eighth, end - eighth);
    let last = part(end - eighth, f64::INFINITY);
    let tail_ratio = if last == f64::NEG_INFINITY {
        0.0
    } else {
        (last - before).exp()
    };
    let tail_exponent = if last == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (before - last) / ((end - 0.5 * eighth) / (end - 1.5 * eighth)).ln()
    };
    let finite = total == f64::NEG_INFINITY
        || last <= total + NEGLIGIBLE.ln()
        || tail_exponent >= TAIL_EXPONENT;
    IntegralReport {
        value: (total / root).exp(),
        log_integral: total,
        upper_limit: end,
        tail_ratio,
        tail_exponent,
        tail: if finite { TailFlag::Finite } else { TailFlag::Divergent },
    }
}

fn ln_pow(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        q * x.abs().ln()
    }
}

/// `‖u‖_{L^q}` over the solution domain with the Riemannian measure
/// `c_m σ^{m−1} dr`; `q = ∞` gives `max u`. The tail flag reports whether the
/// integrand is still contributing at the end of the grid.
pub fn lq_norm(sol: &RadialSolution, q: f64) -> Result<IntegralReport, AnalysisError> {
    if q.is_nan() || q < sol.p - 1.0 - 1e-12 {
        return Err(AnalysisError::InvalidArgument(format!(
            "q must be at least p - 1 = {}, got {q}",
            sol.p - 1.0
        )));
    }
    if q == f64::INFINITY {
        let max = sol.values.iter().fold(0.0f64, |m, &v| m.max(v));
        return Ok(IntegralReport {
            value: max,
            log_integral: max.ln(),
            upper_limit: sol.grid.last(),
            tail_ratio: 0.0,
            tail_exponent: f64::INFINITY,
            tail: TailFlag::Finite,
        });
    }
    let cells = cell_logs(sol, f64::NEG_INFINITY, |_, u, _| ln_pow(u, q))?;
    Ok(report(&cells, upper_limit(sol), sol.grid.first(), q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormReport {
    pub c: f64,
    /// `∫ e^{Cr}(u^p + |u'|^p) c_m σ^{m−1} dr`.
    pub integral: IntegralReport,
    /// `(λp)^{1/p}` for power-law nonlinearities.
    pub threshold: Option<f64>,
    /// Whether `C` lies below [`threshold`](Self::threshold).
    pub hypothesis_holds: Option<bool>,
}

/// Exponentially weighted `W^{1,p}` energy of the solution.
pub fn weighted_sobolev_norm(sol: &RadialSolution, c: f64) -> Result<WeightedNormReport, AnalysisError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!(
            "weight exponent must be positive, got {c}"
        )));
    }
    let p = sol.p;
    let cells = cell_logs(sol, f64::NEG_INFINITY, |x, u, s| {
        c * x + log_sum_exp([ln_pow(u, p), ln_pow(s, p)].into_iter())
    })?;
    let integral = report(&cells, upper_limit(sol), sol.grid.first(), 1.0);
    let threshold = sol.lambda.coefficient().map(|l| (l * p).powf(1.0 / p));
    Ok(WeightedNormReport {
        c,
        integral,
        threshold,
        hypothesis_holds: threshold.map(|t| c < t),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub margin: f64,
    /// `‖u‖_{L^p}` on the whole domain.
    pub u_norm: IntegralReport,
    /// `∫ |u'|^p c_m σ^{m−1}` over `[R + margin, end]`, when checked.
    pub gradient: Option<IntegralReport>,
    pub skipped: Option<String>,
    /// True unless `u ∈ L^p` was observed together with a divergent gradient.
    pub consistent: bool,
}

/// One grid cell beyond the inner radius.
pub fn default_margin(sol: &RadialSolution) -> f64 {
    sol.grid.nodes[1] - sol.grid.nodes[0]
}

/// Checks that `u ∈ L^p` implies `|u'| ∈ L^p` away from the inner boundary.
/// When the `L^p` norm of `u` itself shows a divergent trend the implication
/// has nothing to test and the check is skipped.
pub fn gradient_lp_check(sol: &RadialSolution, margin: f64) -> Result<GradientCheck, AnalysisError> {
    if !(margin > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let u_norm = lq_norm(sol, sol.p)?;
    if u_norm.tail == TailFlag::Divergent {
        return Ok(GradientCheck {
            margin,
            u_norm,
            gradient: None,
            skipped: Some("u is not in L^p on the sampled domain (divergent tail); nothing to check".into()),
            consistent: true,
        });
    }
    let from = sol.grid.first() + margin;
    let p = sol.p;
    let cells = cell_logs(sol, from, |_, _, s| ln_pow(s, p))?;
    let gradient = report(&cells, upper_limit(sol), from, 1.0);
    let consistent = gradient.tail == TailFlag::Finite;
    Ok(GradientCheck {
        margin,
        u_norm,
        gradient: Some(gradient),
        skipped: None,
        consistent,
    })
}
