//! Damped Newton on the conservative scheme with ε-continuation.

use super::scheme::{solve_tridiagonal, Scheme};
use super::{
    ExteriorProblem, Grid, IterationRecord, LambdaSpec, Provenance, RadialSolution, SolveOptions,
    SolverError,
};

/// `ε_k = 10^{−2}·4^{−k}` down to the first level `≤ eps_min`.
pub fn epsilon_schedule(eps_min: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = 1e-2;
    loop {
        out.push(e);
        if e <= eps_min {
            return out;
        }
        e *= 0.25;
    }
}

/// Smoothing width `δ` for a `Λ` with infinite slope at 0, tied to the flux
/// regularization. When `Λ` has the flux's homogeneity (`ξ = p − 1`), `δ = ε`
/// makes both linear below the same scale, so the regularized problem keeps
/// the exponential tail of the exact one; with `δ = ε²` it would acquire a
/// spurious free boundary there. For `ξ < p − 1` the support is compact anyway
/// and `δ = ε²` keeps the smoothing far below any detection threshold.
pub(crate) fn lambda_delta(lambda: &LambdaSpec, p: f64, eps: f64) -> f64 {
    match lambda {
        LambdaSpec::PowerLaw { xi, .. } if lambda.is_singular_at_zero() => {
            if *xi >= p - 1.0 - 1e-12 {
                eps
            } else {
                eps * eps
            }
        }
        _ => 0.0,
    }
}

pub(crate) fn needs_continuation(p: f64, lambda: &LambdaSpec) -> bool {
    !(p == 2.0 && (lambda.is_zero() || lambda.is_linear()))
}

pub(crate) fn check_boundary(a: f64, b: f64) -> Result<(), SolverError> {
    if a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(SolverError::InvalidBoundary { a, b })
    }
}

pub(crate) fn check_grid(grid: &Grid, r_inner: f64, width: f64) -> Result<(), SolverError> {
    let end = r_inner + width;
    if (grid.first() - r_inner).abs() > 1e-12 * r_inner.max(1.0)
        || (grid.last() - end).abs() > 1e-12 * end.max(1.0)
    {
        return Err(SolverError::InvalidGrid(format!(
            "grid spans [{}, {}] but the annulus is [{r_inner}, {end}]",
            grid.first(),
            grid.last()
        )));
    }
    Ok(())
}

pub(crate) fn linear_guess(grid: &Grid, a: f64, b: f64) -> Vec<f64> {
    let (r0, r1) = (grid.first(), grid.last());
    grid.nodes
        .iter()
        .map(|&r| a + (b - a) * (r - r0) / (r1 - r0))
        .collect()
}

/// Cap on the extra Newton steps taken after the tolerance is met.
const MAX_POLISH: usize = 12;

struct Outcome {
    converged: bool,
    residual: f64,
    iterations: usize,
}

fn project(u: &mut [f64], hi: f64) {
    for v in u.iter_mut() {
        *v = v.clamp(0.0, hi);
    }
}

fn merit(scheme: &Scheme, g: &[f64]) -> f64 {
    let n = g.len() - 1;
    (1..n).map(|i| (g[i] / scheme.d[i]).powi(2)).sum::<f64>()
}

/// Finite rounding floor of the residual at `u` (zero if not finite).
pub(crate) fn floor(scheme: &Scheme, lambda: &LambdaSpec, u: &[f64], eps: f64, delta: f64) -> f64 {
    let f = scheme.residual_floor(u, lambda, eps, delta);
    if f.is_finite() {
        f
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn newton_level(
    scheme: &Scheme,
    lambda: &LambdaSpec,
    u: &mut Vec<f64>,
    hi: f64,
    eps: f64,
    opts: &SolveOptions,
    final_level: bool,
    trace: &mut Vec<IterationRecord>,
) -> Outcome {
    let delta = lambda_delta(lambda, scheme.p, eps);
    let mut g = scheme.residual(u, lambda, eps, delta);
    let mut res = scheme.residual_norm(&g);
    let mut f = merit(scheme, &g);
    // Once the tolerance is met, more full steps are taken while the steps
    // keep contracting. The norm is dominated by the rows where `u` is of
    // order one, so it cannot see that rows in a decayed tail (where every
    // term is tiny) are still far from solved; the step size can.
    let max_polish = if final_level { MAX_POLISH } else { 0 };
    let mut polish = 0;
    let mut prev_moved = f64::INFINITY;
    for it in 0..opts.max_iter {
        // Rows at their rounding floor count as solved for the decision to
        // polish; the polish itself is steered by the step size only.
        let polishing = res <= opts.tol.max(floor(scheme, lambda, u, eps, delta));
        if polishing && polish >= max_polish {
            return Outcome {
                converged: true,
                residual: res,
                iterations: it,
            };
        }
        let (lo, di, up) = scheme.jacobian(u, lambda, eps, delta);
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let Some(step) = solve_tridiagonal(&lo, &di, &up, &rhs) else {
            return Outcome {
                converged: false,
                residual: res,
                iterations: it,
            };
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut trial = u.clone();
        for _ in 0..40 {
            for (t, (x, s)) in trial.iter_mut().zip(u.iter().zip(&step)) {
                *t = x + alpha * s;
            }
            project(&mut trial, hi);
            let g_new = scheme.residual(&trial, lambda, eps, delta);
            let f_new = merit(scheme, &g_new);
            let res_new = scheme.residual_norm(&g_new);
            let polish_ok = polishing && alpha == 1.0 && res_new <= opts.tol.max(2.0 * res);
            if f_new.is_finite() && (polish_ok || f_new <= (1.0 - 1e-4 * alpha) * f) {
                g = g_new;
                f = f_new;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        let moved = trial
            .iter()
            .zip(u.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if polishing && (!accepted || moved > 0.5 * prev_moved) {
            // Contraction has stopped: the last accepted iterate is kept.
            return Outcome {
                converged: true,
                residual: res,
                iterations: it,
            };
        }
        if !accepted {
            trace.push(IterationRecord {
                epsilon: eps,
                iteration: it,
                residual: res,
                step: 0.0,
            });
            return Outcome {
                converged: res <= opts.tol.max(floor(scheme, lambda, u, eps, delta)),
                residual: res,
                iterations: it,
            };
        }
        *u = trial;
        res = scheme.residual_norm(&g);
        if polishing {
            polish += 1;
        }
        prev_moved = moved;
        trace.push(IterationRecord {
            epsilon: eps,
            iteration: it,
            residual: res,
            step: moved,
        });
        let scale = u.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        // While polishing, tiny steps are still worth taking: they act as
        // iterative refinement for values far below the scale of `u`.
        let stalled = if polishing { moved == 0.0 } else { moved <= 4.0 * f64::EPSILON * scale };
        if stalled {
            // Stagnation: accept if the residual is at the rounding floor of
            // the assembled rows.
            return Outcome {
                converged: res <= opts.tol.max(floor(scheme, lambda, u, eps, delta)),
                residual: res,
                iterations: it + 1,
            };
        }
    }
    Outcome {
        converged: res <= opts.tol,
        residual: res,
        iterations: opts.max_iter,
    }
}

/// Runs Newton with ε-continuation on a prepared scheme. `u` carries the
/// boundary values in its first and last entries.
pub(crate) fn newton_solve(
    scheme: &Scheme,
    lambda: &LambdaSpec,
    u: &mut Vec<f64>,
    opts: &SolveOptions,
) -> Result<(f64, f64, usize), SolverError> {
    let n = u.len() - 1;
    let hi = u[0].max(u[n]);
    project(u, hi);
    let levels = if needs_continuation(scheme.p, lambda) {
        epsilon_schedule(opts.eps_min)
    } else {
        vec![0.0]
    };
    let mut trace = Vec::new();
    let mut total_iters = 0;
    let last = levels.len() - 1;
    for (k, &eps) in levels.iter().enumerate() {
        let out = newton_level(scheme, lambda, u, hi, eps, opts, k == last, &mut trace);
        total_iters += out.iterations;
        if k == last {
            if !out.converged {
                return Err(SolverError::NonConvergence {
                    reason: format!(
                        "residual {:.3e} above tolerance {:.1e} at epsilon {eps:.1e}",
                        out.residual, opts.tol
                    ),
                    trace,
                });
            }
            return Ok((out.residual, eps, total_iters));
        }
    }
    unreachable!("schedule is non-empty")
}

/// Solves the annulus problem on `[R, R+L]` with `u(R) = inner_value` and
/// `u(R+L) = outer_value`.
pub fn solve_annulus_bvp(
    prob: &ExteriorProblem,
    width: f64,
    outer_value: f64,
    grid: &Grid,
    opts: &SolveOptions,
    initial: Option<&[f64]>,
) -> Result<RadialSolution, SolverError> {
    prob.validate()?;
    let a = prob.inner_value;
    check_boundary(a, outer_value)?;
    if !(width > 0.0) {
        return Err(SolverError::InvalidProblem(format!(
            "annulus width must be positive, got {width}"
        )));
    }
    check_grid(grid, prob.r_inner, width)?;
    let scheme = Scheme::new(&prob.manifold, grid, prob.p)?;
    let mut u = match initial {
        Some(v) if v.len() == grid.len() => v.to_vec(),
        _ => linear_guess(grid, a, outer_value),
    };
    let n = u.len() - 1;
    u[0] = a;
    u[n] = outer_value;
    let (residual, eps, iterations) = newton_solve(&scheme, &prob.lambda, &mut u, opts)?;
    Ok(RadialSolution {
        grid: grid.clone(),
        values: u,
        p: prob.p,
        m: prob.manifold.m,
        lambda: prob.lambda.clone(),
        manifold: prob.manifold.clone(),
        inner_value: a,
        outer_value,
        residual_norm: residual,
        epsilon_final: eps,
        provenance: Provenance::Newton,
        iterations,
        exhaustion: None,
    })
}
