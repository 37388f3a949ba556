//! Independent solver: direct minimization of the discrete energy
//! `Σ w_{i+1/2} Δr_i (1/p)|δ_i u|^p + Σ w_i d_i F(u_i)` over nodal vectors
//! with fixed ends and `0 ≤ u ≤ max(a, b)`.

use super::newton::{
    check_boundary, check_grid, epsilon_schedule, floor, lambda_delta, linear_guess, needs_continuation,
};
use super::scheme::{phi, phi_prime, solve_tridiagonal, Scheme};
use super::{
    ExteriorProblem, Grid, IterationRecord, LambdaSpec, Provenance, RadialSolution, SolveOptions,
    SolverError,
};

/// Weights normalized by their maximum over the grid.
struct Weights {
    mid: Vec<f64>,
    node: Vec<f64>,
    /// `log max w`
    log_max: f64,
}

fn weights(scheme: &Scheme) -> Weights {
    let log_max = scheme
        .log_w_mid
        .iter()
        .chain(&scheme.log_w_node)
        .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    Weights {
        mid: scheme.log_w_mid.iter().map(|l| (l - log_max).exp()).collect(),
        node: scheme.log_w_node.iter().map(|l| (l - log_max).exp()).collect(),
        log_max,
    }
}

/// `(1/p)((s² + ε²)^{p/2} − ε^p)`, which tends to `|s|^p/p` as `ε → 0`.
fn density(p: f64, eps: f64, s: f64) -> f64 {
    if eps == 0.0 {
        return s.abs().powf(p) / p;
    }
    ((s * s + eps * eps).powf(0.5 * p) - eps.powf(p)) / p
}

fn energy(scheme: &Scheme, w: &Weights, lambda: &LambdaSpec, u: &[f64], eps: f64, delta: f64) -> f64 {
    let s = scheme.slopes(u);
    let n = u.len() - 1;
    let grad: f64 = (0..n).map(|i| w.mid[i] * scheme.h[i] * density(scheme.p, eps, s[i])).sum();
    let load: f64 = (1..n)
        .map(|i| w.node[i] * scheme.d[i] * lambda.primitive_smoothed(u[i], delta))
        .sum();
    grad + load
}

fn gradient(scheme: &Scheme, w: &Weights, lambda: &LambdaSpec, u: &[f64], eps: f64, delta: f64) -> Vec<f64> {
    let s = scheme.slopes(u);
    let n = u.len() - 1;
    let mut g = vec![0.0; n + 1];
    for i in 1..n {
        g[i] = w.mid[i - 1] * phi(scheme.p, eps, s[i - 1]) - w.mid[i] * phi(scheme.p, eps, s[i])
            + w.node[i] * scheme.d[i] * lambda.value(u[i], delta);
    }
    g
}

/// Projected-gradient residual in the same equation units as Newton's.
fn projected_residual(scheme: &Scheme, w: &Weights, g: &[f64], u: &[f64], hi: f64) -> f64 {
    let n = u.len() - 1;
    (1..n)
        .map(|i| {
            let blocked = (u[i] <= 0.0 && g[i] > 0.0) || (u[i] >= hi && g[i] < 0.0);
            if blocked {
                0.0
            } else {
                g[i].abs() * (w.log_max - scheme.log_scale[i]).exp() / scheme.d[i]
            }
        })
        .fold(0.0, f64::max)
}

/// Discrete energy of `u` on `grid` with the exact (`ε = 0`) density, using
/// weights normalized by their grid maximum.
pub fn discrete_energy(prob: &ExteriorProblem, grid: &Grid, u: &[f64]) -> Result<f64, SolverError> {
    let scheme = Scheme::new(&prob.manifold, grid, prob.p)?;
    let w = weights(&scheme);
    Ok(energy(&scheme, &w, &prob.lambda, u, 0.0, 0.0))
}

#[allow(clippy::too_many_arguments)]
fn descend_level(
    scheme: &Scheme,
    w: &Weights,
    lambda: &LambdaSpec,
    u: &mut Vec<f64>,
    hi: f64,
    eps: f64,
    opts: &SolveOptions,
    trace: &mut Vec<IterationRecord>,
) -> (bool, f64, usize) {
    let delta = lambda_delta(lambda, scheme.p, eps);
    let n = u.len() - 1;
    let mut e = energy(scheme, w, lambda, u, eps, delta);
    for it in 0..opts.max_iter {
        let g = gradient(scheme, w, lambda, u, eps, delta);
        let res = projected_residual(scheme, w, &g, u, hi);
        if res <= opts.tol {
            return (true, res, it);
        }
        // Newton-type direction from the tridiagonal Hessian on the free set.
        let s = scheme.slopes(u);
        let mut lo = vec![0.0; n + 1];
        let mut di = vec![0.0; n + 1];
        let mut up = vec![0.0; n + 1];
        let mut rhs = vec![0.0; n + 1];
        for i in 1..n {
            let blocked = (u[i] <= 0.0 && g[i] > 0.0) || (u[i] >= hi && g[i] < 0.0);
            if blocked {
                di[i] = 1.0;
                continue;
            }
            let kl = w.mid[i - 1] * phi_prime(scheme.p, eps, s[i - 1]) / scheme.h[i - 1];
            let kr = w.mid[i] * phi_prime(scheme.p, eps, s[i]) / scheme.h[i];
            di[i] = kl + kr + w.node[i] * scheme.d[i] * lambda.derivative(u[i], delta);
            let left_free = i > 1 && !((u[i - 1] <= 0.0 && g[i - 1] > 0.0) || (u[i - 1] >= hi && g[i - 1] < 0.0));
            let right_free = i + 1 < n && !((u[i + 1] <= 0.0 && g[i + 1] > 0.0) || (u[i + 1] >= hi && g[i + 1] < 0.0));
            if left_free {
                lo[i] = -kl;
            }
            if right_free {
                up[i] = -kr;
            }
            rhs[i] = -g[i];
        }
        let dir = match solve_tridiagonal(&lo, &di, &up, &rhs) {
            Some(d) => d,
            // Fall back to steepest descent.
            None => rhs.clone(),
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut trial = u.clone();
        for _ in 0..50 {
            for i in 1..n {
                trial[i] = (u[i] + alpha * dir[i]).clamp(0.0, hi);
            }
            let e_new = energy(scheme, w, lambda, &trial, eps, delta);
            let decrease: f64 = (1..n).map(|i| g[i] * (trial[i] - u[i])).sum();
            if e_new.is_finite() && e_new <= e + 1e-4 * decrease {
                e = e_new;
                accepted = true;
                break;
            }
            // Near the minimizer energy differences drown in rounding; there
            // a step is acceptable if it keeps the energy level and reduces
            // the projected gradient.
            if e_new.is_finite() && e_new - e <= 64.0 * f64::EPSILON * e.abs() {
                let g_new = gradient(scheme, w, lambda, &trial, eps, delta);
                if projected_residual(scheme, w, &g_new, &trial, hi) < res {
                    e = e_new;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        let moved = trial
            .iter()
            .zip(u.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        trace.push(IterationRecord {
            epsilon: eps,
            iteration: it,
            residual: res,
            step: if accepted { moved } else { 0.0 },
        });
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        if !accepted || moved <= 4.0 * f64::EPSILON * scale {
            // No further decrease representable in floating point.
            let g = gradient(scheme, w, lambda, u, eps, delta);
            let res = projected_residual(scheme, w, &g, u, hi);
            return (res <= opts.tol.max(floor(scheme, lambda, u, eps, delta)), res, it);
        }
        *u = trial;
    }
    let g = gradient(scheme, w, lambda, u, eps, delta);
    let res = projected_residual(scheme, w, &g, u, hi);
    (res <= opts.tol.max(floor(scheme, lambda, u, eps, delta)), res, opts.max_iter)
}

/// Minimizes the discrete energy with the same boundary data as
/// [`solve_annulus_bvp`](super::solve_annulus_bvp).
pub fn minimize_energy(
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
    check_grid(grid, prob.r_inner, width)?;
    let scheme = Scheme::new(&prob.manifold, grid, prob.p)?;
    let w = weights(&scheme);
    let mut u = match initial {
        Some(v) if v.len() == grid.len() => v.to_vec(),
        _ => linear_guess(grid, a, outer_value),
    };
    let n = u.len() - 1;
    u[0] = a;
    u[n] = outer_value;
    let hi = a.max(outer_value);
    for v in u.iter_mut() {
        *v = v.clamp(0.0, hi);
    }
    let levels = if needs_continuation(prob.p, &prob.lambda) {
        epsilon_schedule(opts.eps_min)
    } else {
        vec![0.0]
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let last = levels.len() - 1;
    for (k, &eps) in levels.iter().enumerate() {
        let (ok, res, its) = descend_level(&scheme, &w, &prob.lambda, &mut u, hi, eps, opts, &mut trace);
        iterations += its;
        if k == last {
            if !ok {
                return Err(SolverError::NonConvergence {
                    reason: format!(
                        "energy descent stalled with residual {res:.3e} (tolerance {:.1e})",
                        opts.tol
                    ),
                    trace,
                });
            }
            return Ok(RadialSolution {
                grid: grid.clone(),
                values: u,
                p: prob.p,
                m: prob.manifold.m,
                lambda: prob.lambda.clone(),
                manifold: prob.manifold.clone(),
                inner_value: a,
                outer_value,
                residual_norm: res,
                epsilon_final: eps,
                provenance: Provenance::Energy,
                iterations,
                exhaustion: None,
            });
        }
    }
    unreachable!("schedule is non-empty")
}
