//! Independent reference solutions shared by the integration tests.
#![allow(dead_code)]

use pfeller::radial_solver::{
    minimal_exterior_solution, ExhaustionOptions, ExteriorProblem, LambdaSpec, RadialSolution, SolverKind,
};
use pfeller::warping::{Family, ModelManifold};

pub fn manifold(family: Family, m: u32) -> ModelManifold {
    ModelManifold::family(family, m).expect("built-in family")
}

pub fn power_problem(family: Family, m: u32, p: f64, lambda: f64, xi: f64) -> ExteriorProblem {
    ExteriorProblem::new(manifold(family, m), 1.0, p, LambdaSpec::power_law(lambda, xi).unwrap()).unwrap()
}

/// Minimal solution of `Δ_p h = λ h^{p−1}`, `h(1) = 1`, on the window `[1, 1+w]`.
pub fn minimal(family: Family, m: u32, p: f64, lambda: f64, w: f64, n: usize) -> RadialSolution {
    minimal_with(power_problem(family, m, p, lambda, p - 1.0), w, n, SolverKind::Newton)
}

pub fn minimal_with(prob: ExteriorProblem, w: f64, n: usize, solver: SolverKind) -> RadialSolution {
    let mut opts = ExhaustionOptions::new(w, n);
    opts.solver = solver;
    minimal_exterior_solution(&prob, &opts).expect("exhaustion converges")
}

/// `e^{−√λ (r−1)}/r`
pub fn euclid_exact(lambda: f64, r: f64) -> f64 {
    (-(lambda.sqrt()) * (r - 1.0)).exp() / r
}

pub fn sup_error<F: Fn(f64) -> f64>(sol: &RadialSolution, f: F) -> f64 {
    sol.grid
        .nodes
        .iter()
        .zip(&sol.values)
        .map(|(&r, &u)| (u - f(r)).abs())
        // NaN must not be swallowed by `max`.
        .fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// One classical RK4 step for `y' = f(x, y)` in two dimensions.
pub fn rk4_step<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: &F, x: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = f(x + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = f(x + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Minimal solution of `u'' + L u' = u` on the cusp `σ = t e^{−t³}` (p = 2,
/// λ = 1), with `L = (m−1)(1/r − 3r²)`. The bounded solution follows the slow
/// mode `u'/u ≈ 1/L` at large `r`; integrating backwards from `r_end` damps
/// the other mode like `e^{−(m−1)(r_end³ − r³)}`, so starting on the
/// approximate slow mode is enough. Returns samples of `h = u/u(1)` on a
/// uniform grid of `steps` cells and the limit `h(∞)`, obtained from
/// `log h(∞) − log h(r_end) = ∫ u'/u ≈ −1/(3(m−1) r_end)`.
pub struct CuspOracle {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub limit: f64,
}

pub fn cusp_p2_oracle(m: u32, r_end: f64, steps: usize) -> CuspOracle {
    let k = f64::from(m - 1);
    let drift = |r: f64| k * (1.0 / r - 3.0 * r * r);
    let f = |r: f64, y: [f64; 2]| [y[1], y[0] - drift(r) * y[1]];
    let h = (r_end - 1.0) / steps as f64;
    let mut y = [1.0, 1.0 / drift(r_end)];
    let mut rs = vec![r_end];
    let mut us = vec![y[0]];
    for i in 0..steps {
        let x = r_end - i as f64 * h;
        y = rk4_step(&f, x, y, -h);
        rs.push(x - h);
        us.push(y[0]);
    }
    rs.reverse();
    us.reverse();
    let u1 = us[0];
    let hs: Vec<f64> = us.iter().map(|u| u / u1).collect();
    let tail = -1.0 / (3.0 * k * r_end) - 1.0 / (36.0 * k * r_end.powi(4));
    CuspOracle {
        limit: hs[hs.len() - 1] * tail.exp(),
        r: rs,
        h: hs,
    }
}

impl CuspOracle {
    pub fn at(&self, r: f64) -> f64 {
        let step = self.r[1] - self.r[0];
        let i = (((r - self.r[0]) / step) as usize).min(self.r.len() - 2);
        let t = (r - self.r[i]) / step;
        self.h[i] * (1.0 - t) + self.h[i + 1] * t
    }
}

/// Free boundary `ρ` of the radial solution of `u'' + ((m−1)/r) u' = √u` with
/// `u(1) = 1` that vanishes with its derivative at `ρ`. Near `ρ` the solution
/// is `(ρ−r)⁴/144` to leading order; the shooting starts there at distance
/// `d` and integrates backwards to `r = 1`, and `ρ` is found by bisection on
/// `u(1) = 1` (the backward value grows with `ρ`).
pub fn free_boundary_radius(m: u32, d: f64, h: f64) -> f64 {
    let k = f64::from(m - 1);
    let f = |r: f64, y: [f64; 2]| [y[1], y[0].max(0.0).sqrt() - k / r * y[1]];
    let value_at_one = |rho: f64| {
        let mut x = rho - d;
        let mut y = [d.powi(4) / 144.0, -d.powi(3) / 36.0];
        let n = ((x - 1.0) / h).ceil() as usize;
        let step = (x - 1.0) / n as f64;
        for _ in 0..n {
            y = rk4_step(&f, x, y, -step);
            x -= step;
        }
        y[0]
    };
    let (mut lo, mut hi) = (1.0 + 2.0 * d, 20.0);
    assert!(value_at_one(lo) < 1.0 && value_at_one(hi) > 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if value_at_one(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
