//! A posteriori weak-form residual with the unregularized flux.

use crate::classify::quadrature::gauss_legendre_10;

use super::scheme::phi;
use super::{RadialSolution, SolverError};

/// Weak residual rows `∫ w φ_p(u') ψ_i' + ∫ w Λ(u) ψ_i` against the interior
/// hat functions `ψ_i` of the grid, for the piecewise-linear interpolant of
/// the nodal values. Every row is divided by `S_i d_i`, where `S_i` is the
/// largest weight sampled on the support of `ψ_i` (nodes and
/// quadrature points) and `d_i` its dual cell width, so
/// rows are in the same units as the pointwise equation. Ends are zero.
pub fn weak_residual_rows(sol: &RadialSolution) -> Result<Vec<f64>, SolverError> {
    let r = &sol.grid.nodes;
    let u = &sol.values;
    let n = r.len() - 1;
    let s = sol.slopes();
    let mut rows = vec![0.0; n + 1];
    // Per cell: quadrature nodes with log-weights, shared by the two hats.
    let log_node = r
        .iter()
        .map(|&x| sol.manifold.log_sigma_pow(x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::with_capacity(n);
    for j in 0..n {
        let pts = gauss_legendre_10(r[j], r[j + 1]);
        let mut lw = [0.0; 10];
        for (k, &(x, _)) in pts.iter().enumerate() {
            lw[k] = sol.manifold.log_sigma_pow(x)?;
        }
        cells.push((pts, lw));
    }
    for i in 1..n {
        let log_s = cells[i - 1]
            .1
            .iter()
            .chain(cells[i].1.iter())
            .chain(&log_node[i - 1..=i + 1])
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let d = 0.5 * (r[i + 1] - r[i - 1]);
        let mut acc = 0.0;
        // Left cell: ψ_i rises from 0 to 1; right cell: falls from 1 to 0.
        for (j, rising) in [(i - 1, true), (i, false)] {
            let (pts, lw) = &cells[j];
            let h = r[j + 1] - r[j];
            let dpsi = if rising { 1.0 / h } else { -1.0 / h };
            let flux = phi(sol.p, 0.0, s[j]);
            for (k, &(x, wq)) in pts.iter().enumerate() {
                let w = (lw[k] - log_s).exp();
                let t = (x - r[j]) / h;
                let psi = if rising { t } else { 1.0 - t };
                let ux = u[j] * (1.0 - t) + u[j + 1] * t;
                acc += wq * w * (flux * dpsi + sol.lambda.value(ux, 0.0) * psi);
            }
        }
        rows[i] = acc / d;
    }
    Ok(rows)
}

/// `max_i |row_i|` of [`weak_residual_rows`].
pub fn weak_residual(sol: &RadialSolution) -> Result<f64, SolverError> {
    Ok(weak_residual_rows(sol)?
        .iter()
        .fold(0.0, |m: f64, x| m.max(x.abs())))
}
