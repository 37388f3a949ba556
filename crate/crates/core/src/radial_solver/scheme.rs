//! The conservative midpoint-flux discretization shared by both solvers.

use crate::warping::{EvalError, ModelManifold};

use super::grid::Grid;
use super::lambda::LambdaSpec;

/// `φ_{p,ε}(s) = (s² + ε²)^{(p−2)/2} s`
pub fn phi(p: f64, eps: f64, s: f64) -> f64 {
    if p == 2.0 {
        return s;
    }
    let q = s * s + eps * eps;
    if q == 0.0 {
        return 0.0;
    }
    half_power(q, p - 2.0) * s
}

/// `q^{k/2}` with fast paths for the common exponents.
#[inline]
fn half_power(q: f64, k: f64) -> f64 {
    if k == 1.0 {
        q.sqrt()
    } else if k == -1.0 {
        1.0 / q.sqrt()
    } else if k == -0.5 {
        1.0 / q.sqrt().sqrt()
    } else if k == -2.5 {
        let r = q.sqrt().sqrt();
        1.0 / (q * r)
    } else {
        q.powf(0.5 * k)
    }
}

/// `φ'_{p,ε}(s) = (s² + ε²)^{(p−4)/2} ((p−1)s² + ε²)`
pub fn phi_prime(p: f64, eps: f64, s: f64) -> f64 {
    if p == 2.0 {
        return 1.0;
    }
    let q = s * s + eps * eps;
    if q == 0.0 {
        return if p > 2.0 { 0.0 } else { f64::INFINITY };
    }
    half_power(q, p - 4.0) * ((p - 1.0) * s * s + eps * eps)
}

/// Per-row coefficients of the scaled residual
/// `G_i = a_i φ(s_i) − b_i φ(s_{i−1}) − c_i Λ(u_i)`, where `s_i` is the
/// divided difference on cell `i = [r_i, r_{i+1}]`. Each interior row is
/// divided by the largest of the three weights it touches (in log space), so
/// rows stay well scaled when `σ^{m−1}` spans hundreds of orders of magnitude.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub r: Vec<f64>,
    /// Cell widths, one per interval.
    pub h: Vec<f64>,
    /// Dual cell widths at the nodes (half cells at the ends).
    pub d: Vec<f64>,
    /// `log σ^{m−1}` at cell midpoints.
    pub log_w_mid: Vec<f64>,
    /// `log σ^{m−1}` at nodes.
    pub log_w_node: Vec<f64>,
    /// Row scale `log S_i` (interior rows only; ends unused).
    pub log_scale: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub p: f64,
}

impl Scheme {
    pub fn new(manifold: &ModelManifold, grid: &Grid, p: f64) -> Result<Scheme, EvalError> {
        let r = grid.nodes.clone();
        let n = r.len() - 1;
        let h: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        let mut d = vec![0.0; n + 1];
        for i in 0..=n {
            let left = if i > 0 { h[i - 1] } else { 0.0 };
            let right = if i < n { h[i] } else { 0.0 };
            d[i] = 0.5 * (left + right);
        }
        let log_w_mid = r
            .windows(2)
            .map(|w| manifold.log_sigma_pow(0.5 * (w[0] + w[1])))
            .collect::<Result<Vec<_>, _>>()?;
        let log_w_node = r
            .iter()
            .map(|&x| manifold.log_sigma_pow(x))
            .collect::<Result<Vec<_>, _>>()?;
        let mut log_scale = vec![0.0; n + 1];
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        for i in 1..n {
            let ls = log_w_mid[i].max(log_w_mid[i - 1]).max(log_w_node[i]);
            log_scale[i] = ls;
            a[i] = (log_w_mid[i] - ls).exp();
            b[i] = (log_w_mid[i - 1] - ls).exp();
            c[i] = (log_w_node[i] - ls).exp() * d[i];
        }
        Ok(Scheme {
            r,
            h,
            d,
            log_w_mid,
            log_w_node,
            log_scale,
            a,
            b,
            c,
            p,
        })
    }

    pub fn nodes(&self) -> usize {
        self.r.len()
    }

    pub fn slopes(&self, u: &[f64]) -> Vec<f64> {
        u.windows(2)
            .zip(&self.h)
            .map(|(w, h)| (w[1] - w[0]) / h)
            .collect()
    }

    /// Scaled residual rows (zero at the two boundary nodes).
    pub fn residual(&self, u: &[f64], lambda: &LambdaSpec, eps: f64, delta: f64) -> Vec<f64> {
        let s = self.slopes(u);
        let n = u.len() - 1;
        let mut g = vec![0.0; n + 1];
        for i in 1..n {
            g[i] = self.a[i] * phi(self.p, eps, s[i]) - self.b[i] * phi(self.p, eps, s[i - 1])
                - self.c[i] * lambda.value(u[i], delta);
        }
        g
    }

    /// Residual in equation units: `max_i |G_i| / d_i`.
    pub fn residual_norm(&self, g: &[f64]) -> f64 {
        let n = g.len() - 1;
        (1..n).map(|i| g[i].abs() / self.d[i]).fold(0.0, f64::max)
    }

    /// Rounding level of [`residual_norm`](Self::residual_norm) at `u`: the
    /// magnitude of the terms of each row plus the effect of one-ulp
    /// perturbations of the nodal values on the divided differences, in
    /// equation units. Residuals below this are not resolvable in `f64`.
    pub fn residual_floor(&self, u: &[f64], lambda: &LambdaSpec, eps: f64, delta: f64) -> f64 {
        let s = self.slopes(u);
        let n = u.len() - 1;
        let mut floor = 0.0f64;
        for i in 1..n {
            let terms = (self.a[i] * phi(self.p, eps, s[i])).abs()
                + (self.b[i] * phi(self.p, eps, s[i - 1])).abs()
                + (self.c[i] * lambda.value(u[i], delta)).abs();
            let umax = u[i - 1].abs().max(u[i].abs()).max(u[i + 1].abs());
            let sens = self.a[i] * phi_prime(self.p, eps, s[i]).min(1e300) / self.h[i]
                + self.b[i] * phi_prime(self.p, eps, s[i - 1]).min(1e300) / self.h[i - 1];
            floor = floor.max(4.0 * f64::EPSILON * (terms + sens * umax) / self.d[i]);
        }
        floor
    }

    /// Tridiagonal Jacobian `(lower, diag, upper)` of the interior rows.
    pub fn jacobian(
        &self,
        u: &[f64],
        lambda: &LambdaSpec,
        eps: f64,
        delta: f64,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let s = self.slopes(u);
        let n = u.len() - 1;
        let mut lo = vec![0.0; n + 1];
        let mut di = vec![0.0; n + 1];
        let mut up = vec![0.0; n + 1];
        for i in 1..n {
            let kr = self.a[i] * phi_prime(self.p, eps, s[i]) / self.h[i];
            let kl = self.b[i] * phi_prime(self.p, eps, s[i - 1]) / self.h[i - 1];
            up[i] = kr;
            lo[i] = kl;
            di[i] = -kr - kl - self.c[i] * lambda.derivative(u[i], delta);
        }
        (lo, di, up)
    }
}

/// Solves the tridiagonal system for the interior unknowns `1..n`; entries
/// at indices `0` and `n` are ignored and the result is zero there.
pub fn solve_tridiagonal(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len() - 1;
    if n < 2 {
        return Some(vec![0.0; n + 1]);
    }
    let mut cp = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    let mut x = vec![0.0; n + 1];
    for i in 1..n {
        let l = if i > 1 { lo[i] } else { 0.0 };
        let denom = di[i] - l * cp[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        cp[i] = if i + 1 < n { up[i] / denom } else { 0.0 };
        dp[i] = (rhs[i] - l * dp[i - 1]) / denom;
    }
    for i in (1..n).rev() {
        x[i] = dp[i] - if i + 1 < n { cp[i] * x[i + 1] } else { 0.0 };
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_matches_power_for_zero_eps() {
        assert!((phi(3.0, 0.0, -2.0) + 4.0).abs() < 1e-15);
        assert!((phi(1.5, 0.0, 4.0) - 2.0).abs() < 1e-15);
        assert_eq!(phi(1.5, 0.0, 0.0), 0.0);
    }

    #[test]
    fn phi_prime_is_derivative() {
        for &p in &[1.5, 2.0, 3.0] {
            for &s in &[-0.7, 0.0, 1e-3, 2.0] {
                let e = 1e-2;
                let h = 1e-7;
                let fd = (phi(p, e, s + h) - phi(p, e, s - h)) / (2.0 * h);
                let an = phi_prime(p, e, s);
                assert!((fd - an).abs() < 1e-5 * an.abs().max(1.0), "p={p} s={s}");
            }
        }
    }

    #[test]
    fn thomas_solves_small_system() {
        // interior 3x3: [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1 1 1]
        let lo = [0.0, 0.0, -1.0, -1.0, 0.0];
        let di = [0.0, 2.0, 2.0, 2.0, 0.0];
        let up = [0.0, -1.0, -1.0, 0.0, 0.0];
        let rhs = [0.0, 1.0, 0.0, 1.0, 0.0];
        let x = solve_tridiagonal(&lo, &di, &up, &rhs).unwrap();
        for v in &x[1..4] {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
