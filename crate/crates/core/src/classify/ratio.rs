//! Volume ratios `∫_0^r σ^{m−1} / σ^{m−1}(r)` and `∫_r^∞ σ^{m−1} / σ^{m−1}(r)`.
//!
//! Evaluating `log σ^{m−1}(t) − log σ^{m−1}(r)` by subtraction loses all
//! precision once `log σ^{m−1}` is large (for `σ = t e^{t³}` at `t = 2^{30}`
//! the logs are ~1e27). Instead the exponent is accumulated as an integral of
//! the log-derivative `L' = (m−1)σ'/σ`, which stays accurate at any scale, and
//! the integration variable is the distance to the dominant endpoint so that
//! boundary layers much thinner than `ulp(r)` are still resolved.

use crate::warping::{EvalError, ModelManifold};

use super::quadrature::{gauss_legendre_10, gl10, integrate, integrate_log, log_add, log_sum_exp};
use super::{log_tail_integral, CumulativeVolume, VerdictPolicy};

const MAX_PANELS: usize = 2000;

/// `log ∫_0^W exp(−Φ(s)) ds` where `Φ(0) = 0` and `Φ' = g`, for `g` mostly
/// nonnegative. `W` may be infinite; `None` if the integral does not settle.
pub(crate) fn log_decaying<G>(mut g: G, w: f64) -> Result<Option<f64>, EvalError>
where
    G: FnMut(f64) -> Result<f64, EvalError>,
{
    let g0 = g(0.0)?;
    let mut h = if g0 > 0.0 { 1.0 / g0 } else { 1.0 };
    if w.is_finite() {
        h = h.min(w);
    }
    let mut s = 0.0f64;
    let mut phi = 0.0f64;
    let mut total = f64::NEG_INFINITY;
    for _ in 0..MAX_PANELS {
        let end = if s == 0.0 { h } else { 2.0 * s }.min(w);
        if !end.is_finite() || end <= s {
            return Ok(None);
        }
        let mut prev = s;
        let mut phi_prev = phi;
        let mut terms = [0.0f64; 10];
        for (i, (x, wt)) in gauss_legendre_10(s, end).into_iter().enumerate() {
            phi_prev += gl10(&mut g, prev, x)?;
            prev = x;
            terms[i] = wt.ln() - phi_prev;
        }
        phi = phi_prev + gl10(&mut g, prev, end)?;
        let panel = log_sum_exp(terms);
        total = log_add(total, panel);
        s = end;
        if s >= w {
            return Ok(Some(total));
        }
        let remaining_width = if w.is_finite() { w - s } else { s };
        let negligible = total + (1e-17f64).ln();
        if panel <= negligible && remaining_width.ln() - phi <= negligible && g(s)? > 0.0 {
            return Ok(Some(total));
        }
    }
    Ok(None)
}

/// Cached `log(∫_0^r σ^{m−1} / σ^{m−1}(r))` with breakpoints at `1, 2, 4, …`.
pub struct InnerRatio<'a> {
    manifold: &'a ModelManifold,
    cum: CumulativeVolume<'a>,
    policy: VerdictPolicy,
    breaks: Vec<(f64, f64)>,
}

impl<'a> InnerRatio<'a> {
    pub fn new(manifold: &'a ModelManifold, policy: &VerdictPolicy) -> Self {
        InnerRatio {
            manifold,
            cum: CumulativeVolume::new(manifold, policy),
            policy: *policy,
            breaks: Vec::new(),
        }
    }

    fn direct(&mut self, r: f64) -> Result<f64, EvalError> {
        Ok(self.cum.log_at(r)? - self.manifold.log_sigma_pow(r)?)
    }

    /// Moves the ratio from breakpoint `b` to `r > b`.
    fn step(&self, b: f64, log_rb: f64, r: f64) -> Result<f64, EvalError> {
        let m = self.manifold;
        let dl = integrate(|t| m.log_sigma_pow_derivative(t), b, r, 1e-13, 200)?;
        let w = r - b;
        let gr = m.log_sigma_pow_derivative(r)?;
        let gb = m.log_sigma_pow_derivative(b)?;
        let j = if gr >= 0.0 && gb >= 0.0 {
            log_decaying(|v| m.log_sigma_pow_derivative(r - v), w)?
        } else if gr <= 0.0 && gb <= 0.0 {
            log_decaying(|v| Ok(-m.log_sigma_pow_derivative(b + v)?), w)?.map(|x| x - dl)
        } else {
            None
        };
        let j = match j {
            Some(j) => j,
            None => {
                let lr = m.log_sigma_pow(r)?;
                integrate_log(
                    |t| Ok(m.log_sigma_pow(t)? - lr),
                    b,
                    r,
                    self.policy.quad_rel_tol,
                    self.policy.max_panels,
                )?
                .log_value
            }
        };
        Ok(log_add(log_rb - dl, j))
    }

    pub fn log_at(&mut self, r: f64) -> Result<f64, EvalError> {
        if !(r > 0.0) {
            return Err(EvalError::BadRadius(r));
        }
        if r <= 1.0 {
            return self.direct(r);
        }
        if self.breaks.is_empty() {
            let v = self.direct(1.0)?;
            self.breaks.push((1.0, v));
        }
        loop {
            let (b, v) = *self.breaks.last().expect("seeded");
            if 2.0 * b > r {
                break;
            }
            let next = self.step(b, v, 2.0 * b)?;
            self.breaks.push((2.0 * b, next));
        }
        let idx = self.breaks.partition_point(|&(b, _)| b <= r) - 1;
        let (b, v) = self.breaks[idx];
        if b == r {
            Ok(v)
        } else {
            self.step(b, v, r)
        }
    }
}

/// `log(∫_r^∞ σ^{m−1} / σ^{m−1}(r))`; `None` when the tail volume is infinite
/// or does not settle.
pub fn log_tail_ratio(
    manifold: &ModelManifold,
    r: f64,
    policy: &VerdictPolicy,
) -> Result<Option<f64>, EvalError> {
    if manifold.log_sigma_pow_derivative(r)? < 0.0 {
        if let Some(v) = log_decaying(|v| Ok(-manifold.log_sigma_pow_derivative(r + v)?), f64::INFINITY)? {
            return Ok(Some(v));
        }
    }
    let lr = manifold.log_sigma_pow(r)?;
    Ok(log_tail_integral(|t| manifold.log_sigma_pow(t), r, policy)?.map(|v| v - lr))
}
