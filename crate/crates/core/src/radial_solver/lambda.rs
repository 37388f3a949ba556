//! Absorption nonlinearities `Λ` on the right-hand side of
//! `(σ^{m−1}|u'|^{p−2}u')' = σ^{m−1}Λ(u)`.

use serde::{Deserialize, Serialize};

use crate::classify::quadrature::gl10;
use crate::warping::{parse_expr, Expr, WarpingError};

use super::SolverError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSpec {
    /// `Λ(u) = λ u^ξ`
    PowerLaw { lambda: f64, xi: f64 },
    /// `Λ ≡ 0`: the p-harmonic test mode.
    Zero,
    /// A user expression in `u`, with its symbolic derivative.
    CustomMonotone {
        source: String,
        #[serde(skip)]
        expr: Option<Expr>,
        #[serde(skip)]
        deriv: Option<Expr>,
    },
}

impl LambdaSpec {
    pub fn power_law(lambda: f64, xi: f64) -> Result<LambdaSpec, SolverError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "xi must be nonnegative, got {xi}"
            )));
        }
        Ok(LambdaSpec::PowerLaw { lambda, xi })
    }

    /// Parses `Λ` from an expression in `u` and checks `Λ(0) = 0`, monotonicity
    /// and positivity on a probe grid.
    pub fn custom(source: &str) -> Result<LambdaSpec, SolverError> {
        let expr = parse_expr(source, 'u').map_err(WarpingError::from)?;
        let deriv = expr.derivative();
        let spec = LambdaSpec::CustomMonotone {
            source: source.to_string(),
            expr: Some(expr),
            deriv: Some(deriv),
        };
        spec.check_custom()?;
        Ok(spec)
    }

    /// Re-derives the expression trees after deserialization.
    pub fn rehydrate(self) -> Result<LambdaSpec, SolverError> {
        match self {
            LambdaSpec::CustomMonotone { source, expr: None, .. } => LambdaSpec::custom(&source),
            other => Ok(other),
        }
    }

    fn check_custom(&self) -> Result<(), SolverError> {
        let at0 = self.value(0.0, 0.0);
        if at0.abs() > 1e-14 {
            return Err(SolverError::InvalidProblem(format!(
                "custom nonlinearity must vanish at 0, got {at0}"
            )));
        }
        let mut prev = at0;
        for k in 1..=400 {
            let u = 10.0 * f64::from(k) / 400.0;
            let v = self.value(u, 0.0);
            if !v.is_finite() || v <= 0.0 {
                return Err(SolverError::InvalidProblem(format!(
                    "custom nonlinearity must be positive for u > 0, got {v} at u = {u}"
                )));
            }
            if v < prev - 1e-12 * prev.abs().max(1.0) {
                return Err(SolverError::InvalidProblem(format!(
                    "custom nonlinearity must be nondecreasing, drops at u = {u}"
                )));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            LambdaSpec::PowerLaw { lambda, xi } => format!("{lambda}*u^{xi}"),
            LambdaSpec::Zero => "0".to_string(),
            LambdaSpec::CustomMonotone { source, .. } => source.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LambdaSpec::Zero)
    }

    /// True when `Λ(u) = λu` exactly.
    pub fn is_linear(&self) -> bool {
        matches!(self, LambdaSpec::PowerLaw { xi, .. } if *xi == 1.0)
    }

    /// Whether `Λ` needs smoothing at `u = 0` (infinite slope there).
    pub fn is_singular_at_zero(&self) -> bool {
        matches!(self, LambdaSpec::PowerLaw { xi, .. } if *xi < 1.0)
    }

    pub fn coefficient(&self) -> Option<f64> {
        match self {
            LambdaSpec::PowerLaw { lambda, .. } => Some(*lambda),
            _ => None,
        }
    }

    /// `Λ_δ(u)`. For `ξ < 1` the power law is smoothed as
    /// `λ u (u² + δ²)^{(ξ−1)/2}`, an odd extension with finite slope at 0;
    /// `δ = 0` gives the exact nonlinearity.
    pub fn value(&self, u: f64, delta: f64) -> f64 {
        match self {
            LambdaSpec::PowerLaw { lambda, xi } => {
                if *xi < 1.0 && delta > 0.0 {
                    lambda * u * (u * u + delta * delta).powf(0.5 * (xi - 1.0))
                } else if u == 0.0 {
                    0.0
                } else if *xi == 1.0 {
                    lambda * u
                } else if *xi == 2.0 {
                    lambda * u * u.abs()
                } else if *xi == 0.5 {
                    lambda * u.signum() * u.abs().sqrt()
                } else {
                    lambda * u.signum() * u.abs().powf(*xi)
                }
            }
            LambdaSpec::Zero => 0.0,
            LambdaSpec::CustomMonotone { expr, .. } => {
                expr.as_ref().map(|e| e.eval(u)).unwrap_or(f64::NAN)
            }
        }
    }

    /// `Λ_δ'(u)`.
    pub fn derivative(&self, u: f64, delta: f64) -> f64 {
        match self {
            LambdaSpec::PowerLaw { lambda, xi } => {
                if *xi < 1.0 && delta > 0.0 {
                    let q = u * u + delta * delta;
                    lambda * q.powf(0.5 * (xi - 3.0)) * (xi * u * u + delta * delta)
                } else if *xi == 1.0 {
                    *lambda
                } else if u == 0.0 {
                    if *xi > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    lambda * xi * u.abs().powf(xi - 1.0)
                }
            }
            LambdaSpec::Zero => 0.0,
            LambdaSpec::CustomMonotone { deriv, .. } => {
                deriv.as_ref().map(|e| e.eval(u)).unwrap_or(f64::NAN)
            }
        }
    }

    /// Primitive of the smoothed nonlinearity `Λ_δ`; equals
    /// [`primitive`](Self::primitive) when no smoothing applies.
    pub fn primitive_smoothed(&self, u: f64, delta: f64) -> f64 {
        match self {
            LambdaSpec::PowerLaw { lambda, xi } if *xi < 1.0 && delta > 0.0 => {
                let e = 0.5 * (xi + 1.0);
                lambda * ((u * u + delta * delta).powf(e) - (delta * delta).powf(e)) / (xi + 1.0)
            }
            _ => self.primitive(u),
        }
    }

    /// Primitive `F(u) = ∫_0^u Λ` of the exact nonlinearity.
    pub fn primitive(&self, u: f64) -> f64 {
        match self {
            LambdaSpec::PowerLaw { lambda, xi } => lambda * u.abs().powf(xi + 1.0) / (xi + 1.0),
            LambdaSpec::Zero => 0.0,
            LambdaSpec::CustomMonotone { .. } => {
                if u == 0.0 {
                    return 0.0;
                }
                let panels = 8;
                let mut s = 0.0;
                for k in 0..panels {
                    let a = u * k as f64 / panels as f64;
                    let b = u * (k + 1) as f64 / panels as f64;
                    s += gl10(&mut |x| Ok(self.value(x, 0.0)), a, b).unwrap_or(f64::NAN);
                }
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let l = LambdaSpec::power_law(2.0, 1.0).unwrap();
        assert_eq!(l.value(3.0, 0.0), 6.0);
        assert_eq!(l.derivative(3.0, 0.0), 2.0);
        assert_eq!(l.primitive(3.0), 9.0);
        assert!(LambdaSpec::power_law(-1.0, 1.0).is_err());
    }

    #[test]
    fn smoothed_square_root() {
        let l = LambdaSpec::power_law(1.0, 0.5).unwrap();
        assert!((l.value(4.0, 1e-20) - 2.0).abs() < 1e-15);
        assert_eq!(l.value(0.0, 1e-20), 0.0);
        let d = l.derivative(0.0, 1e-4);
        assert!((d - 1e2).abs() < 1e-9);
        // matches finite differences away from zero
        let h = 1e-6;
        let fd = (l.value(0.3 + h, 1e-3) - l.value(0.3 - h, 1e-3)) / (2.0 * h);
        assert!((fd - l.derivative(0.3, 1e-3)).abs() < 1e-7);
    }

    #[test]
    fn custom_nonlinearity() {
        let l = LambdaSpec::custom("u^3 + u").unwrap();
        assert_eq!(l.value(2.0, 0.0), 10.0);
        assert_eq!(l.derivative(2.0, 0.0), 13.0);
        assert!((l.primitive(2.0) - 6.0).abs() < 1e-12);
        assert!(LambdaSpec::custom("u - 1").is_err());
        assert!(LambdaSpec::custom("sinh(u) - u^2").is_err());
    }
}
