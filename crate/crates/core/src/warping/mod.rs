//! Warping functions `σ` and the model manifolds `dr² + σ(r)² g_{S^{m-1}}`
//! they define.

mod expr;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{Expr, Func, SignedLog};
pub use parse::parse_expr;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at position {position}: found {found}, expected one of [{}]", expected.join(", "))]
pub struct ParseError {
    pub position: usize,
    pub found: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{what} at t = {t}")]
    Domain { what: String, t: f64 },
    #[error("warping function is not positive at t = {t}")]
    NonPositive { t: f64 },
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invariant `{invariant}` fails at t = {t}: {detail}")]
pub struct ValidationError {
    pub invariant: &'static str,
    pub t: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WarpingError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("dimension must be at least 1, got {0}")]
    BadDimension(u32),
    #[error("unknown family `{0}` (expected euclidean, hyperbolic(k), cusp_cubic, flare_cubic)")]
    UnknownFamily(String),
}

/// Built-in warping families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `σ = t`
    Euclidean,
    /// `σ = sinh(√−κ t)/√−κ`, `κ < 0`
    Hyperbolic { kappa: f64 },
    /// `σ = t e^{−t³}`: finite volume
    CuspCubic,
    /// `σ = t e^{t³}`
    FlareCubic,
}

impl Family {
    pub const ALL_DEFAULT: [Family; 4] = [
        Family::Euclidean,
        Family::Hyperbolic { kappa: -1.0 },
        Family::CuspCubic,
        Family::FlareCubic,
    ];

    /// Accepts `euclidean`, `hyperbolic`, `hyperbolic(-1)`, `hyperbolic:-0.5`,
    /// `cusp_cubic`, `flare_cubic`.
    pub fn parse(name: &str) -> Result<Family, WarpingError> {
        let s = name.trim().to_ascii_lowercase();
        let bad = || WarpingError::UnknownFamily(name.to_string());
        match s.as_str() {
            "euclidean" => return Ok(Family::Euclidean),
            "cusp_cubic" | "cusp" => return Ok(Family::CuspCubic),
            "flare_cubic" | "flare" => return Ok(Family::FlareCubic),
            "hyperbolic" => return Ok(Family::Hyperbolic { kappa: -1.0 }),
            _ => {}
        }
        let rest = s.strip_prefix("hyperbolic").ok_or_else(bad)?;
        let arg = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| rest.strip_prefix(':'))
            .ok_or_else(bad)?;
        let kappa: f64 = arg.trim().parse().map_err(|_| bad())?;
        if !(kappa < 0.0) {
            return Err(bad());
        }
        Ok(Family::Hyperbolic { kappa })
    }

    pub fn label(&self) -> String {
        match self {
            Family::Euclidean => "euclidean".into(),
            Family::Hyperbolic { kappa } => format!("hyperbolic({kappa})"),
            Family::CuspCubic => "cusp_cubic".into(),
            Family::FlareCubic => "flare_cubic".into(),
        }
    }

    fn expr(&self) -> Expr {
        use Expr::*;
        let t = || Box::new(Var);
        let cube = || Box::new(Pow(t(), 3.0));
        match *self {
            Family::Euclidean => Var,
            Family::Hyperbolic { kappa } => {
                let a = (-kappa).sqrt();
                if a == 1.0 {
                    Call(Func::Sinh, t())
                } else {
                    Div(
                        Box::new(Call(Func::Sinh, Box::new(Mul(Box::new(Num(a)), t())))),
                        Box::new(Num(a)),
                    )
                }
            }
            Family::CuspCubic => Mul(t(), Box::new(Call(Func::Exp, Box::new(Neg(cube()))))),
            Family::FlareCubic => Mul(t(), Box::new(Call(Func::Exp, cube()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyTag {
    Builtin(Family),
    Custom { source: String },
}

/// Probe settings used when validating a warping function.
#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub t_max: f64,
    pub probes: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            t_max: 1e3,
            probes: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpingFunction {
    pub expr: Expr,
    pub deriv: Expr,
    /// `σ'/σ` in structurally simplified form.
    pub log_deriv: Expr,
    pub family: FamilyTag,
}

/// Parses and validates a warping function with the default probe grid.
pub fn parse_sigma(text: &str) -> Result<WarpingFunction, WarpingError> {
    WarpingFunction::parse_with(text, ValidationOptions::default())
}

impl WarpingFunction {
    pub fn parse_with(text: &str, opts: ValidationOptions) -> Result<Self, WarpingError> {
        let expr = parse::parse_expr(text, 't')?;
        let w = WarpingFunction {
            deriv: expr.derivative(),
            log_deriv: expr.log_derivative(),
            expr,
            family: FamilyTag::Custom {
                source: text.to_string(),
            },
        };
        w.validate(opts)?;
        Ok(w)
    }

    pub fn family(f: Family) -> Self {
        let expr = f.expr();
        WarpingFunction {
            deriv: expr.derivative(),
            log_deriv: expr.log_derivative(),
            expr,
            family: FamilyTag::Builtin(f),
        }
    }

    /// Builds from an already-parsed tree without validating.
    pub fn from_expr_unchecked(expr: Expr) -> Self {
        WarpingFunction {
            deriv: expr.derivative(),
            log_deriv: expr.log_derivative(),
            family: FamilyTag::Custom {
                source: expr.to_string(),
            },
            expr,
        }
    }

    pub fn label(&self) -> String {
        match &self.family {
            FamilyTag::Builtin(f) => f.label(),
            FamilyTag::Custom { source } => source.clone(),
        }
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.expr.eval(t)
    }

    pub fn sigma_prime(&self, t: f64) -> f64 {
        self.deriv.eval(t)
    }

    /// `log σ(t)`; errors unless `σ(t) > 0`.
    pub fn log_sigma(&self, t: f64) -> Result<f64, EvalError> {
        let v = self.expr.eval_log(t)?;
        if v.sign <= 0.0 {
            return Err(EvalError::NonPositive { t });
        }
        Ok(v.log_abs)
    }

    /// `σ'(t)/σ(t)`.
    pub fn log_derivative(&self, t: f64) -> Result<f64, EvalError> {
        let direct = self.log_deriv.eval(t);
        if direct.is_finite() {
            return Ok(direct);
        }
        let v = self.log_deriv.eval_log(t)?.value();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain {
                what: "log-derivative is not finite".into(),
                t,
            })
        }
    }

    pub fn validate(&self, opts: ValidationOptions) -> Result<(), ValidationError> {
        // σ(0) = 0 by sampling t -> 0+
        let mut last = f64::NAN;
        for k in 8..=14 {
            last = self.sigma(10f64.powi(-k));
        }
        if !(last.abs() <= 1e-12) {
            return Err(ValidationError {
                invariant: "sigma(0) = 0",
                t: 0.0,
                detail: format!("sigma(1e-14) = {last:e}"),
            });
        }
        let mut d0 = self.sigma_prime(0.0);
        if !d0.is_finite() {
            d0 = self.sigma_prime(1e-12);
        }
        if !((d0 - 1.0).abs() <= 1e-9) {
            return Err(ValidationError {
                invariant: "sigma'(0) = 1",
                t: 0.0,
                detail: format!("sigma'(0) = {d0} != 1"),
            });
        }
        for t in log_grid(1e-6_f64.min(opts.t_max), opts.t_max, opts.probes) {
            let ok = matches!(self.expr.eval_log(t), Ok(v) if v.sign > 0.0 && v.log_abs.is_finite());
            if !ok {
                return Err(ValidationError {
                    invariant: "sigma(t) > 0",
                    t,
                    detail: "sigma is not positive and finite in log form".into(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for WarpingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Log-uniform probe points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let n = n.max(2);
    (0..n).map(move |i| {
        if i == n - 1 {
            hi
        } else {
            (a + (b - a) * i as f64 / (n - 1) as f64).exp()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifold {
    pub m: u32,
    pub sigma: WarpingFunction,
}

impl ModelManifold {
    pub fn new(m: u32, sigma: WarpingFunction) -> Result<Self, WarpingError> {
        if m < 1 {
            return Err(WarpingError::BadDimension(m));
        }
        Ok(ModelManifold { m, sigma })
    }

    pub fn family(f: Family, m: u32) -> Result<Self, WarpingError> {
        Self::new(m, WarpingFunction::family(f))
    }

    pub fn label(&self) -> String {
        format!("{} m={}", self.sigma.label(), self.m)
    }

    /// Surface measure of the unit `(m−1)`-sphere (2 for the half-line mode).
    pub fn sphere_measure(&self) -> f64 {
        sphere_measure(self.m)
    }

    /// `(m−1) log σ(t)`.
    pub fn log_sigma_pow(&self, t: f64) -> Result<f64, EvalError> {
        if !(t > 0.0) {
            return Err(EvalError::BadRadius(t));
        }
        if self.m == 1 {
            return Ok(0.0);
        }
        Ok(f64::from(self.m - 1) * self.sigma.log_sigma(t)?)
    }
}

impl ModelManifold {
    /// `d/dt log σ^{m−1}(t) = (m−1) σ'(t)/σ(t)`.
    pub fn log_sigma_pow_derivative(&self, t: f64) -> Result<f64, EvalError> {
        if self.m == 1 {
            return Ok(0.0);
        }
        Ok(f64::from(self.m - 1) * self.sigma.log_derivative(t)?)
    }
}

/// `log σ^{m−1}(t)` for manifold `m`.
pub fn log_sigma_pow(manifold: &ModelManifold, t: f64) -> Result<f64, EvalError> {
    manifold.log_sigma_pow(t)
}

pub fn sphere_measure(m: u32) -> f64 {
    use std::f64::consts::PI;
    // c_1 = 2, c_2 = 2π, c_{k+2} = 2π c_k / k
    let mut c = if m % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut k = if m % 2 == 1 { 1 } else { 2 };
    while k < m {
        c *= 2.0 * PI / f64::from(k);
        k += 2;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailTrend {
    Bounded,
    DecreasingUnbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDerivativeBound {
    pub min: f64,
    pub argmin: f64,
    pub trend: TailTrend,
}

/// Lower-bound estimate of `inf σ'/σ` on `(0, horizon]` from a log-uniform
/// probe grid, together with a tail-trend flag.
pub fn sigma_log_derivative_inf(
    manifold: &ModelManifold,
    horizon: f64,
) -> Result<LogDerivativeBound, EvalError> {
    if !(horizon > 0.0) {
        return Err(EvalError::BadRadius(horizon));
    }
    let lo = 1e-3 * horizon.min(1.0);
    let probes: Vec<f64> = log_grid(lo, horizon, 400).collect();
    let vals = probes
        .iter()
        .map(|&t| manifold.sigma.log_derivative(t))
        .collect::<Result<Vec<_>, _>>()?;
    let (i_min, &min) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty probe grid");
    // Last decade: decreasing, negative and growing in magnitude.
    let n = vals.len();
    let half = probes
        .iter()
        .position(|&t| t >= 0.5 * horizon)
        .unwrap_or(n - 1);
    let tail = &vals[half..];
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
    let last = vals[n - 1];
    let at_half = vals[half];
    let trend = if decreasing && last < 0.0 && last.abs() >= 1.5 * at_half.abs() {
        TailTrend::DecreasingUnbounded
    } else {
        TailTrend::Bounded
    };
    Ok(LogDerivativeBound {
        min,
        argmin: probes[i_min],
        trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(w: &WarpingFunction, t: f64) -> f64 {
        let h = 1e-5 * t.max(1.0);
        (w.sigma(t + h) - w.sigma(t - h)) / (2.0 * h)
    }

    #[test]
    fn euclidean_parses_and_validates() {
        let w = parse_sigma("t").unwrap();
        assert_eq!(w.sigma_prime(0.0), 1.0);
    }

    #[test]
    fn t_squared_fails_derivative_check() {
        match parse_sigma("t^2") {
            Err(WarpingError::Validation(v)) => {
                assert_eq!(v.invariant, "sigma'(0) = 1");
                assert_eq!(v.t, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cusp_derivative_matches_hand_formula_and_fd() {
        let w = parse_sigma("t*exp(-t^3)").unwrap();
        assert_eq!(w.sigma_prime(0.0), 1.0);
        for t in log_grid(1e-2, 3.0, 50) {
            let hand = (-t.powi(3)).exp() * (1.0 - 3.0 * t.powi(3));
            assert!((w.sigma_prime(t) - hand).abs() < 1e-13);
            let f = fd(&w, t);
            assert!((w.sigma_prime(t) - f).abs() <= 1e-6 * f.abs().max(1e-3));
        }
    }

    #[test]
    fn unbalanced_paren_is_parse_error() {
        match parse_sigma("sinh(t") {
            Err(WarpingError::Parse(e)) => assert_eq!(e.found, "end of input"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_sigma_fails_positivity() {
        // σ(0)=0 and σ'(0)=1 but σ turns negative at t = 2
        match parse_sigma("t - 0.5*t^2") {
            Err(WarpingError::Validation(v)) => assert_eq!(v.invariant, "sigma(t) > 0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn builtin_families_validate() {
        for f in Family::ALL_DEFAULT {
            WarpingFunction::family(f)
                .validate(ValidationOptions::default())
                .unwrap();
        }
        WarpingFunction::family(Family::Hyperbolic { kappa: -4.0 })
            .validate(ValidationOptions::default())
            .unwrap();
    }

    #[test]
    fn log_sigma_pow_examples() {
        let hyp = ModelManifold::family(Family::Hyperbolic { kappa: -1.0 }, 3).unwrap();
        let want = 2.0 * (100.0 - std::f64::consts::LN_2);
        let got = hyp.log_sigma_pow(100.0).unwrap();
        assert!(((got - want) / want).abs() <= 1e-12);
        assert!((want - 198.6137).abs() < 1e-4);

        let euc = ModelManifold::family(Family::Euclidean, 2).unwrap();
        assert!((euc.log_sigma_pow(5.0).unwrap() - 5f64.ln()).abs() < 1e-15);

        let cusp = ModelManifold::family(Family::CuspCubic, 3).unwrap();
        let want = 2.0 * (10f64.ln() - 1000.0);
        assert!((cusp.log_sigma_pow(10.0).unwrap() - want).abs() < 1e-10);
        assert!((want + 1995.395).abs() < 1e-3);

        assert!(euc.log_sigma_pow(0.0).is_err());
        let half_line = ModelManifold::family(Family::Euclidean, 1).unwrap();
        assert_eq!(half_line.log_sigma_pow(7.0).unwrap(), 0.0);
    }

    #[test]
    fn sphere_measures() {
        use std::f64::consts::PI;
        assert_eq!(sphere_measure(1), 2.0);
        assert!((sphere_measure(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_measure(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn log_derivative_inf_examples() {
        let euc = ModelManifold::family(Family::Euclidean, 3).unwrap();
        let b = sigma_log_derivative_inf(&euc, 100.0).unwrap();
        assert!((b.min - 0.01).abs() < 1e-14);
        assert_eq!(b.trend, TailTrend::Bounded);

        let hyp = ModelManifold::family(Family::Hyperbolic { kappa: -1.0 }, 3).unwrap();
        let b = sigma_log_derivative_inf(&hyp, 100.0).unwrap();
        assert!((b.min - 1.0).abs() < 1e-12);
        assert_eq!(b.trend, TailTrend::Bounded);

        let cusp = ModelManifold::family(Family::CuspCubic, 3).unwrap();
        let b = sigma_log_derivative_inf(&cusp, 10.0).unwrap();
        assert!((b.min - (0.1 - 300.0)).abs() < 1e-9);
        assert_eq!(b.trend, TailTrend::DecreasingUnbounded);
    }

    #[test]
    fn family_names() {
        assert_eq!(Family::parse("hyperbolic(-1)").unwrap(), Family::Hyperbolic { kappa: -1.0 });
        assert_eq!(Family::parse("hyperbolic:-0.25").unwrap(), Family::Hyperbolic { kappa: -0.25 });
        assert_eq!(Family::parse("cusp_cubic").unwrap(), Family::CuspCubic);
        assert!(Family::parse("hyperbolic(1)").is_err());
        assert!(Family::parse("sphere").is_err());
    }
}
