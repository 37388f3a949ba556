//! Expression trees over a single variable.
//!
//! Besides plain evaluation, every tree can be evaluated as a signed
//! logarithm `(log|x|, sign)`, so that products of exponentials such as
//! `t*exp(t^3)` never materialize the overflowing intermediate.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Func {
    Exp,
    Log,
    Sinh,
    Cosh,
    Sqrt,
    /// Only produced by [`Expr::log_derivative`]; not part of the input grammar.
    Tanh,
    /// Only produced by [`Expr::log_derivative`]; not part of the input grammar.
    Coth,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Sqrt => x.sqrt(),
            Func::Tanh => x.tanh(),
            Func::Coth => 1.0 / x.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// A value in signed log form: `sign * exp(log_abs)`. Zero is `(−∞, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub log_abs: f64,
    pub sign: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        log_abs: f64::NEG_INFINITY,
        sign: 0.0,
    };

    pub fn from_value(x: f64) -> SignedLog {
        if x == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog {
                log_abs: x.abs().ln(),
                sign: x.signum(),
            }
        }
    }

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }

    fn mul(self, o: SignedLog) -> SignedLog {
        if self.sign == 0.0 || o.sign == 0.0 {
            return SignedLog::ZERO;
        }
        SignedLog {
            log_abs: self.log_abs + o.log_abs,
            sign: self.sign * o.sign,
        }
    }

    fn add(self, o: SignedLog) -> SignedLog {
        if self.sign == 0.0 {
            return o;
        }
        if o.sign == 0.0 {
            return self;
        }
        let (big, small) = if self.log_abs >= o.log_abs {
            (self, o)
        } else {
            (o, self)
        };
        let d = small.log_abs - big.log_abs;
        if big.sign == small.sign {
            SignedLog {
                log_abs: big.log_abs + d.exp().ln_1p(),
                sign: big.sign,
            }
        } else if d == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog {
                log_abs: big.log_abs + (-d.exp()).ln_1p(),
                sign: big.sign,
            }
        }
    }

    fn neg(self) -> SignedLog {
        SignedLog {
            log_abs: self.log_abs,
            sign: -self.sign,
        }
    }
}

/// Values of `|x|` above this are handled in log form for sinh/cosh/exp.
const LOG_SWITCH: f64 = 300.0;

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Num(x)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, k) => powf_signed(a.eval(t), *k),
            Expr::Call(f, a) => f.apply(a.eval(t)),
        }
    }

    /// Evaluates the expression as a signed logarithm.
    pub fn eval_log(&self, t: f64) -> Result<SignedLog, EvalError> {
        let out = match self {
            Expr::Num(c) => SignedLog::from_value(*c),
            Expr::Var => SignedLog::from_value(t),
            Expr::Neg(a) => a.eval_log(t)?.neg(),
            Expr::Add(a, b) => a.eval_log(t)?.add(b.eval_log(t)?),
            Expr::Sub(a, b) => a.eval_log(t)?.add(b.eval_log(t)?.neg()),
            Expr::Mul(a, b) => a.eval_log(t)?.mul(b.eval_log(t)?),
            Expr::Div(a, b) => {
                let den = b.eval_log(t)?;
                if den.sign == 0.0 {
                    return Err(EvalError::Domain {
                        what: "division by zero".into(),
                        t,
                    });
                }
                a.eval_log(t)?.mul(SignedLog {
                    log_abs: -den.log_abs,
                    sign: den.sign,
                })
            }
            Expr::Pow(a, k) => {
                let base = a.eval_log(t)?;
                pow_log(base, *k, t)?
            }
            Expr::Call(f, a) => call_log(*f, a, t)?,
        };
        if out.log_abs.is_nan() {
            return Err(EvalError::Domain {
                what: format!("non-finite value of {self}"),
                t,
            });
        }
        Ok(out)
    }

    /// Symbolic derivative with respect to the variable, lightly simplified.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var => Num(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow((**b).clone(), 2.0),
            ),
            Pow(a, k) => mul(
                mul(Num(*k), pow((**a).clone(), k - 1.0)),
                a.derivative(),
            ),
            Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Exp => Call(Func::Exp, Box::new(inner)),
                    Func::Log => div(Num(1.0), inner),
                    Func::Sinh => Call(Func::Cosh, Box::new(inner)),
                    Func::Cosh => Call(Func::Sinh, Box::new(inner)),
                    Func::Sqrt => div(Num(0.5), Call(Func::Sqrt, Box::new(inner))),
                    Func::Tanh => sub(Num(1.0), pow(Call(Func::Tanh, Box::new(inner)), 2.0)),
                    Func::Coth => sub(Num(1.0), pow(Call(Func::Coth, Box::new(inner)), 2.0)),
                };
                mul(outer, a.derivative())
            }
        }
    }

    /// The logarithmic derivative `f'/f`, built structurally so that
    /// products with exponentials cancel symbolically: for `t*exp(t^3)` this
    /// is `1/t + 3t^2` rather than a ratio of two overflowing values.
    pub fn log_derivative(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var => div(Num(1.0), Var),
            Neg(a) => a.log_derivative(),
            Mul(a, b) => add(a.log_derivative(), b.log_derivative()),
            Div(a, b) => sub(a.log_derivative(), b.log_derivative()),
            Pow(a, k) => mul(Num(*k), a.log_derivative()),
            Call(Func::Exp, a) => a.derivative(),
            Call(Func::Sqrt, a) => mul(Num(0.5), a.log_derivative()),
            Call(Func::Sinh, a) => mul(a.derivative(), Call(Func::Coth, a.clone())),
            Call(Func::Cosh, a) => mul(a.derivative(), Call(Func::Tanh, a.clone())),
            _ => div(self.derivative(), self.clone()),
        }
    }

    /// Substitutes `t ↦ scale * t`.
    pub fn scale_var(&self, scale: f64) -> Expr {
        use Expr::*;
        match self {
            Num(c) => Num(*c),
            Var => mul(Num(scale), Var),
            Neg(a) => neg(a.scale_var(scale)),
            Add(a, b) => add(a.scale_var(scale), b.scale_var(scale)),
            Sub(a, b) => sub(a.scale_var(scale), b.scale_var(scale)),
            Mul(a, b) => mul(a.scale_var(scale), b.scale_var(scale)),
            Div(a, b) => div(a.scale_var(scale), b.scale_var(scale)),
            Pow(a, k) => pow(a.scale_var(scale), *k),
            Call(f, a) => Call(*f, Box::new(a.scale_var(scale))),
        }
    }
}

fn powf_signed(x: f64, k: f64) -> f64 {
    if k.fract() == 0.0 && k.abs() < 64.0 {
        x.powi(k as i32)
    } else {
        x.powf(k)
    }
}

fn pow_log(base: SignedLog, k: f64, t: f64) -> Result<SignedLog, EvalError> {
    if k == 0.0 {
        return Ok(SignedLog::from_value(1.0));
    }
    if base.sign == 0.0 {
        return if k > 0.0 {
            Ok(SignedLog::ZERO)
        } else {
            Err(EvalError::Domain {
                what: "zero raised to a negative power".into(),
                t,
            })
        };
    }
    let integer = k.fract() == 0.0;
    if base.sign < 0.0 && !integer {
        return Err(EvalError::Domain {
            what: format!("negative base raised to non-integer power {k}"),
            t,
        });
    }
    let sign = if base.sign < 0.0 && (k as i64) % 2 != 0 {
        -1.0
    } else {
        1.0
    };
    Ok(SignedLog {
        log_abs: k * base.log_abs,
        sign,
    })
}

fn call_log(f: Func, arg: &Expr, t: f64) -> Result<SignedLog, EvalError> {
    let a = arg.eval_log(t)?;
    // Plain evaluation of the argument is more accurate whenever it is finite.
    let direct = arg.eval(t);
    let arg_value = || if direct.is_finite() { direct } else { a.value() };
    match f {
        Func::Exp => {
            // log(exp(x)) = x exactly, whatever the size of x.
            let x = arg_value();
            Ok(SignedLog {
                log_abs: x,
                sign: 1.0,
            })
        }
        Func::Log => {
            if a.sign <= 0.0 {
                return Err(EvalError::Domain {
                    what: "log of a non-positive value".into(),
                    t,
                });
            }
            Ok(SignedLog::from_value(a.log_abs))
        }
        Func::Sqrt => {
            if a.sign < 0.0 {
                return Err(EvalError::Domain {
                    what: "sqrt of a negative value".into(),
                    t,
                });
            }
            Ok(SignedLog {
                log_abs: 0.5 * a.log_abs,
                sign: a.sign,
            })
        }
        Func::Sinh => {
            let x = arg_value();
            if x.abs() < LOG_SWITCH {
                Ok(SignedLog::from_value(x.sinh()))
            } else {
                // sinh|x| = e^{|x|}(1 - e^{-2|x|})/2
                let ax = x.abs();
                Ok(SignedLog {
                    log_abs: ax - std::f64::consts::LN_2 + (-(-2.0 * ax).exp()).ln_1p(),
                    sign: x.signum(),
                })
            }
        }
        Func::Tanh | Func::Coth => {
            let x = arg_value();
            if f == Func::Coth && x == 0.0 {
                return Err(EvalError::Domain {
                    what: "coth at zero".into(),
                    t,
                });
            }
            Ok(SignedLog::from_value(f.apply(x)))
        }
        Func::Cosh => {
            let x = arg_value();
            if x.abs() < LOG_SWITCH {
                Ok(SignedLog::from_value(x.cosh()))
            } else {
                let ax = x.abs();
                Ok(SignedLog {
                    log_abs: ax - std::f64::consts::LN_2 + (-2.0 * ax).exp().ln_1p(),
                    sign: 1.0,
                })
            }
        }
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(c) if *c == v)
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => Expr::Num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_num(&b, 1.0) => a,
        _ if is_num(&a, 0.0) => Expr::Num(0.0),
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, k: f64) -> Expr {
    if k == 0.0 {
        Expr::Num(1.0)
    } else if k == 1.0 {
        a
    } else if let Expr::Num(c) = a {
        Expr::Num(powf_signed(c, k))
    } else {
        Expr::Pow(Box::new(a), k)
    }
}

fn fmt_num(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 {
        write!(f, "({c})")
    } else {
        write!(f, "{c}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => fmt_num(f, *c),
            Expr::Var => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/{b}"),
            Expr::Pow(a, k) => {
                write!(f, "({a})^")?;
                fmt_num(f, *k)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
