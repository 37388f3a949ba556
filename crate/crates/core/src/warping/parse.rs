//! Recursive-descent parser for the warping expression language.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' number)?
//! base   := number | VAR | func '(' expr ')' | '(' expr ')'
//! func   := exp | log | sinh | cosh | sqrt
//! ```
//!
//! Unary minus and a signed exponent (`t^-2`) are accepted on top of the
//! core grammar so that expressions like `t*exp(-t^3)` can be written.
//! `-t^3` parses as `-(t^3)`.

use super::expr::{self, Expr, Func};
use super::ParseError;

pub fn parse_expr(text: &str, var: char) -> Result<Expr, ParseError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        var,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    var: char,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            position: self.pos,
            found: self
                .chars
                .get(self.pos)
                .map(|c| c.to_string())
                .unwrap_or_else(|| "end of input".to_string()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some('/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(expr::neg(self.factor()?));
        }
        let base = self.base()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let negative = if self.peek() == Some('-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let k = self.number()?;
            return Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(Expr::Num(self.number()?)),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric()
                {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                if word.len() == 1 && word.starts_with(self.var) {
                    return Ok(Expr::Var);
                }
                match Func::from_name(&word) {
                    Some(f) => {
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    None => {
                        self.pos = start;
                        Err(self.error(&self.base_expected()))
                    }
                }
            }
            _ => Err(self.error(&self.base_expected())),
        }
    }

    fn base_expected(&self) -> Vec<&'static str> {
        let var: &'static str = if self.var == 't' { "'t'" } else { "'u'" };
        vec!["number", var, "function name", "'('"]
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            let want = format!("'{c}'");
            Err(self.error(&[want.as_str()]))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut seen_digit = false;
        while let Some(&c) = self.chars.get(self.pos) {
            if c.is_ascii_digit() {
                seen_digit = true;
                self.pos += 1;
            } else if c == '.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        // Optional exponent part: e[+-]digits
        if seen_digit && matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            let digits_start = self.pos;
            while matches!(self.chars.get(self.pos), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == digits_start {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if seen_digit => Ok(v),
            _ => {
                self.pos = start;
                Err(self.error(&["number"]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse_expr("1 + 2*t^2 - -t", 't').unwrap();
        assert_eq!(e.eval(3.0), 1.0 + 18.0 + 3.0);
        let e = parse_expr("-t^2", 't').unwrap();
        assert_eq!(e.eval(3.0), -9.0);
        let e = parse_expr("t^-2", 't').unwrap();
        assert_eq!(e.eval(2.0), 0.25);
    }

    #[test]
    fn functions_and_whitespace() {
        let e = parse_expr(" sinh ( t ) / cosh(t)", 't').unwrap();
        assert!((e.eval(0.7) - 0.7f64.tanh()).abs() < 1e-15);
        let e = parse_expr("sqrt(4*u) + log(exp(u))", 'u').unwrap();
        assert!((e.eval(1.0) - 3.0).abs() < 1e-15);
        let e = parse_expr("2.5e-1*t", 't').unwrap();
        assert_eq!(e.eval(4.0), 1.0);
    }

    #[test]
    fn unbalanced_paren_reports_end_of_input() {
        let err = parse_expr("sinh(t", 't').unwrap_err();
        assert_eq!(err.position, 6);
        assert_eq!(err.found, "end of input");
        assert!(err.expected.iter().any(|e| e == "')'"));
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_expr("tan(t)", 't').unwrap_err();
        assert_eq!(err.position, 0);
        let err = parse_expr("t t", 't').unwrap_err();
        assert_eq!(err.position, 2);
        let err = parse_expr("t^x", 't').unwrap_err();
        assert!(err.expected.iter().any(|e| e == "number"));
    }
}
