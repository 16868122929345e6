//! Scalar expressions for chart metrics.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | atom
//! atom    := number | "pi" | var | call | "(" expr ")"
//! call    := ("exp" | "log" | "sin" | "cos") "(" expr ")"
//!          | "pow" "(" expr "," expr ")"
//! var     := ("x_" | "y_") digits        (1-based)
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```
//!
//! `x_i` are leaf coordinates and `y_j` transverse ones. Whitespace is
//! ignored between tokens.

use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at offset {offset} in `{source_text}`")]
pub struct ExprError {
    pub message: String,
    pub offset: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { message: message.into(), offset: self.pos, source_text: self.src.to_string() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let s = self.rest();
        let b = s.as_bytes();
        let digits = |mut i: usize| {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        let mut end = digits(0);
        if end < b.len() && b[end] == b'.' {
            let frac = digits(end + 1);
            if frac == end + 1 {
                self.pos += end + 1;
                return self.err("expected digits after `.`");
            }
            end = frac;
        }
        if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
            let mut i = end + 1;
            if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                i += 1;
            }
            let exp = digits(i);
            if exp == i {
                self.pos += i;
                return self.err("expected exponent digits");
            }
            end = exp;
        }
        let value: f64 = s[..end].parse().expect("validated literal");
        self.pos += end;
        Ok(Expr::Num(value))
    }

    fn ident(&mut self) -> &'a str {
        let s = self.rest();
        let end = s.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(s.len());
        self.pos += end;
        &s[..end]
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.rest().chars().next() {
            None => self.err("unexpected end of input"),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident();
                let func = match name {
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "pow" => {
                        self.expect('(')?;
                        let base = self.expr()?;
                        self.expect(',')?;
                        let exponent = self.expr()?;
                        self.expect(')')?;
                        return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
                    }
                    _ => {
                        let var = name
                            .strip_prefix("x_")
                            .map(|i| (i, Var::X as fn(usize) -> Var))
                            .or_else(|| name.strip_prefix("y_").map(|i| (i, Var::Y as fn(usize) -> Var)))
                            .and_then(|(i, v)| i.parse::<usize>().ok().filter(|i| *i >= 1).map(|i| v(i - 1)));
                        return match var {
                            Some(v) if name[2..].bytes().all(|c| c.is_ascii_digit()) => Ok(Expr::Var(v)),
                            _ => {
                                self.pos = start;
                                self.err(format!("unknown identifier `{name}`"))
                            }
                        };
                    }
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X(i)) => x[*i],
            Expr::Var(Var::Y(j)) => y[*j],
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Call(f, a) => {
                let v = a.eval(x, y);
                match f {
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        }
    }

    /// Largest leaf and transverse variable indices used, plus one.
    pub fn arity(&self) -> (usize, usize) {
        match self {
            Expr::Num(_) => (0, 0),
            Expr::Var(Var::X(i)) => (i + 1, 0),
            Expr::Var(Var::Y(j)) => (0, j + 1),
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                let (p, q) = (a.arity(), b.arity());
                (p.0.max(q.0), p.1.max(q.1))
            }
        }
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, v: Var) -> Expr {
        use Expr::*;
        let b = Box::new;
        match self {
            Num(_) => Num(0.0),
            Var(w) => Num(if *w == v { 1.0 } else { 0.0 }),
            Neg(a) => Neg(b(a.derivative(v))),
            Add(p, q) => Add(b(p.derivative(v)), b(q.derivative(v))),
            Sub(p, q) => Sub(b(p.derivative(v)), b(q.derivative(v))),
            Mul(p, q) => Add(b(Mul(b(p.derivative(v)), q.clone())), b(Mul(p.clone(), b(q.derivative(v))))),
            Div(p, q) => Div(
                b(Sub(b(Mul(b(p.derivative(v)), q.clone())), b(Mul(p.clone(), b(q.derivative(v)))))),
                b(Mul(q.clone(), q.clone())),
            ),
            // d(p^q) = p^q (q' log p + q p'/p)
            Pow(p, q) => Mul(
                b(self.clone()),
                b(Add(
                    b(Mul(b(q.derivative(v)), b(Call(Func::Log, p.clone())))),
                    b(Div(b(Mul(q.clone(), b(p.derivative(v)))), p.clone())),
                )),
            ),
            Call(f, a) => {
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Log => Div(b(Num(1.0)), a.clone()),
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(b(Call(Func::Sin, a.clone()))),
                };
                Mul(b(outer), b(a.derivative(v)))
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::X(i)) => write!(f, "x_{}", i + 1),
            Expr::Var(Var::Y(j)) => write!(f, "y_{}", j + 1),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "pow({a}, {b})"),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Log => "log",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> f64 {
        Expr::parse(s).unwrap().eval(&[0.5], &[0.25, 2.0])
    }

    #[test]
    fn precedence_and_literals() {
        assert_eq!(ev("1 + 2 * 3"), 7.0);
        assert_eq!(ev("(1 + 2) * 3"), 9.0);
        assert_eq!(ev("2 - 3 - 4"), -5.0);
        assert_eq!(ev("8 / 4 / 2"), 1.0);
        assert_eq!(ev("-2 * -3"), 6.0);
        assert_eq!(ev("1.5e2 + 2E-1"), 150.2);
        assert_eq!(ev("pi"), std::f64::consts::PI);
        assert_eq!(ev("x_1 + y_2"), 2.5);
        assert_eq!(ev("pow(y_2, 3)"), 8.0);
        assert_eq!(ev("exp(2 * y_1)"), 0.5f64.exp());
    }

    #[test]
    fn rejects_malformed_input() {
        for s in ["", "1 +", "x_0", "z_1", "x_1a", "sin 1", "pow(1)", "1.", "2e", "(1", "1 1", "tan(1)"] {
            assert!(Expr::parse(s).is_err(), "{s}");
        }
        assert_eq!(Expr::parse("1 + $").unwrap_err().offset, 4);
    }

    #[test]
    fn derivatives_match_differences() {
        let cases = ["exp(2 * y_1) * sin(x_1)", "pow(1 + y_1 * y_1, 0.5) / cos(y_2)", "log(2 + x_1) - y_1 * y_2"];
        let (x, y) = ([0.3], [0.2, -0.4]);
        for s in cases {
            let e = Expr::parse(s).unwrap();
            let d = e.derivative(Var::Y(0)).eval(&x, &y);
            let h = 1e-6;
            let fd = (e.eval(&x, &[y[0] + h, y[1]]) - e.eval(&x, &[y[0] - h, y[1]])) / (2.0 * h);
            assert!((d - fd).abs() < 1e-7, "{s}: {d} vs {fd}");
        }
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-exp(2*y_1)/pow(x_1, 2) + 0.1").unwrap();
        assert_eq!(Expr::parse(&e.to_string()).unwrap(), e);
        assert_eq!(e.arity(), (1, 1));
    }
}
