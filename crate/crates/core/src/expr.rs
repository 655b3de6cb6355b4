//! Closed-form scalar expressions in one variable `s` with exact first and
//! second derivatives.
//!
//! Derivatives are computed by forward propagation of second-order jets, so
//! curvature quantities built from `f'` and `f''` carry no differencing error.
//! The grammar is small on purpose: constants, `s`, `+ - * / ^`, and the
//! functions `exp log sin cos sinh cosh sqrt`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Value, first and second derivative of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    pub fn variable(s: f64) -> Self {
        Self { v: s, d1: 1.0, d2: 0.0 }
    }

    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }

    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }

    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    fn div(self, o: Jet) -> Jet {
        let q = self.v / o.v;
        let q1 = (self.d1 - q * o.d1) / o.v;
        let q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.v;
        Jet { v: q, d1: q1, d2: q2 }
    }

    fn neg(self) -> Jet {
        Jet { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }

    /// Chain rule with outer value `g`, outer derivatives `g1`, `g2`.
    fn compose(self, g: f64, g1: f64, g2: f64) -> Jet {
        Jet { v: g, d1: g1 * self.d1, d2: g2 * self.d1 * self.d1 + g1 * self.d2 }
    }

    fn powf(self, c: f64) -> Jet {
        if c == 0.0 {
            return Jet::constant(1.0);
        }
        let x = self.v;
        let (g, g1, g2) = if c.fract() == 0.0 && c.abs() < 64.0 {
            let n = c as i32;
            (x.powi(n), c * x.powi(n - 1), c * (c - 1.0) * x.powi(n - 2))
        } else {
            (x.powf(c), c * x.powf(c - 1.0), c * (c - 1.0) * x.powf(c - 2.0))
        };
        self.compose(g, g1, g2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, a: Jet) -> Jet {
        let x = a.v;
        match self {
            Func::Exp => {
                let e = x.exp();
                a.compose(e, e, e)
            }
            Func::Log => a.compose(x.ln(), 1.0 / x, -1.0 / (x * x)),
            Func::Sin => a.compose(x.sin(), x.cos(), -x.sin()),
            Func::Cos => a.compose(x.cos(), -x.sin(), -x.cos()),
            Func::Sinh => a.compose(x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => a.compose(x.cosh(), x.sinh(), x.cosh()),
            Func::Sqrt => a.powf(0.5),
        }
    }
}

/// Expression tree in the variable `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn s() -> Expr {
        Expr::Var
    }

    pub fn add(self, o: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(o))
    }

    pub fn sub(self, o: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(o))
    }

    pub fn mul(self, o: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(o))
    }

    pub fn div(self, o: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(o))
    }

    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }

    pub fn pow(self, c: f64) -> Expr {
        Expr::Pow(Box::new(self), c)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    /// `a * s + b`
    pub fn affine(a: f64, b: f64) -> Expr {
        Expr::c(a).mul(Expr::s()).add(Expr::c(b))
    }

    pub fn jet(&self, s: f64) -> Jet {
        match self {
            Expr::Const(v) => Jet::constant(*v),
            Expr::Var => Jet::variable(s),
            Expr::Add(a, b) => a.jet(s).add(b.jet(s)),
            Expr::Sub(a, b) => a.jet(s).sub(b.jet(s)),
            Expr::Mul(a, b) => a.jet(s).mul(b.jet(s)),
            Expr::Div(a, b) => a.jet(s).div(b.jet(s)),
            Expr::Neg(a) => a.jet(s).neg(),
            Expr::Pow(a, c) => a.jet(s).powf(*c),
            Expr::Call(f, a) => f.apply(a.jet(s)),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.jet(s).v
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }
}

fn fmt_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v < 0.0 {
        write!(f, "({v:?})")
    } else {
        write!(f, "{v:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => fmt_num(*v, f),
            Expr::Var => write!(f, "s"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, c) => {
                write!(f, "({a}^")?;
                fmt_num(*c, f)?;
                write!(f, ")")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Expr, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Recursive-descent parser:
/// expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
/// unary := '-' unary | power; power := atom ('^' unary)?
struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    lhs = lhs.add(self.term()?);
                }
                b'-' => {
                    self.pos += 1;
                    lhs = lhs.sub(self.term()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    lhs = lhs.mul(self.unary()?);
                }
                b'/' => {
                    self.pos += 1;
                    lhs = lhs.div(self.unary()?);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let at = self.pos;
            let exponent = self.unary()?;
            return match constant_value(&exponent) {
                Some(c) => Ok(base.pow(c)),
                None => Err(Error::Parse { pos: at, msg: "exponent must be a constant".into() }),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match name {
                    "s" | "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::c(std::f64::consts::PI)),
                    _ => {
                        let func = Func::from_name(name)
                            .ok_or(Error::Parse { pos: start, msg: format!("unknown identifier `{name}`") })?;
                        if self.peek() != Some(b'(') {
                            return Err(self.err("expected '(' after function name"));
                        }
                        let arg = self.atom()?;
                        Ok(Expr::call(func, arg))
                    }
                }
            }
            _ => Err(self.err("unexpected token")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src;
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&bytes[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{text}`") })
    }
}

fn constant_value(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(v) => Some(*v),
        Expr::Neg(a) => constant_value(a).map(|v| -v),
        _ => None,
    }
}
