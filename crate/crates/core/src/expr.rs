//! A small closed function grammar for weights, symbols, and test fields.
//!
//! The grammar covers affine maps, monomials, rational combinations, `exp`,
//! `sin`/`cos`, real powers, and complex arithmetic under the fixed
//! identification `z = x0 + i*x1`. It is closed under coordinate
//! differentiation, so every function built from it carries an exact
//! derivative oracle; finite differences are only a fallback for fields
//! supplied as opaque closures.

use crate::error::{CoreError, Result};
use crate::multiindex::MultiIndex;
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Complex64),
    /// Real coordinate `x_i`.
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Integer power (negative exponents allowed away from zeros).
    Powi(Box<Expr>, i32),
    /// Real power, principal branch.
    Powf(Box<Expr>, f64),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    /// Complex conjugate; commutes with real-coordinate derivatives.
    Conj(Box<Expr>),
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(Complex64::new(c, 0.0))
    }

    pub fn imaginary_unit() -> Expr {
        Expr::Const(Complex64::new(0.0, 1.0))
    }

    /// The complex coordinate `z = x0 + i*x1`.
    pub fn z() -> Expr {
        add(
            Expr::Coord(0),
            mul(Expr::imaginary_unit(), Expr::Coord(1)),
        )
    }

    pub fn zbar() -> Expr {
        sub(
            Expr::Coord(0),
            mul(Expr::imaginary_unit(), Expr::Coord(1)),
        )
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Coord(i) => Complex64::new(x[*i], 0.0),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Neg(a) => -a.eval(x),
            Expr::Powi(a, n) => a.eval(x).powi(*n),
            Expr::Powf(a, p) => a.eval(x).powf(*p),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Conj(a) => a.eval(x).conj(),
        }
    }

    /// Symbolic partial derivative with respect to the real coordinate `x_i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(ZERO),
            Expr::Coord(j) => {
                if *j == i {
                    Expr::Const(ONE)
                } else {
                    Expr::Const(ZERO)
                }
            }
            Expr::Add(a, b) => add(a.diff(i), b.diff(i)),
            Expr::Sub(a, b) => sub(a.diff(i), b.diff(i)),
            Expr::Mul(a, b) => add(
                mul(a.diff(i), (**b).clone()),
                mul((**a).clone(), b.diff(i)),
            ),
            Expr::Div(a, b) => {
                let num = sub(
                    mul(a.diff(i), (**b).clone()),
                    mul((**a).clone(), b.diff(i)),
                );
                div(num, powi((**b).clone(), 2))
            }
            Expr::Neg(a) => neg(a.diff(i)),
            Expr::Powi(a, n) => {
                if *n == 0 {
                    Expr::Const(ZERO)
                } else {
                    mul(
                        mul(Expr::constant(*n as f64), powi((**a).clone(), n - 1)),
                        a.diff(i),
                    )
                }
            }
            Expr::Powf(a, p) => mul(
                mul(Expr::constant(*p), powf((**a).clone(), p - 1.0)),
                a.diff(i),
            ),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.diff(i)),
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.diff(i)),
            Expr::Cos(a) => neg(mul(Expr::Sin(a.clone()), a.diff(i))),
            Expr::Conj(a) => conj(a.diff(i)),
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coordinate(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_coordinate(), b.max_coordinate()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Neg(a)
            | Expr::Powi(a, _)
            | Expr::Powf(a, _)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Conj(a) => a.max_coordinate(),
        }
    }

    pub fn parse(source: &str) -> Result<Expr> {
        Parser::new(source).parse_full()
    }
}

fn is_const(e: &Expr, v: Complex64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (a, b) if is_const(&a, ZERO) => b,
        (a, b) if is_const(&b, ZERO) => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, b) if is_const(&b, ZERO) => a,
        (a, b) if is_const(&a, ZERO) => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (a, _) if is_const(&a, ZERO) => Expr::Const(ZERO),
        (_, b) if is_const(&b, ZERO) => Expr::Const(ZERO),
        (a, b) if is_const(&a, ONE) => b,
        (a, b) if is_const(&b, ONE) => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if is_const(&a, ZERO) && !is_const(&b, ZERO) => Expr::Const(ZERO),
        (a, b) if is_const(&b, ONE) => a,
        (Expr::Const(x), Expr::Const(y)) if y != ZERO => Expr::Const(x / y),
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn powi(a: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::Const(ONE),
        1 => a,
        _ => match a {
            Expr::Const(c) => Expr::Const(c.powi(n)),
            a => Expr::Powi(Box::new(a), n),
        },
    }
}

fn powf(a: Expr, p: f64) -> Expr {
    if p == 0.0 {
        Expr::Const(ONE)
    } else if p == 1.0 {
        a
    } else {
        Expr::Powf(Box::new(a), p)
    }
}

fn conj(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(c.conj()),
        a => Expr::Conj(Box::new(a)),
    }
}

/// An expression together with a cache of its symbolic partial derivatives,
/// keyed by multi-index. Backs the exact derivative oracle of fields built
/// from the grammar.
pub struct DerivativeCache {
    expr: Expr,
    cache: Mutex<HashMap<MultiIndex, Expr>>,
}

impl DerivativeCache {
    pub fn new(expr: Expr) -> Self {
        DerivativeCache {
            expr,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// `d^alpha` of the expression, computed by repeated single-coordinate
    /// differentiation with prefix caching.
    pub fn derivative(&self, alpha: &MultiIndex) -> Expr {
        if alpha.is_zero() {
            return self.expr.clone();
        }
        let mut cache = self.cache.lock().unwrap();
        if let Some(e) = cache.get(alpha) {
            return e.clone();
        }
        let mut current = self.expr.clone();
        let mut prefix = MultiIndex::zero(alpha.dim());
        for i in alpha.index_sequence() {
            prefix = prefix.raised(i);
            if let Some(e) = cache.get(&prefix) {
                current = e.clone();
            } else {
                current = current.diff(i);
                cache.insert(prefix.clone(), current.clone());
            }
        }
        current
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", c.re)
                } else if c.re == 0.0 {
                    write!(f, "{}i", c.im)
                } else {
                    write!(f, "({}+{}i)", c.re, c.im)
                }
            }
            Expr::Coord(i) => write!(f, "x{i}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Powi(a, n) => write!(f, "{a}^{n}"),
            Expr::Powf(a, p) => write!(f, "{a}^({p})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Conj(a) => write!(f, "conj({a})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    source: &'a str,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Self {
        Parser {
            chars: source.chars().collect(),
            pos: 0,
            source,
        }
    }

    fn error(&self, message: impl Into<String>) -> CoreError {
        CoreError::Schema {
            path: format!("expression `{}` at offset {}", self.source, self.pos),
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        self.skip_ws();
        let c = self.chars.get(self.pos).copied();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn parse_full(&mut self) -> Result<Expr> {
        let e = self.parse_expr()?;
        self.skip_ws();
        if self.pos != self.chars.len() {
            return Err(self.error("trailing input"));
        }
        Ok(e)
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut acc = self.parse_term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.bump();
                    acc = add(acc, self.parse_term()?);
                }
                '-' => {
                    self.bump();
                    acc = sub(acc, self.parse_term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut acc = self.parse_unary()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.bump();
                    acc = mul(acc, self.parse_unary()?);
                }
                '/' => {
                    self.bump();
                    acc = div(acc, self.parse_unary()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('-') => {
                self.bump();
                Ok(neg(self.parse_unary()?))
            }
            Some('+') => {
                self.bump();
                self.parse_unary()
            }
            _ => self.parse_power(),
        }
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        if self.peek() == Some('^') {
            self.bump();
            let exponent = self.parse_exponent()?;
            if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
                return Ok(powi(base, exponent as i32));
            }
            return Ok(powf(base, exponent));
        }
        Ok(base)
    }

    /// Exponents are numeric literals, optionally signed and parenthesized.
    fn parse_exponent(&mut self) -> Result<f64> {
        if self.peek() == Some('(') {
            self.bump();
            let v = self.parse_exponent()?;
            if self.bump() != Some(')') {
                return Err(self.error("expected `)` after exponent"));
            }
            return Ok(v);
        }
        let mut sign = 1.0;
        while let Some(c) = self.peek() {
            match c {
                '-' => {
                    sign = -sign;
                    self.bump();
                }
                '+' => {
                    self.bump();
                }
                _ => break,
            }
        }
        Ok(sign * self.parse_number()?)
    }

    fn parse_number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c.is_ascii_digit() || c == '.' {
                self.pos += 1;
            } else if (c == 'e' || c == 'E')
                && self.pos > start
                && self
                    .chars
                    .get(self.pos + 1)
                    .is_some_and(|n| n.is_ascii_digit() || *n == '+' || *n == '-')
            {
                self.pos += 2;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|n| n.is_ascii_digit())
                {
                    self.pos += 1;
                }
                break;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.error("expected a number"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map_err(|_| self.error(format!("invalid number `{text}`")))
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.bump();
                let e = self.parse_expr()?;
                if self.bump() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(Expr::constant(self.parse_number()?)),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            Some(c) => Err(self.error(format!("unexpected character `{c}`"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn parse_ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        match name.as_str() {
            "z" => Ok(Expr::z()),
            "zbar" => Ok(Expr::zbar()),
            "i" => Ok(Expr::imaginary_unit()),
            "pi" => Ok(Expr::constant(std::f64::consts::PI)),
            "e" => Ok(Expr::constant(std::f64::consts::E)),
            "exp" | "sin" | "cos" | "conj" | "sqrt" => {
                if self.bump() != Some('(') {
                    return Err(self.error(format!("expected `(` after `{name}`")));
                }
                let arg = self.parse_expr()?;
                if self.bump() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(match name.as_str() {
                    "exp" => Expr::Exp(Box::new(arg)),
                    "sin" => Expr::Sin(Box::new(arg)),
                    "cos" => Expr::Cos(Box::new(arg)),
                    "conj" => conj(arg),
                    _ => powf(arg, 0.5),
                })
            }
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(idx) = rest.parse::<usize>() {
                        return Ok(Expr::Coord(idx));
                    }
                }
                Err(self.error(format!("unknown identifier `{name}`")))
            }
        }
    }
}
