//! Arithmetic formula strings used by QEC schemes and distillation units.
//!
//! A formula is parsed once into an [`Expr`] tree and then evaluated against a
//! [`VariableEnvironment`]. The grammar is
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := factor (("*" | "/") factor)*
//! factor  := unary ("^" factor)?
//! unary   := "-" unary | primary
//! primary := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! so `^` binds tighter than `* /`, is right-associative, and takes a unary
//! base (`-2 ^ 2` is `(-2) ^ 2`). Supported functions are `ceil`, `floor`,
//! `log2` and `sqrt`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("variable `{0}` must be bound to a finite value")]
    NonFiniteBinding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Ceil,
    Floor,
    Log2,
    Sqrt,
}

impl Function {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "ceil" => Some(Function::Ceil),
            "floor" => Some(Function::Floor),
            "log2" => Some(Function::Log2),
            "sqrt" => Some(Function::Sqrt),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Ceil => "ceil",
            Function::Floor => "floor",
            Function::Log2 => "log2",
            Function::Sqrt => "sqrt",
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Variable(String),
    Neg(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Function, Box<Expr>),
}

// Binding strength of each grammar level, used by the printer to decide where
// parentheses are required.
const LEVEL_SUM: u8 = 1;
const LEVEL_PRODUCT: u8 = 2;
const LEVEL_FACTOR: u8 = 3;
const LEVEL_UNARY: u8 = 4;
const LEVEL_PRIMARY: u8 = 5;

impl Expr {
    fn level(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => LEVEL_SUM,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => LEVEL_PRODUCT,
            Expr::Binary(BinaryOp::Pow, ..) => LEVEL_FACTOR,
            Expr::Neg(_) => LEVEL_UNARY,
            Expr::Number(_) | Expr::Variable(_) | Expr::Call(..) => LEVEL_PRIMARY,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Number(value) => write!(f, "{value:?}"),
            Expr::Variable(name) => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                inner.fmt_at(f, LEVEL_UNARY)
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_at(f, 0)?;
                f.write_str(")")
            }
            Expr::Binary(op, lhs, rhs) => {
                let (left_min, right_min) = match op {
                    BinaryOp::Add | BinaryOp::Sub => (LEVEL_SUM, LEVEL_PRODUCT),
                    BinaryOp::Mul | BinaryOp::Div => (LEVEL_PRODUCT, LEVEL_FACTOR),
                    BinaryOp::Pow => (LEVEL_UNARY, LEVEL_FACTOR),
                };
                lhs.fmt_at(f, left_min)?;
                write!(f, " {} ", op.symbol())?;
                rhs.fmt_at(f, right_min)
            }
        }
    }

    /// Names of all variables referenced by the expression, sorted.
    pub fn variables(&self) -> Vec<&str> {
        fn collect<'a>(expr: &'a Expr, out: &mut Vec<&'a str>) {
            match expr {
                Expr::Number(_) => {}
                Expr::Variable(name) => out.push(name),
                Expr::Neg(inner) | Expr::Call(_, inner) => collect(inner, out),
                Expr::Binary(_, lhs, rhs) => {
                    collect(lhs, out);
                    collect(rhs, out);
                }
            }
        }
        let mut out = Vec::new();
        collect(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn evaluate(&self, env: &VariableEnvironment) -> Result<f64, FormulaError> {
        let value = match self {
            Expr::Number(value) => *value,
            Expr::Variable(name) => env
                .get(name)
                .ok_or_else(|| FormulaError::UnboundVariable(name.clone()))?,
            Expr::Neg(inner) => -inner.evaluate(env)?,
            Expr::Call(func, arg) => {
                let x = arg.evaluate(env)?;
                match func {
                    Function::Ceil => x.ceil(),
                    Function::Floor => x.floor(),
                    Function::Log2 if x <= 0.0 => {
                        return Err(FormulaError::Domain(format!("log2 of non-positive value {x}")))
                    }
                    Function::Log2 => x.log2(),
                    Function::Sqrt if x < 0.0 => {
                        return Err(FormulaError::Domain(format!("sqrt of negative value {x}")))
                    }
                    Function::Sqrt => x.sqrt(),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.evaluate(env)?;
                let b = rhs.evaluate(env)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div if b == 0.0 => return Err(FormulaError::DivisionByZero),
                    BinaryOp::Div => a / b,
                    BinaryOp::Pow => power(a, b)?,
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(FormulaError::Domain(format!("non-finite result in `{self}`")))
        }
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, FormulaError> {
    if exponent.fract() == 0.0 {
        if exponent.abs() <= f64::from(i32::MAX) {
            #[allow(clippy::cast_possible_truncation)]
            return Ok(base.powi(exponent as i32));
        }
        return Ok(base.powf(exponent));
    }
    if base < 0.0 {
        return Err(FormulaError::Domain(format!(
            "negative base {base} raised to non-integer exponent {exponent}"
        )));
    }
    Ok(base.powf(exponent))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// A formula string together with its parsed tree.
///
/// Serializes as the original source string.
#[derive(Debug, Clone)]
pub struct Formula {
    source: String,
    expr: Expr,
}

impl Formula {
    pub fn parse(source: &str) -> Result<Self, FormulaError> {
        Ok(Self {
            source: source.to_string(),
            expr: parse_formula(source)?,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn evaluate(&self, env: &VariableEnvironment) -> Result<f64, FormulaError> {
        self.expr.evaluate(env)
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

impl FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Formula::parse(s)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let source = String::deserialize(deserializer)?;
        Formula::parse(&source).map_err(serde::de::Error::custom)
    }
}

/// Named, finite variable bindings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariableEnvironment {
    values: BTreeMap<String, f64>,
}

impl VariableEnvironment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: f64) -> Result<(), FormulaError> {
        let name = name.into();
        if !value.is_finite() {
            return Err(FormulaError::NonFiniteBinding(name));
        }
        self.values.insert(name, value);
        Ok(())
    }

    /// Builder-style [`bind`](Self::bind).
    pub fn with(mut self, name: impl Into<String>, value: f64) -> Result<Self, FormulaError> {
        self.bind(name, value)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn parse_formula(source: &str) -> Result<Expr, FormulaError> {
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("operator or end of input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&self, expected: &str) -> FormulaError {
        FormulaError::Syntax {
            position: self.pos,
            expected: expected.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinaryOp::Add,
                Some(b'-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinaryOp::Mul,
                Some(b'/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, FormulaError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("identifier is ascii")
                    .to_string();
                if self.peek() == Some(b'(') {
                    let func = Function::from_name(&name)
                        .ok_or_else(|| FormulaError::UnknownFunction(name.clone()))?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                Ok(Expr::Variable(name))
            }
            _ => Err(self.error("number, identifier, `-` or `(`")),
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), FormulaError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", c as char)))
        }
    }

    fn number(&mut self) -> Result<Expr, FormulaError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let from = p.pos;
            while p.src.get(p.pos).is_some_and(u8::is_ascii_digit) {
                p.pos += 1;
            }
            p.pos > from
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            if !digits(self) {
                return Err(self.error("digit after decimal point"));
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                return Err(self.error("exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("number is ascii");
        let value: f64 = text.parse().map_err(|_| FormulaError::Syntax {
            position: start,
            expected: "number".into(),
        })?;
        if !value.is_finite() {
            return Err(FormulaError::Syntax {
                position: start,
                expected: "finite number".into(),
            });
        }
        Ok(Expr::Number(value))
    }
}
