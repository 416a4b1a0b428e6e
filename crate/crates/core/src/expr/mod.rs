//! Closed-form expressions in one independent variable `x` with named
//! parameters.
//!
//! Expressions are immutable trees. They can be parsed from text, printed
//! back in a form that reparses to the same tree, evaluated over the reals,
//! differentiated symbolically with respect to `x`, and simplified.
//!
//! ```
//! use oscillation::expr::{Expr, ParamBindings};
//!
//! let e = Expr::parse("(1/4)*x^2 - a").unwrap();
//! let params = ParamBindings::from_pairs([("a", 16.0)]);
//! assert_eq!(e.eval(10.0, &params).unwrap(), 9.0);
//! ```

mod diff;
mod parse;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::ParseError;

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// The supported elementary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> Result<f64, DomainError> {
        let out = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => {
                if v <= 0.0 {
                    return Err(DomainError::LogNonPositive);
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(DomainError::SqrtNegative);
                }
                v.sqrt()
            }
            Func::Abs => v.abs(),
        };
        finite(out)
    }
}

/// Expression tree node.
///
/// `Const` values are always finite: the parser rejects overflowing literals
/// and simplification never folds to a non-finite value.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Why a point lies outside an expression's real domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a non-positive number")]
    LogNonPositive,
    #[error("square root of a negative number")]
    SqrtNegative,
    #[error("negative base raised to a non-integer power")]
    InvalidPower,
    #[error("result is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("parameter `{0}` is not bound")]
    Unbound(String),
    #[error("outside the real domain: {0}")]
    Domain(#[from] DomainError),
}

impl EvalError {
    pub fn is_domain(&self) -> bool {
        matches!(self, EvalError::Domain(_))
    }
}

/// Parameter name to value map. Ordered so serialized output is stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamBindings(BTreeMap<String, f64>);

impl ParamBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, K>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<String>,
    {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    /// Bindings of `self` overridden by those in `other`.
    pub fn merged(&self, other: &ParamBindings) -> ParamBindings {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.set(k, v);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn finite(v: f64) -> Result<f64, DomainError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFinite)
    }
}

fn is_integral(v: f64) -> bool {
    v.fract() == 0.0 && v.abs() < 2f64.powi(31)
}

pub(crate) fn apply_binary(op: BinOp, l: f64, r: f64) -> Result<f64, DomainError> {
    let out = match op {
        BinOp::Add => l + r,
        BinOp::Sub => l - r,
        BinOp::Mul => l * r,
        BinOp::Div => {
            if r == 0.0 {
                return Err(DomainError::DivisionByZero);
            }
            l / r
        }
        BinOp::Pow => {
            if l == 0.0 && r < 0.0 {
                return Err(DomainError::DivisionByZero);
            }
            if is_integral(r) {
                l.powi(r as i32)
            } else if l < 0.0 {
                return Err(DomainError::InvalidPower);
            } else {
                l.powf(r)
            }
        }
    };
    finite(out)
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse::parse(text)
    }

    pub fn constant(v: f64) -> Expr {
        debug_assert!(v.is_finite());
        Expr::Const(v)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::Param(name.into())
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, r: Expr) -> Expr {
        Expr::binary(BinOp::Add, self, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, r: Expr) -> Expr {
        Expr::binary(BinOp::Sub, self, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, r: Expr) -> Expr {
        Expr::binary(BinOp::Mul, self, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, r: Expr) -> Expr {
        Expr::binary(BinOp::Div, self, r)
    }

    pub fn pow(self, r: Expr) -> Expr {
        Expr::binary(BinOp::Pow, self, r)
    }

    /// Evaluates at `x`. Unbound parameters are reported separately from
    /// points outside the real domain.
    pub fn eval(&self, x: f64, params: &ParamBindings) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::X => Ok(x),
            Expr::Param(name) => params
                .get(name)
                .ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Neg(a) => Ok(-a.eval(x, params)?),
            Expr::Binary(op, l, r) => {
                let l = l.eval(x, params)?;
                let r = r.eval(x, params)?;
                Ok(apply_binary(*op, l, r)?)
            }
            Expr::Call(f, a) => Ok(f.apply(a.eval(x, params)?)?),
        }
    }

    /// Symbolic derivative with respect to `x`; parameters are constants.
    pub fn differentiate(&self) -> Expr {
        diff::differentiate(self).simplify()
    }

    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Replaces every bound parameter by its value. Unbound names are left
    /// in place.
    pub fn substitute(&self, params: &ParamBindings) -> Expr {
        match self {
            Expr::Param(name) => match params.get(name) {
                Some(v) => Expr::Const(v),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::X => self.clone(),
            Expr::Neg(a) => a.substitute(params).neg(),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.substitute(params), r.substitute(params)),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(params)),
        }
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Param(name) => {
                out.insert(name.clone());
            }
            Expr::Const(_) | Expr::X => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Binary(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
        }
    }

    pub fn contains_x(&self) -> bool {
        match self {
            Expr::X => true,
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.contains_x(),
            Expr::Binary(_, l, r) => l.contains_x() || r.contains_x(),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::X | Expr::Param(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Const(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

struct Wrapped<'a>(&'a Expr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Prints with the minimum parentheses needed to reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-{}", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::X => f.write_str("x"),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(a) => write!(f, "-{}", Wrapped(a, a.precedence() < 3)),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
            Expr::Binary(op, l, r) => {
                let (sym, prec) = match op {
                    BinOp::Add => (" + ", 1),
                    BinOp::Sub => (" - ", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                let (wrap_l, wrap_r) = if *op == BinOp::Pow {
                    // base must be an atom; exponent may be any factor
                    (l.precedence() < 5, r.precedence() < 3)
                } else {
                    (l.precedence() < prec, r.precedence() <= prec)
                };
                write!(f, "{}{}{}", Wrapped(l, wrap_l), sym, Wrapped(r, wrap_r))
            }
        }
    }
}
