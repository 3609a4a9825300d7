//! Scalar expression trees over named coordinates.
//!
//! An [`Expr`] is an immutable tree of constants, variables and a small set of
//! arithmetic and elementary-function nodes. It supports evaluation against a
//! [`Binding`], exact symbolic partial differentiation, a best-effort
//! [`simplify`](Expr::simplify) pass and a central finite-difference oracle.
//!
//! Expressions can also be read from the infix text syntax used by system and
//! configuration files, see [`Expr::parse`].

mod parse;
mod simplify;

pub use parse::is_identifier;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;

use crate::error::{Error, Result};

/// Closed-form scalar expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power.
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

/// Source of variable values during evaluation.
pub trait Binding {
    fn lookup(&self, name: &str) -> Option<f64>;
}

/// Map from coordinate (or parameter) name to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointBinding(BTreeMap<String, f64>);

impl PointBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.insert(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Binding for PointBinding {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name)
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for PointBinding {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        PointBinding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Values for an ordered list of names, backed by a fallback binding.
///
/// Used to evaluate chart expressions at a point given as a coordinate slice
/// without building a map per point.
#[derive(Debug, Clone, Copy)]
pub struct SliceBinding<'a> {
    pub names: &'a [String],
    pub values: &'a [f64],
    pub fallback: &'a PointBinding,
}

impl Binding for SliceBinding<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
            .or_else(|| self.fallback.get(name))
    }
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn one() -> Self {
        Expr::Const(1.0)
    }

    /// Variable node. Panics on an empty name.
    pub fn var(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "variable names must be nonempty");
        Expr::Var(name)
    }

    pub fn powi(self, exponent: i32) -> Self {
        Expr::Pow(Box::new(self), exponent)
    }

    pub fn sin(self) -> Self {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Self {
        Expr::Cos(Box::new(self))
    }

    pub fn exp(self) -> Self {
        Expr::Exp(Box::new(self))
    }

    /// Parses the infix text syntax (`+ - * / ^`, `sin cos exp`, identifiers).
    pub fn parse(source: &str) -> Result<Self> {
        parse::parse(source)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Names of all variables appearing in the tree.
    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.collect_vars(out)
            }
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.depends_on(var)
            }
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    pub fn evaluate(&self, binding: &impl Binding) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => binding
                .lookup(v)
                .ok_or_else(|| Error::UnboundVariable(v.clone()))?,
            Expr::Neg(a) => -a.evaluate(binding)?,
            Expr::Add(a, b) => a.evaluate(binding)? + b.evaluate(binding)?,
            Expr::Mul(a, b) => a.evaluate(binding)? * b.evaluate(binding)?,
            Expr::Div(a, b) => {
                let num = a.evaluate(binding)?;
                let den = b.evaluate(binding)?;
                if den == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.evaluate(binding)?;
                if *n < 0 && base == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Sin(a) => a.evaluate(binding)?.sin(),
            Expr::Cos(a) => a.evaluate(binding)?.cos(),
            Expr::Exp(a) => a.evaluate(binding)?.exp(),
        })
    }

    /// Exact partial derivative with respect to `var`, simplified.
    pub fn differentiate(&self, var: &str) -> Expr {
        self.derivative_raw(var).simplify()
    }

    fn derivative_raw(&self, var: &str) -> Expr {
        if !self.depends_on(var) {
            return Expr::zero();
        }
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => {
                if v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => -a.derivative_raw(var),
            Expr::Add(a, b) => a.derivative_raw(var) + b.derivative_raw(var),
            Expr::Mul(a, b) => {
                a.derivative_raw(var) * (**b).clone() + (**a).clone() * b.derivative_raw(var)
            }
            Expr::Div(a, b) => {
                if b.depends_on(var) {
                    (a.derivative_raw(var) * (**b).clone() - (**a).clone() * b.derivative_raw(var))
                        / (**b).clone().powi(2)
                } else {
                    a.derivative_raw(var) / (**b).clone()
                }
            }
            Expr::Pow(a, n) => match *n {
                0 => Expr::zero(),
                n => Expr::Const(n as f64) * (**a).clone().powi(n - 1) * a.derivative_raw(var),
            },
            Expr::Sin(a) => (**a).clone().cos() * a.derivative_raw(var),
            Expr::Cos(a) => -((**a).clone().sin() * a.derivative_raw(var)),
            Expr::Exp(a) => (**a).clone().exp() * a.derivative_raw(var),
        }
    }

    /// Constant folding and annihilation; never changes the value at points
    /// where the input evaluates.
    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Replaces every occurrence of `var` by `value`.
    pub fn substitute(&self, var: &str, value: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(var, value));
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) if v == var => value.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, n) => Expr::Pow(sub(a), *n),
            Expr::Sin(a) => Expr::Sin(sub(a)),
            Expr::Cos(a) => Expr::Cos(sub(a)),
            Expr::Exp(a) => Expr::Exp(sub(a)),
        }
    }
}

/// Central difference `(e(b + h·var) − e(b − h·var)) / 2h`.
pub fn finite_difference(e: &Expr, b: &PointBinding, var: &str, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    if !e.depends_on(var) {
        e.evaluate(b)?;
        return Ok(0.0);
    }
    let x = b
        .get(var)
        .ok_or_else(|| Error::UnboundVariable(var.to_string()))?;
    let forward = e.evaluate(&b.clone().with(var, x + step))?;
    let backward = e.evaluate(&b.clone().with(var, x - step))?;
    Ok((forward - backward) / (2.0 * step))
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(-rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Const(self) * rhs
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |acc, e| if acc.is_zero() { e } else { acc + e })
    }
}

// Display precedence levels.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => PREC_NEG,
        Expr::Const(_) | Expr::Var(_) | Expr::Sin(_) | Expr::Cos(_) | Expr::Exp(_) => PREC_ATOM,
        Expr::Neg(_) => PREC_NEG,
        Expr::Add(..) => PREC_ADD,
        Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
        Expr::Pow(..) => 4,
    }
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_finite() && c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c}")
    }
}

fn fmt_child(e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(e) >= min_prec {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => {
                f.write_str("-")?;
                fmt_child(a, PREC_ATOM - 1, f)
            }
            Expr::Add(a, b) => {
                fmt_child(a, PREC_ADD, f)?;
                match &**b {
                    Expr::Neg(inner) => {
                        f.write_str(" - ")?;
                        fmt_child(inner, PREC_MUL, f)
                    }
                    Expr::Const(c) if *c < 0.0 => {
                        f.write_str(" - ")?;
                        fmt_const(-c, f)
                    }
                    other => {
                        f.write_str(" + ")?;
                        fmt_child(other, PREC_MUL, f)
                    }
                }
            }
            Expr::Mul(a, b) => {
                fmt_child(a, PREC_MUL, f)?;
                f.write_str("*")?;
                fmt_child(b, PREC_NEG + 1, f)
            }
            Expr::Div(a, b) => {
                fmt_child(a, PREC_MUL, f)?;
                f.write_str("/")?;
                fmt_child(b, PREC_NEG + 1, f)
            }
            Expr::Pow(a, n) => {
                fmt_child(a, PREC_ATOM, f)?;
                write!(f, "^{n}")
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}
