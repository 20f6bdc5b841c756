//! Expression language for tensor components.
//!
//! Every metric entry, structure tensor component and scalar field is an
//! [`Expr`] over the coordinate names of its chart. Expressions evaluate over
//! any [`Scalar`], which gives exact partial derivatives through [`Dual`].

mod dual;
mod parser;

pub use dual::{Dual, Scalar};
pub use parser::{parse, ParseError};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Expression tree. Exponents are constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Variable lookup used by [`Expr::eval`].
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }

    /// Folds a variable-free tree to its value. `None` if any variable
    /// occurs or evaluation leaves the real domain.
    pub fn constant_value(&self) -> Option<f64> {
        self.eval_with::<f64>(&|_| None).ok()
    }

    /// Names of all variables occurring in the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, bindings: &(impl Bindings + ?Sized)) -> Result<f64, EvalError> {
        self.eval_with(&|n| bindings.lookup(n))
    }

    /// Value and exact partial derivative with respect to `seed`.
    pub fn eval_dual(
        &self,
        bindings: &(impl Bindings + ?Sized),
        seed: &str,
    ) -> Result<(f64, f64), EvalError> {
        if bindings.lookup(seed).is_none() {
            return Err(EvalError::UnboundVariable(seed.to_string()));
        }
        let d = self.eval_with(&|n| {
            bindings
                .lookup(n)
                .map(|v| if n == seed { Dual::variable(v) } else { Dual::constant(v) })
        })?;
        Ok((d.value, d.deriv))
    }

    /// Evaluates against parallel slices of names and values.
    pub fn eval_at<T: Scalar>(&self, names: &[String], values: &[T]) -> Result<T, EvalError> {
        self.eval_with(&|n| names.iter().position(|c| c == n).map(|i| values[i]))
    }

    pub fn eval_with<T: Scalar>(&self, lookup: &dyn Fn(&str) -> Option<T>) -> Result<T, EvalError> {
        let out = match self {
            Expr::Const(v) => T::from_f64(*v),
            Expr::Var(n) => lookup(n).ok_or_else(|| EvalError::UnboundVariable(n.clone()))?,
            Expr::Neg(a) => -a.eval_with(lookup)?,
            Expr::Add(a, b) => a.eval_with(lookup)? + b.eval_with(lookup)?,
            Expr::Sub(a, b) => a.eval_with(lookup)? - b.eval_with(lookup)?,
            Expr::Mul(a, b) => a.eval_with(lookup)? * b.eval_with(lookup)?,
            Expr::Div(a, b) => {
                let num = a.eval_with(lookup)?;
                let den = b.eval_with(lookup)?;
                if den.value() == 0.0 {
                    return Err(EvalError::Domain("division by zero".into()));
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval_with(lookup)?;
                let b = base.value();
                if b < 0.0 && n.fract() != 0.0 {
                    return Err(EvalError::Domain(format!(
                        "negative base {b} raised to non-integer power {n}"
                    )));
                }
                if b == 0.0 && *n < 0.0 {
                    return Err(EvalError::Domain("zero raised to a negative power".into()));
                }
                base.powf(*n)
            }
            Expr::Func(f, a) => {
                let x = a.eval_with(lookup)?;
                let v = x.value();
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(EvalError::Domain(format!("log of nonpositive {v}")));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::Domain(format!("sqrt of negative {v}")));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if !out.is_finite() {
            return Err(EvalError::Domain(format!("non-finite result from `{self}`")));
        }
        Ok(out)
    }

    pub fn pow(self, n: f64) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(v.powf(n)),
            e if n == 1.0 => e,
            e => Expr::Pow(Box::new(e), n),
        }
    }

    pub fn apply(self, f: Func) -> Expr {
        Expr::Func(f, Box::new(self))
    }
}

// Builder arithmetic folds constants and drops additive/multiplicative
// identities so that composed fields stay small. Parsing never goes through
// these impls.

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
            (a, b) if a.is_zero() => b,
            (a, b) if b.is_zero() => a,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => -b,
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            (a, b) if a.is_zero() || b.is_zero() => Expr::zero(),
            (Expr::Const(a), b) if a == 1.0 => b,
            (a, Expr::Const(b)) if b == 1.0 => a,
            (Expr::Const(a), b) if a == -1.0 => -b,
            (a, Expr::Const(b)) if b == -1.0 => -a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) if b != 0.0 => Expr::Const(a / b),
            (a, Expr::Const(b)) if b == 1.0 => a,
            (a, b) if a.is_zero() => {
                let _ = b;
                Expr::zero()
            }
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(-v),
            Expr::Neg(a) => *a,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

impl ops::Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Const(self) * rhs
    }
}

/// Canonical printer: every compound node is parenthesized, so the output
/// reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{})", -v)
            }
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "{a}^{n}"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
