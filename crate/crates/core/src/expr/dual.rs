//! Single-seed dual numbers for exact forward-mode directional derivatives.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A dual number `value + deriv·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub const fn new(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }

    pub const fn constant(value: f64) -> Self {
        Dual { value, deriv: 0.0 }
    }

    /// A seeded variable: derivative coefficient 1.
    pub const fn variable(value: f64) -> Self {
        Dual { value, deriv: 1.0 }
    }
}

impl fmt::Display for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.value, self.deriv)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value * rhs.value,
            self.value * rhs.deriv + self.deriv * rhs.value,
        )
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let v = self.value / rhs.value;
        Dual::new(v, (self.deriv - v * rhs.deriv) / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }
}

/// Number types an [`Expr`](super::Expr) can be evaluated over.
///
/// Domain checks (division by zero, logarithm of a nonpositive number, ...) are
/// made by the evaluator on [`Scalar::value`], so implementors only provide the
/// raw arithmetic.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn value(&self) -> f64;
    /// True when every component is finite.
    fn is_finite(&self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, n: f64) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, n: f64) -> Self {
        pow_real(self, n)
    }
}

impl Scalar for Dual {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.deriv.is_finite()
    }
    fn sin(self) -> Self {
        Dual::new(self.value.sin(), self.deriv * self.value.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.value.cos(), -self.deriv * self.value.sin())
    }
    fn tan(self) -> Self {
        let t = self.value.tan();
        Dual::new(t, self.deriv * (1.0 + t * t))
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        Dual::new(e, self.deriv * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.value.ln(), self.deriv / self.value)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        Dual::new(s, self.deriv / (2.0 * s))
    }
    fn powf(self, n: f64) -> Self {
        if n == 0.0 {
            return Dual::constant(1.0);
        }
        let d = if self.deriv == 0.0 {
            0.0
        } else {
            n * pow_real(self.value, n - 1.0) * self.deriv
        };
        Dual::new(pow_real(self.value, n), d)
    }
}

// Integer exponents go through powi so that x^2 is exactly x*x.
fn pow_real(x: f64, n: f64) -> f64 {
    if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
        x.powi(n as i32)
    } else {
        x.powf(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_is_exact() {
        let a = Dual::new(3.0, 0.5);
        let b = Dual::new(-2.0, 4.0);
        let p = a * b;
        assert_eq!(p.value, -6.0);
        assert_eq!(p.deriv, a.value * b.deriv + a.deriv * b.value);
    }

    #[test]
    fn quotient_rule() {
        let x = Dual::variable(2.0);
        let q = Dual::constant(1.0) / x;
        assert_eq!(q.value, 0.5);
        assert_eq!(q.deriv, -0.25);
    }

    #[test]
    fn pow_of_constant_seed_is_flat() {
        let x = Dual::constant(0.0);
        let y = x.powf(0.5);
        assert_eq!(y.deriv, 0.0);
        assert_eq!(Dual::variable(3.0).powf(2.0), Dual::new(9.0, 6.0));
    }
}
