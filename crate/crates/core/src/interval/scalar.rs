//! One set of formulas, three number types: `f64` for point checks,
//! [`Interval`] for natural enclosures, and [`Grad`] for gradient
//! enclosures feeding the mean-value form.

use std::ops::{Add, Mul, Neg, Sub};

use super::{Interval, IntervalError};

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    fn pi() -> Self;
    fn sqr(self) -> Self;
    fn sqrt(self) -> Result<Self, IntervalError>;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(y: Self, x: Self) -> Self;
    /// Certainly strictly positive.
    fn is_positive(&self) -> bool;
    /// Combines two enclosures of the same quantity.
    fn meet(self, other: Self) -> Self;
    /// Interval hull of the value.
    fn range(&self) -> Interval;
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn sqr(self) -> Self {
        self * self
    }
    fn sqrt(self) -> Result<Self, IntervalError> {
        if self < 0.0 {
            Err(IntervalError::NegativeSqrtDomain(self))
        } else {
            Ok(f64::sqrt(self))
        }
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan2(y: Self, x: Self) -> Self {
        f64::atan2(y, x)
    }
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
    fn meet(self, _other: Self) -> Self {
        self
    }
    fn range(&self) -> Interval {
        Interval::point(*self)
    }
}

impl Scalar for Interval {
    fn constant(x: f64) -> Self {
        Interval::point(x)
    }
    fn pi() -> Self {
        Interval::pi()
    }
    fn sqr(self) -> Self {
        Interval::sqr(self)
    }
    fn sqrt(self) -> Result<Self, IntervalError> {
        Interval::sqrt(self)
    }
    fn sin(self) -> Self {
        Interval::sin(self)
    }
    fn cos(self) -> Self {
        Interval::cos(self)
    }
    fn atan2(y: Self, x: Self) -> Self {
        Interval::atan2(y, x)
    }
    fn is_positive(&self) -> bool {
        self.lo() > 0.0
    }
    fn meet(self, other: Self) -> Self {
        // Both sides enclose the same real number, so the intersection is
        // never empty.
        self.intersect(&other).unwrap_or(self)
    }
    fn range(&self) -> Interval {
        *self
    }
}

/// Number of free parameters: `p1, p2, p3, w` (with `p4 = 1 - p1 - p2 - p3`).
pub const FREE: usize = 4;

/// An interval value together with interval enclosures of its partial
/// derivatives with respect to the free parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grad {
    pub value: Interval,
    pub partials: [Interval; FREE],
}

impl Grad {
    pub fn constant_interval(value: Interval) -> Self {
        Self { value, partials: [Interval::ZERO; FREE] }
    }

    /// The `k`-th free variable ranging over `value`.
    pub fn variable(value: Interval, k: usize) -> Self {
        let mut partials = [Interval::ZERO; FREE];
        partials[k] = Interval::point(1.0);
        Self { value, partials }
    }

    fn chain(self, value: Interval, slope: Interval) -> Self {
        Self { value, partials: self.partials.map(|d| d * slope) }
    }

    fn entire_slope(value: Interval) -> Self {
        Self { value, partials: [Interval::ENTIRE; FREE] }
    }
}

impl Add for Grad {
    type Output = Grad;
    fn add(self, rhs: Grad) -> Grad {
        Grad {
            value: self.value + rhs.value,
            partials: std::array::from_fn(|k| self.partials[k] + rhs.partials[k]),
        }
    }
}

impl Sub for Grad {
    type Output = Grad;
    fn sub(self, rhs: Grad) -> Grad {
        Grad {
            value: self.value - rhs.value,
            partials: std::array::from_fn(|k| self.partials[k] - rhs.partials[k]),
        }
    }
}

impl Mul for Grad {
    type Output = Grad;
    fn mul(self, rhs: Grad) -> Grad {
        Grad {
            value: self.value * rhs.value,
            partials: std::array::from_fn(|k| self.partials[k] * rhs.value + self.value * rhs.partials[k]),
        }
    }
}

impl Neg for Grad {
    type Output = Grad;
    fn neg(self) -> Grad {
        Grad { value: -self.value, partials: self.partials.map(|d| -d) }
    }
}

impl Scalar for Grad {
    fn constant(x: f64) -> Self {
        Grad::constant_interval(Interval::point(x))
    }
    fn pi() -> Self {
        Grad::constant_interval(Interval::pi())
    }
    fn sqr(self) -> Self {
        self.chain(self.value.sqr(), self.value * 2.0)
    }
    fn sqrt(self) -> Result<Self, IntervalError> {
        let root = self.value.sqrt()?;
        Ok(match Interval::point(0.5).checked_div(root) {
            Ok(slope) => self.chain(root, slope),
            Err(_) => Grad::entire_slope(root),
        })
    }
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn atan2(y: Self, x: Self) -> Self {
        // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2)
        let value = Interval::atan2(y.value, x.value);
        match Interval::point(1.0).checked_div(x.value.sqr() + y.value.sqr()) {
            Ok(inv) => Grad {
                value,
                partials: std::array::from_fn(|k| (x.value * y.partials[k] - y.value * x.partials[k]) * inv),
            },
            Err(_) => Grad::entire_slope(value),
        }
    }
    fn is_positive(&self) -> bool {
        self.value.lo() > 0.0
    }
    fn meet(self, other: Self) -> Self {
        Grad { value: self.value.meet(other.value), partials: self.partials }
    }
    fn range(&self) -> Interval {
        self.value
    }
}
