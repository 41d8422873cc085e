//! Closed intervals with outward rounding.
//!
//! Every operation returns an enclosure of the exact image. Arithmetic is
//! computed in round-to-nearest and each endpoint is then pushed one ulp
//! outward; libm transcendental results are widened by a few ulps. No
//! global rounding mode is touched, so concurrent evaluation is safe.

mod frame;
mod scalar;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::json::F17;

pub use frame::{
    centered_residual_enclosure, frame_edge_residual, frame_factored_residual, frame_metrics,
    metrics_enclosure, residual_enclosure, tight_residual_enclosure, Enclosure, FrameBox, FrameMetrics, ParamBox,
};
pub use scalar::{Grad, Scalar};

/// Largest negative lower bound `sqrt` clamps to zero as roundoff.
pub const SQRT_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("square root of an interval reaching below zero ({0:e})")]
    NegativeSqrtDomain(f64),
    #[error("degenerate geometry: {0}")]
    Indeterminate(String),
    #[error("invalid interval [{0}, {1}]")]
    InvalidBounds(f64, f64),
}

/// A closed interval `[lo, hi]` of extended reals.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

fn down(x: f64) -> f64 {
    x.next_down()
}

fn up(x: f64) -> f64 {
    x.next_up()
}

/// Widening for libm results, which are not correctly rounded.
fn libm_down(x: f64) -> f64 {
    x - (x.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE)
}

fn libm_up(x: f64) -> f64 {
    x + (x.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE)
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(IntervalError::InvalidBounds(lo, hi))
        }
    }

    pub fn point(x: f64) -> Self {
        debug_assert!(!x.is_nan());
        Self { lo: x, hi: x }
    }

    /// Enclosure of `pi`.
    pub fn pi() -> Self {
        Self { lo: down(PI), hi: up(PI) }
    }

    fn half_pi() -> Self {
        Self { lo: down(FRAC_PI_2), hi: up(FRAC_PI_2) }
    }

    fn outward(lo: f64, hi: f64) -> Self {
        Self { lo: down(lo), hi: up(hi) }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint, exactly representable and inside the interval.
    pub fn mid(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval { lo: self.lo, hi: m }, Interval { lo: m, hi: self.hi })
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZeroInterval);
        }
        let q = [self.lo / rhs.lo, self.lo / rhs.hi, self.hi / rhs.lo, self.hi / rhs.hi];
        Ok(Self::outward(min4(q), max4(q)))
    }

    /// `x * x`, tighter than `x * x` when `x` straddles zero.
    pub fn sqr(self) -> Interval {
        let (a, b) = (self.lo * self.lo, self.hi * self.hi);
        if self.contains_zero() {
            Interval { lo: 0.0, hi: up(a.max(b)) }
        } else {
            Interval { lo: down(a.min(b)).max(0.0), hi: up(a.max(b)) }
        }
    }

    pub fn sqrt(self) -> Result<Interval, IntervalError> {
        if self.lo < -SQRT_CLAMP || self.hi < 0.0 {
            return Err(IntervalError::NegativeSqrtDomain(self.lo));
        }
        let lo = self.lo.max(0.0).sqrt();
        Ok(Interval { lo: down(lo).max(0.0), hi: up(self.hi.sqrt()) })
    }

    pub fn sin(self) -> Interval {
        self.periodic(f64::sin, FRAC_PI_2, -FRAC_PI_2)
    }

    pub fn cos(self) -> Interval {
        self.periodic(f64::cos, 0.0, PI)
    }

    /// Range of a 2pi-periodic function with maximum at `peak + 2k pi` and
    /// minimum at `trough + 2k pi`, monotone in between.
    fn periodic(self, f: fn(f64) -> f64, peak: f64, trough: f64) -> Interval {
        if !(self.width() < 2.0 * PI) {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let (fa, fb) = (f(self.lo), f(self.hi));
        let mut lo = libm_down(fa.min(fb));
        let mut hi = libm_up(fa.max(fb));
        if hits_lattice(self, peak) {
            hi = 1.0;
        }
        if hits_lattice(self, trough) {
            lo = -1.0;
        }
        Interval { lo: lo.max(-1.0), hi: hi.min(1.0) }
    }

    pub fn atan(self) -> Interval {
        Interval {
            lo: libm_down(self.lo.atan()).max(-FRAC_PI_2.next_up()),
            hi: libm_up(self.hi.atan()).min(FRAC_PI_2.next_up()),
        }
    }

    /// Enclosure of `atan2(y, x)` over the box `y x x`, as a subset of
    /// `[-pi, pi]`. Boxes that straddle the cut along the negative x axis get
    /// the whole range.
    pub fn atan2(y: Interval, x: Interval) -> Interval {
        if y.lo > 0.0 {
            // pi/2 - atan(x / y)
            let r = x.checked_div(y).expect("y is bounded away from zero");
            return Interval::half_pi() - r.atan();
        }
        if y.hi < 0.0 {
            let r = x.checked_div(y).expect("y is bounded away from zero");
            return -Interval::half_pi() - r.atan();
        }
        if x.lo > 0.0 {
            let r = y.checked_div(x).expect("x is bounded away from zero");
            return r.atan();
        }
        Interval { lo: -PI.next_up(), hi: PI.next_up() }
    }
}

/// Whether `[x.lo, x.hi]` may contain `offset + 2k pi` for some integer `k`.
/// Errs towards `true`.
fn hits_lattice(x: Interval, offset: f64) -> bool {
    let two_pi = 2.0 * PI;
    let slack = 1e-9;
    let t_lo = (x.lo - offset) / two_pi - slack;
    let t_hi = (x.hi - offset) / two_pi + slack;
    t_lo.ceil() <= t_hi
}

fn min4(v: [f64; 4]) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn max4(v: [f64; 4]) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        // 0 * inf is 0 for interval purposes.
        let p = |a: f64, b: f64| {
            let v = a * b;
            if v.is_nan() {
                0.0
            } else {
                v
            }
        };
        let q = [p(self.lo, rhs.lo), p(self.lo, rhs.hi), p(self.hi, rhs.lo), p(self.hi, rhs.hi)];
        Interval::outward(min4(q), max4(q))
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        self - Interval::point(rhs)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self * Interval::point(rhs)
    }
}

/// Serialized as a `[lo, hi]` pair with 17 significant digits.
impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [F17(self.lo), F17(self.hi)].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[f64; 2]>::deserialize(deserializer)?;
        Interval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}
