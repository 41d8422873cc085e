//! Frame-coordinate formulas for the metrics and the residual, evaluated
//! over boxes of diagonal-frame parameters.
//!
//! With the diagonal crossing at the origin every quantity is an explicit
//! function of `p1..p4` and `w`:
//!
//! ```text
//! c^2 = (p1 - p2)^2 + 4 p1 p2 sin^2(w/2)     a^2 = (p2 - p3)^2 + 4 p2 p3 cos^2(w/2)
//! f^2 = (p3 - p4)^2 + 4 p3 p4 sin^2(w/2)     d^2 = (p4 - p1)^2 + 4 p4 p1 cos^2(w/2)
//! b = p1 + p3    e = p2 + p4    A123 = b p2 sin(w) / 2   (and alike)
//! ```
//!
//! The split angles come from the four triangles around the crossing, for
//! example `alpha1 = atan2(p2 sin w, p1 - p2 cos w)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::scalar::{Grad, Scalar};
use super::{Interval, IntervalError};
use crate::geometry::DiagonalFrame;

/// A box of frame parameters. The `p` components need not sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBox {
    pub p: [Interval; 4],
    pub w: Interval,
}

impl FrameBox {
    pub fn new(p: [Interval; 4], w: Interval) -> Result<Self, IntervalError> {
        if p.iter().any(|x| !(x.lo() > 0.0)) || !(w.lo() > 0.0 && w.hi() < PI) {
            return Err(IntervalError::Indeterminate(format!("box {p:?} x {w:?} leaves the frame domain")));
        }
        Ok(Self { p, w })
    }

    pub fn point(frame: &DiagonalFrame) -> Self {
        Self { p: frame.p.map(Interval::point), w: Interval::point(frame.w) }
    }

    pub fn contains(&self, frame: &DiagonalFrame) -> bool {
        self.p.iter().zip(frame.p).all(|(i, x)| i.contains(x)) && self.w.contains(frame.w)
    }

    pub fn is_subset_of(&self, other: &FrameBox) -> bool {
        self.p.iter().zip(&other.p).all(|(a, b)| a.is_subset_of(b)) && self.w.is_subset_of(&other.w)
    }
}

/// A box in the free coordinates `(p1, p2, p3, w)` of the gauge
/// `p1 + p2 + p3 + p4 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub p1: Interval,
    pub p2: Interval,
    pub p3: Interval,
    pub w: Interval,
}

/// Lower bounds on `p4` are relaxed by this relative amount so expansion
/// points that sit on the face `p4 = margin` up to roundoff stay covered.
const P4_FLOOR_RELAX: f64 = 1e-9;

impl ParamBox {
    /// Bounding box of the truncated simplex `{p_i >= margin, sum p = 1}`
    /// times `[margin pi, (1 - margin) pi]`.
    pub fn root(margin: f64) -> Self {
        let p = Interval::new(margin, 1.0 - 3.0 * margin).expect("margin below 1/4");
        let w = Interval::new(margin * PI, (1.0 - margin) * PI).expect("margin below 1/2");
        Self { p1: p, p2: p, p3: p, w }
    }

    pub fn dims(&self) -> [Interval; 4] {
        [self.p1, self.p2, self.p3, self.w]
    }

    pub fn from_dims([p1, p2, p3, w]: [Interval; 4]) -> Self {
        Self { p1, p2, p3, w }
    }

    /// Enclosure of `1 - p1 - p2 - p3` over the box.
    pub fn p4(&self) -> Interval {
        Interval::point(1.0) - self.p1 - self.p2 - self.p3
    }

    /// Whether the box certainly misses `{p4 >= margin}`.
    pub fn is_outside(&self, margin: f64) -> bool {
        self.p4().hi() < margin
    }

    /// The frame box over the part of this box inside the domain, or `None`
    /// if there is no such part.
    pub fn frame_box(&self, margin: f64) -> Option<FrameBox> {
        if self.is_outside(margin) {
            return None;
        }
        let p4 = self.p4();
        let floor = margin * (1.0 - P4_FLOOR_RELAX);
        let p4 = Interval::new(p4.lo().max(floor), p4.hi()).ok()?;
        FrameBox::new([self.p1, self.p2, self.p3, p4], self.w).ok()
    }

    /// Index of the dimension to bisect: the widest, with `w` measured in
    /// units of `pi`; ties go to the earlier dimension.
    pub fn split_dim(&self) -> usize {
        let widths = [self.p1.width(), self.p2.width(), self.p3.width(), self.w.width() / PI];
        let mut best = 0;
        for k in 1..4 {
            if widths[k] > widths[best] {
                best = k;
            }
        }
        best
    }

    pub fn split(&self) -> (ParamBox, ParamBox) {
        let k = self.split_dim();
        let mut lo = self.dims();
        let mut hi = lo;
        let (a, b) = lo[k].bisect();
        lo[k] = a;
        hi[k] = b;
        (ParamBox::from_dims(lo), ParamBox::from_dims(hi))
    }

    /// A point of the box inside `{p4 >= margin}`: the center, pulled towards
    /// the lower corner when the center lies outside.
    pub(crate) fn expansion_point(&self, margin: f64) -> [f64; 4] {
        let d = self.dims();
        let mut c = d.map(|x| x.mid());
        let budget = 1.0 - margin;
        let lo_sum = d[0].lo() + d[1].lo() + d[2].lo();
        let mid_sum = c[0] + c[1] + c[2];
        if mid_sum > budget && mid_sum > lo_sum {
            let t = ((budget - lo_sum) / (mid_sum - lo_sum)).clamp(0.0, 1.0);
            for k in 0..3 {
                c[k] = (d[k].lo() + t * (c[k] - d[k].lo())).clamp(d[k].lo(), d[k].hi());
            }
        }
        c
    }
}

/// All metrics of a configuration in frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMetrics<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub e: T,
    pub f: T,
    pub a123: T,
    pub a124: T,
    pub a134: T,
    pub a234: T,
    pub alpha: [T; 4],
    pub beta: [T; 4],
    pub gamma: [T; 4],
    pub x: T,
    pub y: T,
    pub w: T,
    pub wp: T,
}

impl<T: Scalar> FrameMetrics<T> {
    pub fn abcdef(&self) -> T {
        self.a * self.b * self.c * self.d * self.e * self.f
    }
}

struct Sides<T> {
    a: T,
    b: T,
    c: T,
    d: T,
    e: T,
    f: T,
}

fn sides<T: Scalar>([p1, p2, p3, p4]: [T; 4], w: T) -> Result<Sides<T>, IntervalError> {
    let half = w * T::constant(0.5);
    let s2 = half.sin().sqr();
    let c2 = half.cos().sqr();
    let four = T::constant(4.0);
    let side = |u: T, v: T, trig2: T, name: &str| -> Result<T, IntervalError> {
        let len = ((u - v).sqr() + four * u * v * trig2).sqrt()?;
        if len.is_positive() {
            Ok(len)
        } else {
            Err(IntervalError::Indeterminate(format!("length {name} may vanish")))
        }
    };
    Ok(Sides {
        c: side(p1, p2, s2, "c")?,
        a: side(p2, p3, c2, "a")?,
        f: side(p3, p4, s2, "f")?,
        d: side(p4, p1, c2, "d")?,
        b: p1 + p3,
        e: p2 + p4,
    })
}

/// Residual from the six edge expressions, with the common factor
/// `sin^2(w) / 4` of the area products pulled out.
pub fn frame_edge_residual<T: Scalar>(p: [T; 4], w: T) -> Result<T, IntervalError> {
    let Sides { a, b, c, d, e, f } = sides(p, w)?;
    let [p1, p2, p3, p4] = p;
    let two = T::constant(2.0);
    // Twice the triangle areas divided by sin(w).
    let (t123, t134, t124, t234) = (b * p2, b * p4, e * p1, e * p3);
    let q = f * t123 * t124 * (a + b + e + d - two * c)
        + d * t123 * t234 * (c + b + e + f - two * a)
        + c * t134 * t234 * (d + b + e + a - two * f)
        + a * t124 * t134 * (c + e + b + f - two * d)
        - e * t123 * t134 * (c + a + d + f - two * b)
        - b * t124 * t234 * (c + d + a + f - two * e);
    Ok(q * w.sin().sqr() * T::constant(0.25))
}

pub fn frame_metrics<T: Scalar>(p: [T; 4], w: T) -> Result<FrameMetrics<T>, IntervalError> {
    let Sides { a, b, c, d, e, f } = sides(p, w)?;
    let [p1, p2, p3, p4] = p;
    let (sw, cw) = (w.sin(), w.cos());
    let half = T::constant(0.5);
    let at = T::atan2;
    let alpha = [
        at(p2 * sw, p1 - p2 * cw),
        at(p3 * sw, p2 + p3 * cw),
        at(p4 * sw, p3 - p4 * cw),
        at(p1 * sw, p4 + p1 * cw),
    ];
    let beta = [
        at(p4 * sw, p1 + p4 * cw),
        at(p1 * sw, p2 - p1 * cw),
        at(p2 * sw, p3 + p2 * cw),
        at(p3 * sw, p4 - p3 * cw),
    ];
    let gamma = [0, 1, 2, 3].map(|i| alpha[i] + beta[i]);
    let (u, v) = (alpha[1] + beta[0], alpha[3] + beta[2]);
    let (s, t) = (alpha[0] + beta[3], alpha[2] + beta[1]);
    let big_w = ((u + v) * half).meet(w);
    let wp = ((s + t) * half).meet(T::pi() - big_w);
    Ok(FrameMetrics {
        a,
        b,
        c,
        d,
        e,
        f,
        a123: half * b * p2 * sw,
        a124: half * e * p1 * sw,
        a134: half * b * p4 * sw,
        a234: half * e * p3 * sw,
        alpha,
        beta,
        gamma,
        x: (u - v) * half,
        y: (s - t) * half,
        w: big_w,
        wp,
    })
}

/// `abcdef` times the closed angular forms of all four term groups.
pub fn frame_factored_residual<T: Scalar>(m: &FrameMetrics<T>) -> T {
    let half = T::constant(0.5);
    let two = T::constant(2.0);
    let hs = |t: T| (t * half).sin();
    let hc = |t: T| (t * half).cos();
    let (sx, cx, sy, cy) = (hs(m.x), hc(m.x), hs(m.y), hc(m.y));
    let s_a1b4 = hs(m.alpha[0] - m.beta[3]);
    let s_b1a2 = hs(m.beta[0] - m.alpha[1]);
    let s_g13 = hs(m.gamma[0] + m.gamma[2]);
    let angular = m.x.sin() * hs(m.wp) * sy * s_a1b4
        + m.y.sin() * hs(m.w) * sx * s_b1a2
        + m.w.sin() * cx * cy * s_g13
        - two * (sx * hc(m.w) * cy).sqr()
        - two * (cx * hc(m.wp) * sy).sqr()
        - two * s_a1b4 * s_b1a2 * s_g13;
    m.abcdef() * angular
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enclosure {
    /// Natural extension of the edge-expression form.
    Edge,
    /// Natural extension of the closed angular form.
    Factored,
}

/// Enclosure of the residual over every frame in `bx`.
pub fn residual_enclosure(bx: &FrameBox, path: Enclosure) -> Result<Interval, IntervalError> {
    match path {
        Enclosure::Edge => frame_edge_residual(bx.p, bx.w),
        Enclosure::Factored => Ok(frame_factored_residual(&frame_metrics(bx.p, bx.w)?)),
    }
}

pub fn metrics_enclosure(bx: &FrameBox) -> Result<FrameMetrics<Interval>, IntervalError> {
    frame_metrics(bx.p, bx.w)
}

/// Mean-value enclosure of the edge-form residual over the part of `pb`
/// with `p4 >= margin`.
pub fn centered_residual_enclosure(pb: &ParamBox, margin: f64) -> Result<Interval, IntervalError> {
    let fb = pb
        .frame_box(margin)
        .ok_or_else(|| IntervalError::Indeterminate("box lies outside the domain".into()))?;
    let minus_one = Interval::point(-1.0);
    let p4 = Grad { value: fb.p[3], partials: [minus_one, minus_one, minus_one, Interval::ZERO] };
    let vars = [
        Grad::variable(pb.p1, 0),
        Grad::variable(pb.p2, 1),
        Grad::variable(pb.p3, 2),
        p4,
    ];
    let slope = frame_edge_residual(vars, Grad::variable(pb.w, 3))?;

    let c = pb.expansion_point(margin);
    let pc = [0, 1, 2].map(|k| Interval::point(c[k]));
    let p4c = Interval::point(1.0) - pc[0] - pc[1] - pc[2];
    let center = frame_edge_residual([pc[0], pc[1], pc[2], p4c], Interval::point(c[3]))?;

    let dims = pb.dims();
    let mut enc = center;
    for k in 0..4 {
        enc = enc + slope.partials[k] * (dims[k] - c[k]);
    }
    Ok(enc)
}

/// Intersection of the natural edge, mean-value edge, and natural factored
/// enclosures over the part of `pb` inside the domain.
pub fn tight_residual_enclosure(pb: &ParamBox, margin: f64) -> Result<Interval, IntervalError> {
    let fb = pb
        .frame_box(margin)
        .ok_or_else(|| IntervalError::Indeterminate("box lies outside the domain".into()))?;
    let natural = residual_enclosure(&fb, Enclosure::Edge)?;
    let centered = centered_residual_enclosure(pb, margin)?;
    let factored = residual_enclosure(&fb, Enclosure::Factored)?;
    Ok(natural.meet(centered).meet(factored))
}
