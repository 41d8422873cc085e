//! Point evaluation of the residual and of every grouping and closed form
//! derived from it.
//!
//! The residual of a convex quadrilateral is
//!
//! ```text
//! E12 + E23 + E34 + E41 - E13 - E24
//! ```
//!
//! where each edge expression multiplies the free length, the two triangle
//! areas sharing the edge, and the sum of the two triangle-inequality slacks
//! at that edge. It is evaluated along three independent routes
//! ([`ResidualPath`]) that must agree to roundoff.

mod audit;
mod terms;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::QuadMetrics;

pub use audit::{audit, audit_batch, AuditReport, BatchConfig, CheckId, CheckRecord, SignResolution};
pub use terms::{expanded_terms, Area, ExpandedTerm, Length, TermGroup};

/// Slack floor for inequality checks on `abcdef`-normalized quantities.
pub const SLACK_TOL: f64 = 1e-12;

/// The six edge expressions (length to the sixth power).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeTermSet {
    #[serde(with = "crate::json::f17")]
    pub e12: f64,
    #[serde(with = "crate::json::f17")]
    pub e23: f64,
    #[serde(with = "crate::json::f17")]
    pub e34: f64,
    #[serde(with = "crate::json::f17")]
    pub e41: f64,
    #[serde(with = "crate::json::f17")]
    pub e13: f64,
    #[serde(with = "crate::json::f17")]
    pub e24: f64,
}

impl EdgeTermSet {
    pub fn residual(&self) -> f64 {
        (self.e12 + self.e23 + self.e34 + self.e41) - (self.e13 + self.e24)
    }
}

pub fn edge_terms(m: &QuadMetrics) -> EdgeTermSet {
    let QuadMetrics { a, b, c, d, e, f, a123, a124, a134, a234, .. } = *m;
    EdgeTermSet {
        e12: f * a123 * a124 * (a + b + e + d - 2.0 * c),
        e23: d * a123 * a234 * (c + b + e + f - 2.0 * a),
        e34: c * a134 * a234 * (d + b + e + a - 2.0 * f),
        e41: a * a124 * a134 * (c + e + b + f - 2.0 * d),
        e13: e * a123 * a134 * (c + a + d + f - 2.0 * b),
        e24: b * a124 * a234 * (c + d + a + f - 2.0 * e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualPath {
    /// Sum of the six edge expressions.
    Edge,
    /// The thirty monomials of the expanded form, summed one by one.
    Expanded,
    /// `abcdef` times the closed angular forms of every term group.
    Factored,
}

impl ResidualPath {
    pub const ALL: [ResidualPath; 3] = [ResidualPath::Edge, ResidualPath::Expanded, ResidualPath::Factored];
}

pub fn residual(m: &QuadMetrics, path: ResidualPath) -> f64 {
    match path {
        ResidualPath::Edge => edge_terms(m).residual(),
        ResidualPath::Expanded => expanded_terms().iter().map(|t| t.eval(m)).sum(),
        ResidualPath::Factored => {
            let angular: f64 = TermGroup::SINGLE
                .iter()
                .map(|&g| single_group_angular(m, g))
                .sum::<f64>()
                + pair_terms_angular(m);
            m.abcdef() * angular
        }
    }
}

/// Residual divided by `abcdef`; scale free.
pub fn normalized_residual(m: &QuadMetrics) -> f64 {
    residual(m, ResidualPath::Edge) / m.abcdef()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// Direct sum of the collected monomials.
    Raw,
    /// `abcdef` times the angular closed form.
    Closed,
}

/// Sum of the eight multiplicity-one terms of `group`.
///
/// # Panics
/// If `group` is [`TermGroup::Pair`]; use [`pair_terms_sum`] for those.
pub fn single_group_sum(m: &QuadMetrics, group: TermGroup, form: Form) -> f64 {
    assert!(group != TermGroup::Pair, "pair terms have their own closed form");
    match form {
        Form::Raw => group_raw(m, group),
        Form::Closed => m.abcdef() * single_group_angular(m, group),
    }
}

/// Sum of the six multiplicity-two terms.
pub fn pair_terms_sum(m: &QuadMetrics, form: Form) -> f64 {
    match form {
        Form::Raw => group_raw(m, TermGroup::Pair),
        Form::Closed => m.abcdef() * pair_terms_angular(m),
    }
}

fn group_raw(m: &QuadMetrics, group: TermGroup) -> f64 {
    expanded_terms()
        .iter()
        .filter(|t| t.group() == group)
        .map(|t| t.eval(m))
        .sum()
}

/// Angular factor of a multiplicity-one group (without `abcdef`).
pub fn single_group_angular(m: &QuadMetrics, group: TermGroup) -> f64 {
    let h = Halves::of(m);
    match group {
        TermGroup::X => m.x.sin() * h.swp * h.sy * h.s_a1b4,
        TermGroup::Y => m.y.sin() * h.sw * h.sx * h.s_b1a2,
        TermGroup::W => m.w.sin() * h.cx * h.cy * h.s_g13,
        TermGroup::Pair => panic!("pair terms have their own closed form"),
    }
}

/// Angular factor of the multiplicity-two terms (without `abcdef`).
pub fn pair_terms_angular(m: &QuadMetrics) -> f64 {
    let h = Halves::of(m);
    quadratic_part(&h) - 2.0 * h.s_a1b4 * h.s_b1a2 * h.s_g13
}

/// `-2 sin^2(X/2) cos^2(W/2) cos^2(Y/2) - 2 cos^2(X/2) cos^2(W'/2) sin^2(Y/2)`
fn quadratic_part(h: &Halves) -> f64 {
    -2.0 * (h.sx * h.cw * h.cy).powi(2) - 2.0 * (h.cx * h.cwp * h.sy).powi(2)
}

/// Half-angle sines and cosines shared by the closed forms.
struct Halves {
    sx: f64,
    cx: f64,
    sy: f64,
    cy: f64,
    sw: f64,
    cw: f64,
    swp: f64,
    cwp: f64,
    /// `sin((alpha1 - beta4) / 2)`
    s_a1b4: f64,
    /// `sin((beta1 - alpha2) / 2)`
    s_b1a2: f64,
    /// `sin((gamma1 + gamma3) / 2)`
    s_g13: f64,
}

impl Halves {
    fn of(m: &QuadMetrics) -> Self {
        let (sx, cx) = (0.5 * m.x).sin_cos();
        let (sy, cy) = (0.5 * m.y).sin_cos();
        let (sw, cw) = (0.5 * m.w).sin_cos();
        let (swp, cwp) = (0.5 * m.wp).sin_cos();
        Self {
            sx,
            cx,
            sy,
            cy,
            sw,
            cw,
            swp,
            cwp,
            s_a1b4: (0.5 * (m.alpha[0] - m.beta[3])).sin(),
            s_b1a2: (0.5 * (m.beta[0] - m.alpha[1])).sin(),
            s_g13: (0.5 * (m.gamma[0] + m.gamma[2])).sin(),
        }
    }
}

/// Sign in front of `sin(gamma2) sin(gamma4)` when the multiplicity-two
/// terms are rewritten as `abcdef / 2` times a sum of sine products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SineSign {
    Plus,
    Minus,
}

impl SineSign {
    fn factor(self) -> f64 {
        match self {
            SineSign::Plus => 1.0,
            SineSign::Minus => -1.0,
        }
    }
}

/// `abcdef / 2 * (-sin a1 sin b4 - sin a3 sin b2 - sin a4 sin b3 - sin a2 sin b1
/// + sin g1 sin g3 +/- sin g2 sin g4)`.
pub fn pair_terms_sine_form(m: &QuadMetrics, sign: SineSign) -> f64 {
    let (al, be, ga) = (m.alpha.map(f64::sin), m.beta.map(f64::sin), m.gamma.map(f64::sin));
    let s = -al[0] * be[3] - al[2] * be[1] - al[3] * be[2] - al[1] * be[0]
        + ga[0] * ga[2]
        + sign.factor() * ga[1] * ga[3];
    0.5 * m.abcdef() * s
}

/// The two halves of the linearized multiplicity-two expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularParts {
    /// Sum-of-angles cosines, from the six-cosine definition.
    pub p1_value: f64,
    /// Difference-of-angles cosines, from the six-cosine definition.
    pub p2_value: f64,
    pub p1_closed: f64,
    pub p2_closed: f64,
}

/// Splits `sin u sin v = (cos(u - v) - cos(u + v)) / 2` across the sine form
/// with the given sign, then evaluates both parts by definition and in closed
/// form.
pub fn angular_parts(m: &QuadMetrics, sign: SineSign) -> AngularParts {
    let (al, be, ga) = (m.alpha, m.beta, m.gamma);
    let s = sign.factor();
    let p1_value = 0.25
        * ((al[0] + be[3]).cos()
            + (al[2] + be[1]).cos()
            + (al[3] + be[2]).cos()
            + (al[1] + be[0]).cos()
            + (ga[0] - ga[2]).cos()
            + s * (ga[1] - ga[3]).cos());
    let p2_value = 0.25
        * (-(al[0] - be[3]).cos()
            - (al[2] - be[1]).cos()
            - (al[3] - be[2]).cos()
            - (al[1] - be[0]).cos()
            - (ga[0] + ga[2]).cos()
            - s * (ga[1] + ga[3]).cos());
    let h = Halves::of(m);
    AngularParts {
        p1_value,
        p2_value,
        p1_closed: 0.5 + quadratic_part(&h),
        p2_closed: -0.5 - 2.0 * h.s_a1b4 * h.s_b1a2 * h.s_g13,
    }
}

/// Both sides of `cos u + cos v + cos w = 1 + 4 sin(u/2) sin(v/2) sin(w/2)`,
/// valid when `u + v + w = pi`.
pub fn cosine_triple(u: f64, v: f64, w: f64) -> (f64, f64) {
    let lhs = u.cos() + v.cos() + w.cos();
    let rhs = 1.0 + 4.0 * (0.5 * u).sin() * (0.5 * v).sin() * (0.5 * w).sin();
    (lhs, rhs)
}

/// The angle triple `(beta4 - alpha1, alpha2 - beta1, gamma1 + gamma3)`, which
/// sums to `pi` on every convex quadrilateral.
pub fn derived_triple(m: &QuadMetrics) -> [f64; 3] {
    [m.beta[3] - m.alpha[0], m.alpha[1] - m.beta[0], m.gamma[0] + m.gamma[2]]
}

/// The three half-angle bounds on the skew factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkewBound {
    /// `|sin((alpha1 - beta4)/2)| <= sin((W' - Y)/2)`
    AlphaOneBetaFour,
    /// `|sin((beta1 - alpha2)/2)| <= sin((W - X)/2)`
    BetaOneAlphaTwo,
    /// `sin((gamma1 + gamma3)/2) >= sin((X + Y)/2)`
    OppositeGammas,
}

impl SkewBound {
    pub const ALL: [SkewBound; 3] =
        [SkewBound::AlphaOneBetaFour, SkewBound::BetaOneAlphaTwo, SkewBound::OppositeGammas];
}

/// Larger side minus smaller side of the bound; nonnegative when it holds.
pub fn skew_bound_slack(m: &QuadMetrics, bound: SkewBound) -> f64 {
    let half_sin = |t: f64| (0.5 * t).sin();
    match bound {
        SkewBound::AlphaOneBetaFour => half_sin(m.wp - m.y) - half_sin(m.alpha[0] - m.beta[3]).abs(),
        SkewBound::BetaOneAlphaTwo => half_sin(m.w - m.x) - half_sin(m.beta[0] - m.alpha[1]).abs(),
        SkewBound::OppositeGammas => half_sin(m.gamma[0] + m.gamma[2]) - half_sin(m.x + m.y),
    }
}

/// Whether `gamma2 + gamma3 <= pi` and `gamma3 + gamma4 <= pi`.
pub fn core_hypotheses(m: &QuadMetrics) -> bool {
    m.gamma[1] + m.gamma[2] <= PI && m.gamma[2] + m.gamma[3] <= PI
}

/// The three multiplicity-one angular factors plus the quadratic half of the
/// multiplicity-two closed form. Nonnegative under [`core_hypotheses`].
pub fn core_inequality_value(m: &QuadMetrics) -> f64 {
    let singles: f64 = TermGroup::SINGLE.iter().map(|&g| single_group_angular(m, g)).sum();
    singles + quadratic_part(&Halves::of(m))
}

/// Terms dropped from the multiplicity-one factors when the skew bounds are
/// applied.
pub fn remainder_terms(m: &QuadMetrics) -> f64 {
    let h = Halves::of(m);
    let half = |t: f64| (0.5 * t).sin_cos();
    let (s_a3, _) = half(m.alpha[2]);
    let (_, c_b2) = half(m.beta[1]);
    let (s_b3, _) = half(m.beta[2]);
    let (_, c_a4) = half(m.alpha[3]);
    let (_, c_g1) = half(m.gamma[0]);
    let (s_g3, _) = half(m.gamma[2]);
    2.0 * m.x.sin() * h.swp * h.sy * s_a3 * c_b2
        + 2.0 * m.y.sin() * h.sw * h.sx * s_b3 * c_a4
        + 2.0 * m.w.sin() * h.cx * h.cy * c_g1 * s_g3
}

/// `2 sin((W'-Y)/2) sin((W-X)/2) sin((X+Y)/2)
///  - 2 sin((beta4-alpha1)/2) sin((alpha2-beta1)/2) sin((gamma3+gamma1)/2)
///  + 2 sin W cos(X/2) cos(Y/2) cos(gamma1/2) sin(gamma3/2)`
pub fn closing_chain_slack(m: &QuadMetrics) -> f64 {
    let s = |t: f64| (0.5 * t).sin();
    let h = Halves::of(m);
    2.0 * s(m.wp - m.y) * s(m.w - m.x) * s(m.x + m.y)
        - 2.0 * s(m.beta[3] - m.alpha[0]) * s(m.alpha[1] - m.beta[0]) * s(m.gamma[2] + m.gamma[0])
        + 2.0 * m.w.sin() * h.cx * h.cy * (0.5 * m.gamma[0]).cos() * s(m.gamma[2])
}
