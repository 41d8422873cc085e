//! Convex quadrilaterals, the diagonal-frame parameterization, and the
//! scalar metrics (lengths, areas, split angles) every formula consumes.
//!
//! Labels follow one fixed convention throughout the crate:
//!
//! | symbol | segment  | role      |
//! |--------|----------|-----------|
//! | `a`    | `z2 z3`  | side      |
//! | `b`    | `z1 z3`  | diagonal  |
//! | `c`    | `z1 z2`  | side      |
//! | `d`    | `z4 z1`  | side      |
//! | `e`    | `z2 z4`  | diagonal  |
//! | `f`    | `z3 z4`  | side      |
//!
//! The interior angle at `zi` is split by the diagonal through `zi` into
//! `alpha[i]` and `beta[i]`: `alpha1` lies between `c` and `b`, `beta1`
//! between `b` and `d`, `alpha2` between `a` and `e`, `beta2` between `c`
//! and `e`, `alpha3` between `b` and `f`, `beta3` between `a` and `b`,
//! `alpha4` between `d` and `e`, `beta4` between `e` and `f`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::json::{f17_array, F17};

/// Normalized signed area (relative to the squared diameter) at or below
/// which a vertex triple counts as collinear.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// Default retry cap for [`SampleStrategy::PointRejection`].
pub const REJECTION_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("vertex coordinates must be finite")]
    NonFinite,
    #[error("vertices z{0} and z{1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("vertices do not form a strictly convex quadrilateral (turn at z{0})")]
    NonConvex(usize),
    #[error("invalid diagonal frame: {0}")]
    InvalidFrame(String),
    #[error("invalid sampling margin {0}; expected a value in [0, 0.2]")]
    InvalidMargin(f64),
    #[error("no convex quadrilateral found after {0} draws")]
    RejectionBudgetExceeded(usize),
}

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

fn cross(u: Point, v: Point) -> f64 {
    u.x * v.y - u.y * v.x
}

fn dot(u: Point, v: Point) -> f64 {
    u.x * v.x + u.y * v.y
}

/// Unsigned angle in `[0, pi]` between two vectors.
fn angle_between(u: Point, v: Point) -> f64 {
    cross(u, v).abs().atan2(dot(u, v))
}

/// Four vertices in strictly convex counterclockwise order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrilateral {
    z: [Point; 4],
}

impl Quadrilateral {
    /// Validates four vertices. Clockwise input is re-oriented to
    /// counterclockwise order keeping `z1` in place.
    pub fn from_points(points: [Point; 4]) -> Result<Self, GeometryError> {
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut diam2 = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                let d = points[i].dist(points[j]);
                diam2 = diam2.max(d * d);
            }
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let d = points[i].dist(points[j]);
                if d * d <= COLLINEAR_TOL * diam2 || d == 0.0 {
                    return Err(GeometryError::DuplicatePoints(i + 1, j + 1));
                }
            }
        }

        let shoelace: f64 = (0..4).map(|i| cross(points[i], points[(i + 1) % 4])).sum();
        let z = if shoelace < 0.0 {
            [points[0], points[3], points[2], points[1]]
        } else {
            points
        };

        for i in 0..4 {
            let prev = z[(i + 3) % 4];
            let next = z[(i + 1) % 4];
            let turn = cross(z[i].sub(prev), next.sub(z[i]));
            if turn <= COLLINEAR_TOL * diam2 {
                return Err(GeometryError::NonConvex(i + 1));
            }
        }
        Ok(Self { z })
    }

    pub fn from_frame(frame: &DiagonalFrame) -> Self {
        let [p1, p2, p3, p4] = frame.p;
        let (s, c) = frame.w.sin_cos();
        Self {
            z: [
                Point::new(p1, 0.0),
                Point::new(p2 * c, p2 * s),
                Point::new(-p3, 0.0),
                Point::new(-p4 * c, -p4 * s),
            ],
        }
    }

    pub fn vertices(&self) -> [Point; 4] {
        self.z
    }

    pub fn scaled(&self, s: f64) -> Result<Self, GeometryError> {
        Self::from_points(self.z.map(|p| p.scale(s)))
    }

    /// Cyclic relabeling `(z1, z2, z3, z4) -> (z2, z3, z4, z1)`.
    pub fn relabeled(&self) -> Self {
        Self { z: [self.z[1], self.z[2], self.z[3], self.z[0]] }
    }

    /// Intersection point of the diagonals `z1 z3` and `z2 z4`.
    pub fn diagonal_intersection(&self) -> Point {
        let [z1, z2, z3, z4] = self.z;
        let u = z3.sub(z1);
        let v = z4.sub(z2);
        let t = cross(z2.sub(z1), v) / cross(u, v);
        Point::new(z1.x + t * u.x, z1.y + t * u.y)
    }

    /// Diagonal frame of this quadrilateral, not normalized.
    pub fn frame(&self) -> DiagonalFrame {
        let [z1, z2, z3, z4] = self.z;
        let b = z1.dist(z3);
        let e = z2.dist(z4);
        // Parametric position of the crossing along each diagonal.
        let u = z3.sub(z1);
        let v = z4.sub(z2);
        let den = cross(u, v);
        let t = cross(z2.sub(z1), v) / den;
        let s = cross(z2.sub(z1), u) / den;
        let w = angle_between(z1.sub(z3), z2.sub(z4));
        DiagonalFrame { p: [t * b, s * e, (1.0 - t) * b, (1.0 - s) * e], w }
    }

    pub fn metrics(&self) -> QuadMetrics {
        QuadMetrics::of(self)
    }
}

/// On-disk form of one configuration: `{"points": [[x, y], ...]}` or
/// `{"frame": {"p": [...], "w": ...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ConfigDocument {
    Points([[F17; 2]; 4]),
    Frame(DiagonalFrame),
}

impl ConfigDocument {
    pub fn quadrilateral(&self) -> Result<Quadrilateral, GeometryError> {
        match self {
            ConfigDocument::Points(xy) => Quadrilateral::from_points(xy.map(|[x, y]| Point::new(x.0, y.0))),
            ConfigDocument::Frame(frame) => {
                frame.validate()?;
                Ok(frame.quadrilateral())
            }
        }
    }
}

impl From<&Quadrilateral> for ConfigDocument {
    fn from(q: &Quadrilateral) -> Self {
        ConfigDocument::Points(q.z.map(|p| [F17(p.x), F17(p.y)]))
    }
}

impl Serialize for Quadrilateral {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ConfigDocument::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Quadrilateral {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        ConfigDocument::deserialize(deserializer)?
            .quadrilateral()
            .map_err(serde::de::Error::custom)
    }
}

/// Diagonal-segment lengths `p1..p4` from the diagonal crossing to each
/// vertex, and the angle `w` between the half-diagonals towards `z1` and
/// `z2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalFrame {
    #[serde(with = "f17_array")]
    pub p: [f64; 4],
    #[serde(with = "crate::json::f17")]
    pub w: f64,
}

impl DiagonalFrame {
    pub fn new(p: [f64; 4], w: f64) -> Result<Self, GeometryError> {
        let frame = Self { p, w };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if let Some(i) = self.p.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(GeometryError::InvalidFrame(format!(
                "p{} = {} must be positive",
                i + 1,
                self.p[i]
            )));
        }
        if !(self.w > 0.0 && self.w < PI) {
            return Err(GeometryError::InvalidFrame(format!(
                "w = {} must lie in (0, pi)",
                self.w
            )));
        }
        Ok(())
    }

    /// Rescaled so that `p1 + p2 + p3 + p4 = 1`.
    pub fn normalized(&self) -> Self {
        let s: f64 = self.p.iter().sum();
        Self { p: self.p.map(|x| x / s), w: self.w }
    }

    pub fn quadrilateral(&self) -> Quadrilateral {
        Quadrilateral::from_frame(self)
    }
}

/// Every length, area and angle of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMetrics {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub a123: f64,
    pub a124: f64,
    pub a134: f64,
    pub a234: f64,
    /// `alpha1..alpha4`, stored zero-based.
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
    pub gamma: [f64; 4],
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub wp: f64,
}

impl QuadMetrics {
    pub fn of(q: &Quadrilateral) -> Self {
        let [z1, z2, z3, z4] = q.z;
        let tri = |p: Point, q: Point, r: Point| 0.5 * cross(q.sub(p), r.sub(p)).abs();

        let alpha = [
            angle_between(z2.sub(z1), z3.sub(z1)),
            angle_between(z3.sub(z2), z4.sub(z2)),
            angle_between(z1.sub(z3), z4.sub(z3)),
            angle_between(z1.sub(z4), z2.sub(z4)),
        ];
        let beta = [
            angle_between(z3.sub(z1), z4.sub(z1)),
            angle_between(z1.sub(z2), z4.sub(z2)),
            angle_between(z2.sub(z3), z1.sub(z3)),
            angle_between(z2.sub(z4), z3.sub(z4)),
        ];
        let gamma = [0, 1, 2, 3].map(|i| alpha[i] + beta[i]);

        let s_w = (alpha[1] + beta[0]) + (alpha[3] + beta[2]);
        let d_w = (alpha[1] + beta[0]) - (alpha[3] + beta[2]);
        let s_wp = (alpha[0] + beta[3]) + (alpha[2] + beta[1]);
        let d_wp = (alpha[0] + beta[3]) - (alpha[2] + beta[1]);

        Self {
            a: z2.dist(z3),
            b: z1.dist(z3),
            c: z1.dist(z2),
            d: z4.dist(z1),
            e: z2.dist(z4),
            f: z3.dist(z4),
            a123: tri(z1, z2, z3),
            a124: tri(z1, z2, z4),
            a134: tri(z1, z3, z4),
            a234: tri(z2, z3, z4),
            alpha,
            beta,
            gamma,
            x: 0.5 * d_w,
            y: 0.5 * d_wp,
            w: 0.5 * s_w,
            wp: 0.5 * s_wp,
        }
    }

    /// The product `abcdef`, used to normalize length-six quantities.
    pub fn abcdef(&self) -> f64 {
        self.a * self.b * self.c * self.d * self.e * self.f
    }

    /// Lengths in the order `[a, b, c, d, e, f]`.
    pub fn lengths(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStrategy {
    /// Uniform on the truncated simplex of normalized `p`, uniform `w`.
    FrameUniform,
    /// Four uniform points in the unit square, non-convex draws rejected.
    PointRejection,
}

/// Draws one convex quadrilateral, deterministically in `seed`.
pub fn sample(seed: u64, strategy: SampleStrategy, margin: f64) -> Result<Quadrilateral, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match strategy {
        SampleStrategy::FrameUniform => Ok(sample_frame(&mut rng, margin)?.quadrilateral()),
        SampleStrategy::PointRejection => sample_points(&mut rng, REJECTION_BUDGET),
    }
}

/// Uniform draw from `{p_i >= margin, sum p = 1} x [margin*pi, (1-margin)*pi]`.
pub fn sample_frame<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> Result<DiagonalFrame, GeometryError> {
    if !(0.0..=0.2).contains(&margin) {
        return Err(GeometryError::InvalidMargin(margin));
    }
    loop {
        // Uniform spacings of three sorted uniforms are Dirichlet(1, 1, 1, 1).
        let mut u = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        u.sort_by(f64::total_cmp);
        let spacing = [u[0], u[1] - u[0], u[2] - u[1], 1.0 - u[2]];
        let free = 1.0 - 4.0 * margin;
        let p = spacing.map(|s| margin + free * s);
        let w = PI * (margin + (1.0 - 2.0 * margin) * rng.gen::<f64>());
        if let Ok(frame) = DiagonalFrame::new(p, w) {
            return Ok(frame);
        }
    }
}

fn sample_points<R: Rng + ?Sized>(rng: &mut R, budget: usize) -> Result<Quadrilateral, GeometryError> {
    for _ in 0..budget {
        let mut pts: [Point; 4] = std::array::from_fn(|_| Point::new(rng.gen(), rng.gen()));
        let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
        let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
        pts.sort_by(|p, q| {
            let ap = (p.y - cy).atan2(p.x - cx);
            let aq = (q.y - cy).atan2(q.x - cx);
            ap.total_cmp(&aq)
        });
        if let Ok(q) = Quadrilateral::from_points(pts) {
            return Ok(q);
        }
    }
    Err(GeometryError::RejectionBudgetExceeded(budget))
}

/// Seed of the `index`-th member of a batch drawn from `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair.
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn pts(xy: [[f64; 2]; 4]) -> [Point; 4] {
        xy.map(Point::from)
    }

    fn square() -> Quadrilateral {
        Quadrilateral::from_points(pts([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])).unwrap()
    }

    fn rect() -> Quadrilateral {
        Quadrilateral::from_points(pts([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]])).unwrap()
    }

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * (1.0 + y.abs())
    }

    #[test]
    fn collinear_triple_is_rejected() {
        let err = Quadrilateral::from_points(pts([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 1.0]]));
        assert!(matches!(err, Err(GeometryError::NonConvex(_))));
    }

    #[test]
    fn duplicate_and_non_finite_are_rejected() {
        let dup = Quadrilateral::from_points(pts([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]));
        assert_eq!(dup, Err(GeometryError::DuplicatePoints(2, 3)));
        let nan = Quadrilateral::from_points(pts([[f64::NAN, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]));
        assert_eq!(nan, Err(GeometryError::NonFinite));
    }

    #[test]
    fn bowtie_is_rejected() {
        let bowtie = Quadrilateral::from_points(pts([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]));
        assert!(matches!(bowtie, Err(GeometryError::NonConvex(_))));
    }

    #[test]
    fn clockwise_square_is_reoriented() {
        let cw = Quadrilateral::from_points(pts([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(cw, square());
        assert_eq!(cw.metrics(), square().metrics());
    }

    #[test]
    fn unit_square_metrics() {
        let m = square().metrics();
        for (got, want) in [(m.a, 1.0), (m.c, 1.0), (m.d, 1.0), (m.f, 1.0), (m.b, SQRT_2), (m.e, SQRT_2)] {
            assert!(close(got, want, 1e-15));
        }
        for area in [m.a123, m.a124, m.a134, m.a234] {
            assert!(close(area, 0.5, 1e-15));
        }
        for i in 0..4 {
            assert!(close(m.alpha[i], FRAC_PI_4, 1e-15));
            assert!(close(m.beta[i], FRAC_PI_4, 1e-15));
            assert!(close(m.gamma[i], FRAC_PI_2, 1e-15));
        }
        assert!(close(m.w, FRAC_PI_2, 1e-15) && close(m.wp, FRAC_PI_2, 1e-15));
        assert!(m.x.abs() < 1e-15 && m.y.abs() < 1e-15);
    }

    #[test]
    fn rectangle_metrics() {
        let m = rect().metrics();
        let r5 = 5f64.sqrt();
        for (got, want) in [(m.a, 1.0), (m.d, 1.0), (m.c, 2.0), (m.f, 2.0), (m.b, r5), (m.e, r5)] {
            assert!(close(got, want, 1e-15));
        }
        for area in [m.a123, m.a124, m.a134, m.a234] {
            assert!(close(area, 1.0, 1e-15));
        }
        assert!(m.x.abs() < 1e-15 && m.y.abs() < 1e-15);
        assert!(close(m.w, (-0.6f64).acos(), 1e-14));
    }

    #[test]
    fn square_frame_reconstructs_square() {
        let s = SQRT_2 / 2.0;
        let frame = DiagonalFrame::new([s; 4], FRAC_PI_2).unwrap();
        let got = frame.quadrilateral().metrics();
        let want = square().metrics();
        for (g, w) in got.lengths().iter().zip(want.lengths()) {
            assert!(close(*g, w, 1e-15));
        }
        for (g, w) in got.gamma.iter().zip(want.gamma) {
            assert!(close(*g, w, 1e-15));
        }
    }

    #[test]
    fn zero_segment_frame_is_invalid() {
        assert!(matches!(
            DiagonalFrame::new([0.0, 0.3, 0.3, 0.4], 1.0),
            Err(GeometryError::InvalidFrame(_))
        ));
        assert!(DiagonalFrame::new([0.25; 4], PI).is_err());
        assert!(DiagonalFrame::new([0.25; 4], 0.0).is_err());
    }

    #[test]
    fn rhombus_frame_angle_from_coordinates() {
        let frame = DiagonalFrame::new([1.0; 4], PI / 3.0).unwrap();
        let q = frame.quadrilateral();
        let [z1, z2, ..] = q.vertices();
        let p = q.diagonal_intersection();
        let angle = angle_between(z1.sub(p), z2.sub(p));
        assert!(close(angle, PI / 3.0, 1e-15));
        assert!(close(q.metrics().w, PI / 3.0, 1e-14));
    }

    #[test]
    fn frame_of_square_and_rectangle() {
        let f = square().frame();
        for p in f.p {
            assert!(close(p, SQRT_2 / 2.0, 1e-15));
        }
        assert!(close(f.w, FRAC_PI_2, 1e-15));
        let f = rect().frame();
        for p in f.p {
            assert!(close(p, 5f64.sqrt() / 2.0, 1e-15));
        }
        assert!(close(f.w, (-0.6f64).acos(), 1e-15));
    }

    #[test]
    fn sampling_is_deterministic() {
        for strategy in [SampleStrategy::FrameUniform, SampleStrategy::PointRejection] {
            assert_eq!(sample(42, strategy, 0.05).unwrap(), sample(42, strategy, 0.05).unwrap());
        }
        assert!(matches!(
            sample(1, SampleStrategy::FrameUniform, 0.3),
            Err(GeometryError::InvalidMargin(_))
        ));
    }

    #[test]
    fn frame_margin_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let f = sample_frame(&mut rng, 0.1).unwrap();
            assert!(f.p.iter().all(|&p| p >= 0.1 - 1e-15));
            assert!((f.p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(f.w >= 0.1 * PI && f.w <= 0.9 * PI);
        }
    }

    #[test]
    fn point_rejection_outputs_are_convex() {
        for i in 0..10_000 {
            let q = sample(derive_seed(9, i), SampleStrategy::PointRejection, 0.0).unwrap();
            // Re-validating must succeed and keep the orientation.
            assert_eq!(Quadrilateral::from_points(q.vertices()).unwrap(), q);
        }
    }

    #[test]
    fn rejection_budget_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_points(&mut rng, 0), Err(GeometryError::RejectionBudgetExceeded(0)));
    }

    #[test]
    fn json_documents() {
        let q = square();
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.starts_with("{\"points\":[[0.0000000000000000e0,"), "{text}");
        let back: Quadrilateral = serde_json::from_str(&text).unwrap();
        assert_eq!(back, q);

        let frame: ConfigDocument =
            serde_json::from_str(r#"{"frame": {"p": [0.25, 0.25, 0.25, 0.25], "w": 1.5707963267948966}}"#).unwrap();
        let m = frame.quadrilateral().unwrap().metrics();
        assert!(close(m.c, SQRT_2 / 4.0, 1e-15));

        let bad: ConfigDocument = serde_json::from_str(r#"{"frame": {"p": [0, 1, 1, 1], "w": 1}}"#).unwrap();
        assert!(bad.quadrilateral().is_err());
        assert!(serde_json::from_str::<Quadrilateral>(r#"{"points": [[0,0],[1,1],[2,2],[0,1]]}"#).is_err());
    }
}
