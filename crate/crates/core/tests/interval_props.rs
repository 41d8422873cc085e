use std::f64::consts::PI;

use proptest::prelude::*;
use quadineq::geometry::DiagonalFrame;
use quadineq::interval::{
    centered_residual_enclosure, frame_metrics, residual_enclosure, tight_residual_enclosure, Enclosure, FrameBox,
    Interval, ParamBox,
};
use quadineq::kernel::{edge_terms, residual, ResidualPath};

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn interval() -> impl Strategy<Value = Interval> {
    (-10.0f64..10.0, 0.0f64..5.0).prop_map(|(lo, w)| iv(lo, lo + w))
}

fn point_in(x: Interval, u: f64) -> f64 {
    (x.lo() + u * (x.hi() - x.lo())).clamp(x.lo(), x.hi())
}

/// A point of the gauge domain at `margin`: `(p1, p2, p3, w)`.
fn domain_point(margin: f64) -> impl Strategy<Value = [f64; 4]> {
    (proptest::array::uniform4(0.0f64..1.0), 0.0f64..1.0).prop_map(move |(q, t)| {
        let s: f64 = q.iter().sum::<f64>().max(1e-12);
        let free = 1.0 - 4.0 * margin;
        let p = q.map(|x| margin + free * x / s);
        [p[0], p[1], p[2], PI * (margin + (1.0 - 2.0 * margin) * t)]
    })
}

/// A box of log-uniform width around a domain point, clipped to the root box.
fn param_box(margin: f64) -> impl Strategy<Value = (ParamBox, [f64; 4])> {
    (domain_point(margin), proptest::array::uniform4(0.0f64..1.0), -6.0f64..-0.5).prop_map(move |(c, u, lw)| {
        let root = ParamBox::root(margin).dims();
        let width = 10f64.powf(lw);
        let dims: [Interval; 4] = std::array::from_fn(|k| {
            let scale = if k == 3 { PI } else { 1.0 };
            let lo = (c[k] - u[k] * width * scale).max(root[k].lo());
            let hi = (c[k] + (1.0 - u[k]) * width * scale).min(root[k].hi());
            iv(lo, hi)
        });
        (ParamBox::from_dims(dims), c)
    })
}

/// Residual at a frame point, from coordinates through the kernel, and a
/// bound on its roundoff.
fn point_residual(p: [f64; 4], w: f64) -> (f64, f64) {
    let m = DiagonalFrame { p, w }.quadrilateral().metrics();
    let t = edge_terms(&m);
    let scale = [t.e12, t.e23, t.e34, t.e41, t.e13, t.e24].iter().map(|x| x.abs()).sum::<f64>();
    (residual(&m, ResidualPath::Edge), 64.0 * f64::EPSILON * scale)
}

fn encloses(enc: Interval, value: f64, slack: f64) -> bool {
    enc.lo() - slack <= value && value <= enc.hi() + slack
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn elementary_functions_contain_point_values(x in interval(), y in interval(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (s, t) = (point_in(x, u), point_in(y, v));
        prop_assert!((x + y).contains(s + t));
        prop_assert!((x - y).contains(s - t));
        prop_assert!((x * y).contains(s * t));
        prop_assert!(x.sqr().contains(s * s));
        prop_assert!(x.sin().contains(s.sin()));
        prop_assert!(x.cos().contains(s.cos()));
        prop_assert!(x.atan().contains(s.atan()));
        if let Ok(q) = x.checked_div(y) {
            prop_assert!(q.contains(s / t));
        }
        if x.lo() >= 0.0 {
            prop_assert!(x.sqrt().unwrap().contains(s.sqrt()));
        }
        let a = Interval::atan2(x, y);
        prop_assert!(encloses(a, s.atan2(t), 0.0) || (x.contains_zero() && y.hi() <= 0.0));
    }

    #[test]
    fn elementary_functions_are_inclusion_monotone(x in interval(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (a, b) = (point_in(x, u.min(v)), point_in(x, u.max(v)));
        let inner = iv(a, b);
        prop_assert!(inner.sin().is_subset_of(&x.sin()));
        prop_assert!(inner.cos().is_subset_of(&x.cos()));
        prop_assert!(inner.atan().is_subset_of(&x.atan()));
        prop_assert!(inner.sqr().is_subset_of(&x.sqr()));
        prop_assert!((inner * x).is_subset_of(&(x * x)));
    }

    #[test]
    fn residual_enclosures_contain_points(
        (pb, _) in param_box(0.05),
        u in proptest::array::uniform4(0.0f64..1.0),
    ) {
        let x: [f64; 4] = std::array::from_fn(|k| point_in(pb.dims()[k], u[k]));
        let p4 = 1.0 - x[0] - x[1] - x[2];
        prop_assume!(p4 >= 0.05);
        let (value, slack) = point_residual([x[0], x[1], x[2], p4], x[3]);
        let fb = pb.frame_box(0.05).unwrap();
        prop_assert!(encloses(residual_enclosure(&fb, Enclosure::Edge).unwrap(), value, slack));
        prop_assert!(encloses(residual_enclosure(&fb, Enclosure::Factored).unwrap(), value, slack));
        prop_assert!(encloses(centered_residual_enclosure(&pb, 0.05).unwrap(), value, slack));
        prop_assert!(encloses(tight_residual_enclosure(&pb, 0.05).unwrap(), value, slack));
    }

    #[test]
    fn metric_enclosures_contain_points(
        (pb, c) in param_box(0.1),
    ) {
        let p = [c[0], c[1], c[2], 1.0 - c[0] - c[1] - c[2]];
        prop_assume!(p[3] >= 0.1);
        let m = DiagonalFrame { p, w: c[3] }.quadrilateral().metrics();
        let e = frame_metrics(pb.frame_box(0.1).unwrap().p, pb.w).unwrap();
        let tol = 1e-12;
        for (enc, v) in [(e.a, m.a), (e.b, m.b), (e.c, m.c), (e.d, m.d), (e.e, m.e), (e.f, m.f), (e.x, m.x), (e.y, m.y), (e.w, m.w), (e.wp, m.wp)] {
            prop_assert!(encloses(enc, v, tol), "{enc:?} {v}");
        }
        for i in 0..4 {
            prop_assert!(encloses(e.alpha[i], m.alpha[i], tol));
            prop_assert!(encloses(e.beta[i], m.beta[i], tol));
        }
    }

    #[test]
    fn natural_enclosures_are_inclusion_monotone(
        (pb, _) in param_box(0.05),
        cut in proptest::array::uniform4((0.0f64..1.0, 0.0f64..1.0)),
    ) {
        let outer = pb.frame_box(0.05).unwrap();
        let shrink = |x: Interval, (s, t): (f64, f64)| iv(point_in(x, s.min(t)), point_in(x, s.max(t)));
        let inner = FrameBox {
            p: std::array::from_fn(|k| if k < 3 { shrink(outer.p[k], cut[k]) } else { outer.p[3] }),
            w: shrink(outer.w, cut[3]),
        };
        prop_assert!(inner.is_subset_of(&outer));
        for path in [Enclosure::Edge, Enclosure::Factored] {
            let a = residual_enclosure(&inner, path).unwrap();
            let b = residual_enclosure(&outer, path).unwrap();
            prop_assert!(a.is_subset_of(&b), "{path:?}: {a:?} not in {b:?}");
        }
    }
}

#[test]
fn enclosures_shrink_onto_the_point_value() {
    let c = [0.3, 0.2, 0.25, 1.3];
    let p4 = 1.0 - c[0] - c[1] - c[2];
    let (value, _) = point_residual([c[0], c[1], c[2], p4], c[3]);
    let mut last = f64::INFINITY;
    for k in 1..8 {
        let h = 10f64.powi(-k);
        let pb = ParamBox::from_dims(std::array::from_fn(|i| iv(c[i] - h, c[i] + h)));
        let enc = tight_residual_enclosure(&pb, 0.05).unwrap();
        assert!(enc.contains(value));
        assert!(enc.width() < last);
        last = enc.width();
        // Width proportional to the box: no wrapping blow-up.
        if k >= 3 {
            assert!(enc.width() / h < 0.1, "{k}: {}", enc.width());
        }
    }
}
