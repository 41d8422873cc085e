use quadineq::certifier::{certify, verify_certificate, BoxRecord, CertError, Certificate, OutsideBox};
use quadineq::geometry::DiagonalFrame;
use quadineq::kernel::{edge_terms, residual, ResidualPath};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// One shared certificate: quick to build, large enough to have structure.
fn cert() -> &'static Certificate {
    static CERT: OnceLock<Certificate> = OnceLock::new();
    CERT.get_or_init(|| certify(0.18, 0.0, 100_000).unwrap())
}

#[test]
fn replay_accepts_a_fresh_certificate() {
    let c = cert();
    assert!(c.complete);
    assert!(c.c_star > 0.0);
    assert!(c.c_star <= c.upper_bound);
    assert!(!c.outside.is_empty());
    assert_eq!(c.box_count, c.leaves.len() + c.outside.len());
    assert!(verify_certificate(c).unwrap());
}

#[test]
fn json_round_trip_is_exact() {
    let c = cert();
    let text = c.to_json();
    let back = Certificate::from_json(&text).unwrap();
    assert_eq!(&back, c);
    assert_eq!(back.to_json(), text);
    assert!(text.contains("\"gauge\": \"psum1\""));
}

#[test]
fn inflated_bound_is_rejected() {
    let mut c = cert().clone();
    c.leaves[7].lower_bound *= 10.0;
    assert!(!verify_certificate(&c).unwrap());
}

#[test]
fn missing_leaf_is_rejected() {
    let mut c = cert().clone();
    c.leaves.remove(c.leaves.len() / 2);
    c.box_count -= 1;
    assert!(!verify_certificate(&c).unwrap());
}

#[test]
fn duplicated_leaf_is_rejected() {
    let mut c = cert().clone();
    let dup = c.leaves[3];
    c.leaves.push(dup);
    c.box_count += 1;
    assert!(!verify_certificate(&c).unwrap());
}

#[test]
fn foreign_box_is_rejected() {
    let mut c = cert().clone();
    // Shift a leaf so it straddles a split line.
    let l = &mut c.leaves[5];
    let shift = 0.3 * l.bx.p1.width();
    let moved = quadineq::interval::Interval::new(l.bx.p1.lo() + shift, l.bx.p1.hi() + shift).unwrap();
    let pb = quadineq::interval::ParamBox { p1: moved, ..l.bx.param_box() };
    l.bx = BoxRecord::new(&pb);
    assert!(!verify_certificate(&c).unwrap());
}

#[test]
fn false_outside_claim_is_rejected() {
    let mut c = cert().clone();
    let leaf = c.leaves.remove(0);
    c.outside.push(OutsideBox { bx: leaf.bx });
    c.c_star = c.leaves.iter().map(|l| l.lower_bound).fold(f64::INFINITY, f64::min);
    assert!(!verify_certificate(&c).unwrap());
}

#[test]
fn wrong_global_bound_is_rejected() {
    let mut c = cert().clone();
    c.c_star *= 2.0;
    assert!(!verify_certificate(&c).unwrap());
}

#[test]
fn incomplete_claimed_complete_is_rejected() {
    let mut c = certify(0.18, 0.0, 50).unwrap();
    assert!(!c.complete);
    assert!(verify_certificate(&c).unwrap());
    c.complete = true;
    assert!(!verify_certificate(&c).unwrap());
}

#[test]
fn malformed_documents_are_errors() {
    let mut c = cert().clone();
    c.gauge = "unit-diameter".into();
    assert!(matches!(verify_certificate(&c), Err(CertError::Malformed(_))));
    let mut c = cert().clone();
    c.leaves.clear();
    assert!(matches!(verify_certificate(&c), Err(CertError::Malformed(_))));
    assert!(matches!(Certificate::from_json("{\"version\": 1}"), Err(CertError::Malformed(_))));
    let bad_interval = cert().to_json().replacen("\"p1\": [", "\"p1\": [9.0, ", 1);
    assert!(Certificate::from_json(&bad_interval).is_err());
}

#[test]
fn certificates_do_not_depend_on_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| certify(0.19, 0.0, 100_000).unwrap())
    };
    let one = run(1);
    let many = run(4);
    assert_eq!(one.to_json(), many.to_json());
}

#[test]
fn leaf_bounds_hold_at_sampled_points() {
    let c = cert();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 1000 {
        let leaf = &c.leaves[rng.gen_range(0..c.leaves.len())];
        let d = leaf.bx.param_box().dims();
        let x: [f64; 4] = std::array::from_fn(|k| rng.gen_range(d[k].lo()..=d[k].hi()));
        let p4 = 1.0 - x[0] - x[1] - x[2];
        if p4 < c.margin {
            continue;
        }
        let m = DiagonalFrame { p: [x[0], x[1], x[2], p4], w: x[3] }.quadrilateral().metrics();
        let t = edge_terms(&m);
        let slack = 64.0 * f64::EPSILON * [t.e12, t.e23, t.e34, t.e41, t.e13, t.e24].iter().map(|v| v.abs()).sum::<f64>();
        let value = residual(&m, ResidualPath::Edge);
        assert!(value + slack >= leaf.lower_bound, "{value} < {}", leaf.lower_bound);
        checked += 1;
    }
}

#[test]
fn smaller_margin_never_raises_the_bound() {
    let margins = [0.2, 0.18, 0.15, 0.12];
    let bounds: Vec<f64> = margins.iter().map(|&m| certify(m, 0.0, 1_000_000).unwrap()).map(|c| {
        assert!(c.complete);
        c.c_star
    }).collect();
    assert!(bounds.windows(2).all(|w| w[1] <= w[0]), "{bounds:?}");
}

#[test]
fn positive_target_is_met_when_complete() {
    let c = certify(0.2, 1e-4, 100_000).unwrap();
    assert!(c.complete);
    assert!(c.leaves.iter().all(|l| l.lower_bound >= 1e-4));
    assert!(verify_certificate(&c).unwrap());
}
