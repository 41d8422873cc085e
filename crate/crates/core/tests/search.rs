use quadineq::search::{margin_trend, minimize_residual, objective, project, SearchResult};

#[test]
fn moderate_margin_finds_no_candidate() {
    let r = minimize_residual(7, 64, 0.05, 2000).unwrap();
    assert!(r.best_residual > 0.0);
    assert!(!r.has_candidates());
    assert_eq!(r.trajectories.len(), 64);
    assert!((objective(&r.best_frame) - r.best_residual).abs() <= 1e-12);
}

#[test]
fn results_are_deterministic_per_seed() {
    let a = minimize_residual(3, 16, 0.01, 500).unwrap();
    let b = minimize_residual(3, 16, 0.01, 500).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = minimize_residual(4, 16, 0.01, 500).unwrap();
    assert_ne!(a.trajectories[0].start_frame, c.trajectories[0].start_frame);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| minimize_residual(5, 12, 0.02, 300).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn starts_are_independent_of_the_start_count() {
    let few = minimize_residual(9, 3, 0.02, 200).unwrap();
    let many = minimize_residual(9, 8, 0.02, 200).unwrap();
    assert_eq!(few.trajectories[..], many.trajectories[..3]);
}

#[test]
fn best_frames_stay_feasible() {
    let m = 0.01;
    let r = minimize_residual(2, 8, m, 1000).unwrap();
    for t in &r.trajectories {
        let f = t.end_frame;
        assert!(f.p.iter().all(|&p| p >= m * (1.0 - 1e-12)));
        assert!((f.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(f.w >= m * std::f64::consts::PI && f.w <= (1.0 - m) * std::f64::consts::PI);
        let g = project([f.p[0], f.p[1], f.p[2], f.w], m);
        assert!((objective(&g) - t.end_value).abs() <= 1e-12);
    }
}

#[test]
fn trend_decreases_toward_zero() {
    let t = margin_trend(1, 16, &[0.05, 0.005, 0.0005], 2000).unwrap();
    assert!(t.strictly_decreasing);
    let v: Vec<f64> = t.steps.iter().map(|s| s.best_residual).collect();
    assert!(v.iter().all(|&x| x > 0.0));
    assert!(v[2] < 1e-6 * v[0], "{v:?}");
    assert!(t.results.iter().all(|r| !r.has_candidates()));
}

#[test]
fn result_json_round_trips() {
    let r = minimize_residual(1, 2, 0.05, 100).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: SearchResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}
