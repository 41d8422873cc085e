//! Multi-start Nelder–Mead search for small (or negative) values of the
//! normalized residual `residual / abcdef` over gauge-normalized frames.
//!
//! The search runs in the free coordinates `(p1, p2, p3, w)` with
//! `p4 = 1 - p1 - p2 - p3`. Every trial point is projected onto the feasible
//! set `{p_i >= margin, sum p = 1, margin pi <= w <= (1 - margin) pi}` before
//! evaluation, so the simplex never leaves it. Each start draws its own
//! random stream from `(seed, start)`, which makes results independent of
//! how starts are scheduled across threads.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{derive_seed, sample_frame, DiagonalFrame};
use crate::kernel::{audit, normalized_residual, CheckId};

/// Values below this are flagged as counterexample candidates.
pub const CANDIDATE_THRESHOLD: f64 = -1e-12;
/// Tolerance of the re-audit applied to every candidate.
pub const REAUDIT_TOL: f64 = 1e-9;
pub const CANDIDATE_FLAG: &str = "COUNTEREXAMPLE-CANDIDATE";

pub const MIN_MARGIN: f64 = 1e-6;
pub const MAX_MARGIN: f64 = 0.2;

/// Initial simplex edge as a fraction of each coordinate's range.
const INITIAL_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("invalid search request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Trajectory {
    pub start: usize,
    pub start_frame: DiagonalFrame,
    #[serde(with = "crate::json::f17")]
    pub start_value: f64,
    pub end_frame: DiagonalFrame,
    #[serde(with = "crate::json::f17")]
    pub end_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best value after each iteration; nonincreasing.
    #[serde(with = "crate::json::f17_vec")]
    pub best_so_far: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Candidate {
    pub flag: String,
    pub start: usize,
    pub frame: DiagonalFrame,
    #[serde(with = "crate::json::f17")]
    pub value: f64,
    /// Whether the full audit at [`REAUDIT_TOL`] also reports a negative
    /// residual with every identity intact.
    pub confirmed_by_audit: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SearchResult {
    pub version: String,
    pub seed: u64,
    pub starts: usize,
    #[serde(with = "crate::json::f17")]
    pub margin: f64,
    pub budget: usize,
    #[serde(with = "crate::json::f17_vec")]
    pub margin_schedule: Vec<f64>,
    #[serde(with = "crate::json::f17")]
    pub best_residual: f64,
    pub best_frame: DiagonalFrame,
    pub best_start: usize,
    pub candidates: Vec<Candidate>,
    pub trajectories: Vec<Trajectory>,
}

impl SearchResult {
    pub fn has_candidates(&self) -> bool {
        !self.candidates.is_empty()
    }

    /// One row per iteration of every start: `start,iteration,best`.
    pub fn trajectories_csv(&self) -> String {
        let mut out = String::from("start,iteration,best\n");
        for t in &self.trajectories {
            for (i, v) in t.best_so_far.iter().enumerate() {
                writeln!(out, "{},{},{}", t.start, i, crate::json::format_f17(*v)).expect("string write");
            }
        }
        out
    }
}

/// The objective: `residual / abcdef` of the frame's quadrilateral.
pub fn objective(frame: &DiagonalFrame) -> f64 {
    normalized_residual(&frame.quadrilateral().metrics())
}

/// Clamp-and-renormalize onto the feasible set. Feasible points are fixed.
pub fn project(x: [f64; 4], margin: f64) -> DiagonalFrame {
    let raw = [x[0], x[1], x[2], 1.0 - x[0] - x[1] - x[2]];
    let excess = raw.map(|p| if p.is_finite() { (p - margin).max(0.0) } else { 0.0 });
    let total: f64 = excess.iter().sum();
    let free = 1.0 - 4.0 * margin;
    let p = if total > 0.0 { excess.map(|q| margin + free * q / total) } else { [0.25; 4] };
    let w = if x[3].is_finite() { x[3] } else { PI / 2.0 };
    DiagonalFrame { p, w: w.clamp(margin * PI, (1.0 - margin) * PI) }
}

fn coords(f: &DiagonalFrame) -> [f64; 4] {
    [f.p[0], f.p[1], f.p[2], f.w]
}

fn check_request(starts: usize, margin: f64) -> Result<(), SearchError> {
    if starts < 1 {
        return Err(SearchError::InvalidRequest("starts must be at least 1".into()));
    }
    if !(MIN_MARGIN..=MAX_MARGIN).contains(&margin) {
        return Err(SearchError::InvalidRequest(format!("margin {margin} outside [{MIN_MARGIN}, {MAX_MARGIN}]")));
    }
    Ok(())
}

struct Run {
    trajectory: Trajectory,
    candidates: Vec<Candidate>,
}

struct Evaluator {
    margin: f64,
    budget: usize,
    used: usize,
    start: usize,
    candidates: Vec<Candidate>,
}

impl Evaluator {
    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    fn eval(&mut self, x: [f64; 4]) -> (DiagonalFrame, f64) {
        self.used += 1;
        let frame = project(x, self.margin);
        let v = objective(&frame);
        if v < CANDIDATE_THRESHOLD {
            self.candidates.push(candidate(self.start, frame, v));
        }
        (frame, v)
    }
}

fn candidate(start: usize, frame: DiagonalFrame, value: f64) -> Candidate {
    let report = audit(&frame.quadrilateral(), REAUDIT_TOL);
    let identities_hold = report.checks.iter().filter(|c| !c.id.is_inequality()).all(|c| c.pass);
    let negative = !report.check(CheckId::ResidualNonneg).pass;
    Candidate {
        flag: CANDIDATE_FLAG.to_string(),
        start,
        frame,
        value,
        confirmed_by_audit: identities_hold && negative,
    }
}

/// Nelder–Mead from `x0` with standard coefficients, restarted around the
/// incumbent whenever the simplex collapses, until `budget` evaluations
/// beyond the start point are spent.
fn descend(start: usize, x0: DiagonalFrame, margin: f64, budget: usize) -> Run {
    let mut ev = Evaluator { margin, budget, used: 0, start, candidates: Vec::new() };
    let first = objective(&x0);
    if first < CANDIDATE_THRESHOLD {
        ev.candidates.push(candidate(start, x0, first));
    }
    let mut best = (x0, first);
    let mut history = Vec::new();
    let mut iterations = 0;
    let steps = [
        INITIAL_STEP * (1.0 - 4.0 * margin),
        INITIAL_STEP * (1.0 - 4.0 * margin),
        INITIAL_STEP * (1.0 - 4.0 * margin),
        INITIAL_STEP * PI * (1.0 - 2.0 * margin),
    ];

    'restart: while !ev.exhausted() {
        let base = coords(&best.0);
        let mut simplex: Vec<(DiagonalFrame, f64)> = vec![best];
        for k in 0..4 {
            if ev.exhausted() {
                break 'restart;
            }
            // Step inwards if the outward step is clamped away.
            let mut x = base;
            x[k] += steps[k];
            let mut trial = ev.eval(x);
            if coords(&trial.0) == base && !ev.exhausted() {
                x[k] = base[k] - steps[k];
                trial = ev.eval(x);
            }
            simplex.push(trial);
        }

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 < best.1 {
                best = simplex[0];
            }
            iterations += 1;
            history.push(best.1);
            if collapsed(&simplex) {
                continue 'restart;
            }
            if ev.exhausted() {
                break 'restart;
            }

            let n = 4;
            let mut centroid = [0.0; 4];
            for (f, _) in &simplex[..n] {
                let x = coords(f);
                for k in 0..4 {
                    centroid[k] += x[k] / n as f64;
                }
            }
            let worst = simplex[n];
            let wx = coords(&worst.0);
            let along = |t: f64| -> [f64; 4] { std::array::from_fn(|k| centroid[k] + t * (wx[k] - centroid[k])) };

            let reflected = ev.eval(along(-1.0));
            if reflected.1 < simplex[0].1 {
                if ev.exhausted() {
                    simplex[n] = reflected;
                    continue;
                }
                let expanded = ev.eval(along(-2.0));
                simplex[n] = if expanded.1 < reflected.1 { expanded } else { reflected };
                continue;
            }
            if reflected.1 < simplex[n - 1].1 {
                simplex[n] = reflected;
                continue;
            }
            if ev.exhausted() {
                continue;
            }
            let t = if reflected.1 < worst.1 { -0.5 } else { 0.5 };
            let contracted = ev.eval(along(t));
            if contracted.1 < worst.1.min(reflected.1) {
                simplex[n] = contracted;
                continue;
            }
            // Shrink towards the best vertex.
            let anchor = coords(&simplex[0].0);
            for vertex in simplex.iter_mut().skip(1) {
                if ev.exhausted() {
                    break;
                }
                let vx = coords(&vertex.0);
                *vertex = ev.eval(std::array::from_fn(|k| anchor[k] + 0.5 * (vx[k] - anchor[k])));
            }
        }
    }

    Run {
        trajectory: Trajectory {
            start,
            start_frame: x0,
            start_value: first,
            end_frame: best.0,
            end_value: best.1,
            iterations,
            evaluations: ev.used,
            best_so_far: history,
        },
        candidates: ev.candidates,
    }
}

fn collapsed(simplex: &[(DiagonalFrame, f64)]) -> bool {
    let (lo, hi) = (simplex[0].1, simplex[simplex.len() - 1].1);
    let spread = hi - lo;
    let anchor = coords(&simplex[0].0);
    let diameter = simplex
        .iter()
        .skip(1)
        .flat_map(|(f, _)| {
            let x = coords(f);
            (0..4).map(move |k| (x[k] - anchor[k]).abs())
        })
        .fold(0.0, f64::max);
    diameter < 1e-13 || (spread <= 1e-15 * lo.abs().max(1e-300) && diameter < 1e-9)
}

fn start_frame(seed: u64, start: usize, margin: f64) -> DiagonalFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, start as u64));
    let f = sample_frame(&mut rng, margin).expect("margin checked").normalized();
    project(coords(&f), margin)
}

fn search_from(
    seed: u64,
    starts: usize,
    margin: f64,
    budget: usize,
    warm: Option<DiagonalFrame>,
    schedule: Vec<f64>,
) -> SearchResult {
    let runs: Vec<Run> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let x0 = match (s, warm) {
                (0, Some(f)) => project(coords(&f), margin),
                _ => start_frame(seed, s, margin),
            };
            descend(s, x0, margin, budget)
        })
        .collect();

    let mut best_start = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.trajectory.end_value < runs[best_start].trajectory.end_value {
            best_start = i;
        }
    }
    let best = &runs[best_start].trajectory;
    SearchResult {
        version: crate::VERSION.to_string(),
        seed,
        starts,
        margin,
        budget,
        margin_schedule: schedule,
        best_residual: best.end_value,
        best_frame: best.end_frame,
        best_start,
        candidates: runs.iter().flat_map(|r| r.candidates.iter().cloned()).collect(),
        trajectories: runs.into_iter().map(|r| r.trajectory).collect(),
    }
}

/// Runs `starts` independent descents of at most `budget` evaluations each
/// (not counting the start point) and reports the smallest normalized
/// residual found.
pub fn minimize_residual(seed: u64, starts: usize, margin: f64, budget: usize) -> Result<SearchResult, SearchError> {
    check_request(starts, margin)?;
    Ok(search_from(seed, starts, margin, budget, None, vec![margin]))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrendStep {
    #[serde(with = "crate::json::f17")]
    pub margin: f64,
    #[serde(with = "crate::json::f17")]
    pub best_residual: f64,
    pub best_frame: DiagonalFrame,
    pub candidates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrendReport {
    pub version: String,
    pub seed: u64,
    pub starts: usize,
    pub budget: usize,
    pub steps: Vec<TrendStep>,
    /// Best residual strictly decreases along the schedule.
    pub strictly_decreasing: bool,
    pub results: Vec<SearchResult>,
}

/// Searches each margin of a decreasing schedule in turn. Start 0 of every
/// stage after the first is the previous stage's best frame; the domains are
/// nested, so the best value never increases along the schedule.
pub fn margin_trend(seed: u64, starts: usize, margins: &[f64], budget: usize) -> Result<TrendReport, SearchError> {
    if margins.is_empty() {
        return Err(SearchError::InvalidRequest("empty margin schedule".into()));
    }
    if margins.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SearchError::InvalidRequest("margin schedule must strictly decrease".into()));
    }
    for &m in margins {
        check_request(starts, m)?;
    }
    let mut results: Vec<SearchResult> = Vec::new();
    for &m in margins {
        let warm = results.last().map(|r| r.best_frame);
        results.push(search_from(seed, starts, m, budget, warm, margins.to_vec()));
    }
    let steps: Vec<TrendStep> = results
        .iter()
        .map(|r| TrendStep {
            margin: r.margin,
            best_residual: r.best_residual,
            best_frame: r.best_frame,
            candidates: r.candidates.len(),
        })
        .collect();
    let strictly_decreasing = steps.windows(2).all(|w| w[1].best_residual < w[0].best_residual);
    Ok(TrendReport { version: crate::VERSION.to_string(), seed, starts, budget, steps, strictly_decreasing, results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_fixes_feasible_points() {
        let f = DiagonalFrame { p: [0.1, 0.2, 0.3, 0.4], w: 1.0 };
        let g = project(coords(&f), 0.05);
        for k in 0..4 {
            assert!((f.p[k] - g.p[k]).abs() < 1e-15);
        }
        assert_eq!(g.w, 1.0);
    }

    #[test]
    fn projection_lands_in_the_domain() {
        let m = 0.01;
        for x in [[2.0, -1.0, 0.5, 9.0], [0.0, 0.0, 0.0, -3.0], [f64::NAN, 0.3, 0.3, f64::INFINITY]] {
            let f = project(x, m);
            assert!(f.p.iter().all(|&p| p >= m * (1.0 - 1e-12)));
            assert!((f.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(f.w >= m * PI && f.w <= (1.0 - m) * PI);
        }
    }

    #[test]
    fn zero_budget_returns_the_start_value() {
        let r = minimize_residual(3, 1, 0.05, 0).unwrap();
        let t = &r.trajectories[0];
        assert_eq!(t.evaluations, 0);
        assert_eq!(t.end_frame, t.start_frame);
        assert_eq!(r.best_residual, objective(&t.start_frame));
    }

    #[test]
    fn best_so_far_is_monotone_and_matches_kernel() {
        let r = minimize_residual(11, 4, 0.05, 400).unwrap();
        for t in &r.trajectories {
            assert!(t.best_so_far.windows(2).all(|w| w[1] <= w[0]));
            assert!(t.evaluations <= 400);
            assert!(t.end_value <= t.start_value);
        }
        assert!((objective(&r.best_frame) - r.best_residual).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(minimize_residual(1, 0, 0.05, 10).is_err());
        assert!(minimize_residual(1, 1, 0.3, 10).is_err());
        assert!(minimize_residual(1, 1, 1e-7, 10).is_err());
        assert!(margin_trend(1, 1, &[0.01, 0.05], 10).is_err());
    }

    #[test]
    fn csv_has_one_row_per_iteration() {
        let r = minimize_residual(5, 2, 0.05, 50).unwrap();
        let rows = r.trajectories_csv().lines().count() - 1;
        assert_eq!(rows, r.trajectories.iter().map(|t| t.best_so_far.len()).sum::<usize>());
    }
}
