//! Batch auditing of every identity and inequality in the kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::*;
use crate::geometry::{derive_seed, sample, GeometryError, Quadrilateral, SampleStrategy};
use crate::json::{f17, f17_opt};

/// Minimum ratio between the rejected sign variant's error and the
/// tolerance for a sample to count as deciding the sign.
pub const SIGN_GAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    ResidualPaths,
    XGroup,
    YGroup,
    WGroup,
    PairTerms,
    GroupPartition,
    P1Closed,
    P2Closed,
    CosineTriple,
    SignResolution,
    SkewBound1,
    SkewBound2,
    SkewBound3,
    CoreInequality,
    ClosingChain,
    ResidualNonneg,
}

impl CheckId {
    pub const ALL: [CheckId; 16] = [
        CheckId::ResidualPaths,
        CheckId::XGroup,
        CheckId::YGroup,
        CheckId::WGroup,
        CheckId::PairTerms,
        CheckId::GroupPartition,
        CheckId::P1Closed,
        CheckId::P2Closed,
        CheckId::CosineTriple,
        CheckId::SignResolution,
        CheckId::SkewBound1,
        CheckId::SkewBound2,
        CheckId::SkewBound3,
        CheckId::CoreInequality,
        CheckId::ClosingChain,
        CheckId::ResidualNonneg,
    ];

    pub fn is_inequality(self) -> bool {
        matches!(
            self,
            CheckId::SkewBound1
                | CheckId::SkewBound2
                | CheckId::SkewBound3
                | CheckId::CoreInequality
                | CheckId::ClosingChain
                | CheckId::ResidualNonneg
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignResolution {
    Plus,
    Minus,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: CheckId,
    #[serde(with = "f17_opt")]
    pub max_err: Option<f64>,
    #[serde(with = "f17_opt")]
    pub min_slack: Option<f64>,
    /// Samples on which the check applied.
    pub evaluated: u64,
    /// Batch index of the sample with the largest error or smallest slack.
    pub worst_sample: Option<u64>,
    pub pass: bool,
}

/// Per-sample sign adjudication counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignTally {
    pub plus: u64,
    pub minus: u64,
    pub undecided: u64,
    /// Smallest error of the rejected variant over deciding samples, in
    /// units of the tolerance.
    #[serde(with = "f17_opt")]
    pub min_gap: Option<f64>,
    /// Median of the `abcdef`-normalized disagreement between the variants.
    #[serde(with = "f17_opt")]
    pub median_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub version: String,
    pub seed: Option<u64>,
    pub samples: u64,
    #[serde(with = "f17_opt")]
    pub margin: Option<f64>,
    pub strategy: Option<SampleStrategy>,
    #[serde(with = "f17")]
    pub tol: f64,
    #[serde(with = "f17")]
    pub slack_tol: f64,
    pub checks: Vec<CheckRecord>,
    pub sign_resolution: SignResolution,
    pub sign_tally: SignTally,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, id: CheckId) -> &CheckRecord {
        self.checks.iter().find(|c| c.id == id).expect("every check is reported")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchConfig {
    pub seed: u64,
    pub samples: u64,
    pub margin: f64,
    pub strategy: SampleStrategy,
    pub tol: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self { seed: 1, samples: 1000, margin: 0.01, strategy: SampleStrategy::FrameUniform, tol: 1e-9 }
    }
}

/// Running worst value of one check. `value` is an error (maximized) for
/// identities and a slack (minimized) for inequalities.
#[derive(Debug, Clone, Copy)]
struct Worst {
    value: f64,
    index: u64,
    count: u64,
}

impl Worst {
    fn merge(a: Option<Worst>, b: Option<Worst>, maximize: bool) -> Option<Worst> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                let count = a.count + b.count;
                // Ties go to the smaller index so merging order never matters.
                let a_wins = match a.value.total_cmp(&b.value) {
                    std::cmp::Ordering::Equal => a.index < b.index,
                    o => (o == std::cmp::Ordering::Greater) == maximize,
                };
                let w = if a_wins { a } else { b };
                Some(Worst { count, ..w })
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    checks: [Option<Worst>; 16],
    /// P1 and P2 closed-form errors under each sign variant.
    parts: [[Option<Worst>; 2]; 2],
    sign_err: [Option<Worst>; 2],
    tally: SignTally,
    gaps: Vec<f64>,
    samples: u64,
}

impl Accumulator {
    fn record(&mut self, id: CheckId, value: f64, index: u64) {
        let w = Some(Worst { value, index, count: 1 });
        let slot = &mut self.checks[id.index()];
        *slot = Worst::merge(*slot, w, !id.is_inequality());
    }

    fn observe(&mut self, m: &QuadMetrics, index: u64, tol: f64) {
        self.samples += 1;
        let scale = m.abcdef();
        let rel = |x: f64, y: f64| (x - y).abs() / scale;

        let edge = residual(m, ResidualPath::Edge);
        let expanded = residual(m, ResidualPath::Expanded);
        let factored = residual(m, ResidualPath::Factored);
        self.record(CheckId::ResidualPaths, rel(edge, expanded).max(rel(edge, factored)), index);

        let mut raw_total = 0.0;
        for (g, id) in TermGroup::SINGLE.into_iter().zip([CheckId::XGroup, CheckId::YGroup, CheckId::WGroup]) {
            let raw = single_group_sum(m, g, Form::Raw);
            raw_total += raw;
            self.record(id, rel(raw, single_group_sum(m, g, Form::Closed)), index);
        }
        let pair_raw = pair_terms_sum(m, Form::Raw);
        raw_total += pair_raw;
        self.record(CheckId::PairTerms, rel(pair_raw, pair_terms_sum(m, Form::Closed)), index);
        self.record(CheckId::GroupPartition, rel(raw_total, expanded), index);

        let err_plus = rel(pair_raw, pair_terms_sine_form(m, SineSign::Plus));
        let err_minus = rel(pair_raw, pair_terms_sine_form(m, SineSign::Minus));
        for (k, (err, other)) in [(err_plus, err_minus), (err_minus, err_plus)].into_iter().enumerate() {
            let w = Some(Worst { value: err, index, count: 1 });
            self.sign_err[k] = Worst::merge(self.sign_err[k], w, true);
            if err <= tol && other >= SIGN_GAP * tol {
                if k == 0 {
                    self.tally.plus += 1;
                } else {
                    self.tally.minus += 1;
                }
                let gap = other / tol;
                self.tally.min_gap = Some(self.tally.min_gap.map_or(gap, |g| g.min(gap)));
            }
        }
        if !(err_plus <= tol && err_minus >= SIGN_GAP * tol) && !(err_minus <= tol && err_plus >= SIGN_GAP * tol) {
            self.tally.undecided += 1;
        }
        self.gaps.push((err_plus - err_minus).abs());

        for (k, sign) in [SineSign::Plus, SineSign::Minus].into_iter().enumerate() {
            let parts = angular_parts(m, sign);
            for (j, err) in [(parts.p1_value - parts.p1_closed).abs(), (parts.p2_value - parts.p2_closed).abs()]
                .into_iter()
                .enumerate()
            {
                let w = Some(Worst { value: err, index, count: 1 });
                self.parts[j][k] = Worst::merge(self.parts[j][k], w, true);
            }
        }

        let [u, v, w] = derived_triple(m);
        let (lhs, rhs) = cosine_triple(u, v, w);
        self.record(CheckId::CosineTriple, (lhs - rhs).abs(), index);

        for (bound, id) in SkewBound::ALL.into_iter().zip([CheckId::SkewBound1, CheckId::SkewBound2, CheckId::SkewBound3]) {
            self.record(id, skew_bound_slack(m, bound), index);
        }
        if core_hypotheses(m) {
            self.record(CheckId::CoreInequality, core_inequality_value(m), index);
            self.record(CheckId::ClosingChain, closing_chain_slack(m), index);
        }
        self.record(CheckId::ResidualNonneg, edge / scale, index);
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        for (id, slot) in CheckId::ALL.iter().zip(self.checks.iter_mut()) {
            *slot = Worst::merge(*slot, other.checks[id.index()], !id.is_inequality());
        }
        for j in 0..2 {
            for k in 0..2 {
                self.parts[j][k] = Worst::merge(self.parts[j][k], other.parts[j][k], true);
            }
            self.sign_err[j] = Worst::merge(self.sign_err[j], other.sign_err[j], true);
        }
        self.tally.plus += other.tally.plus;
        self.tally.minus += other.tally.minus;
        self.tally.undecided += other.tally.undecided;
        self.tally.min_gap = match (self.tally.min_gap, other.tally.min_gap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.gaps.extend(other.gaps);
        self.samples += other.samples;
        self
    }

    fn finish(mut self, tol: f64) -> (Vec<CheckRecord>, SignResolution, SignTally) {
        let resolution = match (self.tally.plus, self.tally.minus, self.sign_err) {
            (p, 0, [Some(e), _]) if p > 0 && e.value <= tol => SignResolution::Plus,
            (0, m, [_, Some(e)]) if m > 0 && e.value <= tol => SignResolution::Minus,
            _ => SignResolution::Unresolved,
        };
        if !self.gaps.is_empty() {
            self.gaps.sort_by(f64::total_cmp);
            self.tally.median_gap = Some(self.gaps[self.gaps.len() / 2]);
        }

        // Downstream P1/P2 checks use the resolved sign; when unresolved the
        // worse of the two variants is reported.
        let pick = |pair: [Option<Worst>; 2]| match resolution {
            SignResolution::Plus => pair[0],
            SignResolution::Minus => pair[1],
            SignResolution::Unresolved => Worst::merge(pair[0], pair[1], true),
        };
        self.checks[CheckId::P1Closed.index()] = pick(self.parts[0]);
        self.checks[CheckId::P2Closed.index()] = pick(self.parts[1]);
        self.checks[CheckId::SignResolution.index()] = pick(self.sign_err);

        let records = CheckId::ALL
            .iter()
            .map(|&id| {
                let worst = self.checks[id.index()];
                let value = worst.map(|w| w.value);
                let (max_err, min_slack, pass) = if id.is_inequality() {
                    (None, value, value.is_none_or(|s| s >= -SLACK_TOL))
                } else {
                    let mut pass = value.is_none_or(|e| e <= tol);
                    if id == CheckId::SignResolution {
                        pass &= resolution != SignResolution::Unresolved;
                    }
                    (value, None, pass)
                };
                CheckRecord {
                    id,
                    max_err,
                    min_slack,
                    evaluated: worst.map_or(0, |w| w.count),
                    worst_sample: worst.map(|w| w.index),
                    pass,
                }
            })
            .collect();
        (records, resolution, self.tally)
    }
}

/// Audits a single quadrilateral.
pub fn audit(q: &Quadrilateral, tol: f64) -> AuditReport {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut acc = Accumulator::default();
    acc.observe(&q.metrics(), 0, tol);
    let (checks, sign_resolution, sign_tally) = acc.finish(tol);
    AuditReport {
        version: crate::VERSION.to_string(),
        seed: None,
        samples: 1,
        margin: None,
        strategy: None,
        tol,
        slack_tol: SLACK_TOL,
        checks,
        sign_resolution,
        sign_tally,
    }
}

/// Audits `cfg.samples` seeded quadrilaterals in parallel. The report does
/// not depend on thread scheduling.
pub fn audit_batch(cfg: &BatchConfig) -> Result<AuditReport, GeometryError> {
    assert!(cfg.tol > 0.0, "tolerance must be positive");
    let acc = (0..cfg.samples)
        .into_par_iter()
        .try_fold(Accumulator::default, |mut acc, i| {
            let q = sample(derive_seed(cfg.seed, i), cfg.strategy, cfg.margin)?;
            acc.observe(&q.metrics(), i, cfg.tol);
            Ok::<_, GeometryError>(acc)
        })
        .try_reduce(Accumulator::default, |a, b| Ok(a.merge(b)))?;
    let (checks, sign_resolution, sign_tally) = acc.finish(cfg.tol);
    Ok(AuditReport {
        version: crate::VERSION.to_string(),
        seed: Some(cfg.seed),
        samples: cfg.samples,
        margin: Some(cfg.margin),
        strategy: Some(cfg.strategy),
        tol: cfg.tol,
        slack_tol: SLACK_TOL,
        checks,
        sign_resolution,
        sign_tally,
    })
}
