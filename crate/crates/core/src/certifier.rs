//! Branch-and-bound certification of a positive lower bound on the residual
//! over the compact shape domain
//!
//! ```text
//! { p_i >= margin, p1 + p2 + p3 + p4 = 1 } x { margin pi <= w <= (1 - margin) pi }
//! ```
//!
//! in diagonal-frame coordinates, and an independent replay verifier.
//!
//! Boxes live in the free coordinates `(p1, p2, p3, w)`; `p4` is eliminated.
//! A box is split by bisecting its widest side (`w` measured in units of
//! `pi`, ties to the earlier coordinate). Boxes whose every point has
//! `p4 < margin` are recorded as `outside` and need no bound. The work queue
//! always refines the boxes with the lowest bound first. Children are
//! evaluated in parallel but created, numbered and queued in a fixed order,
//! so the certificate is independent of the thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interval::{frame_edge_residual, tight_residual_enclosure, Interval, IntervalError, ParamBox};

/// Boxes refined per round; parallelism happens within a round.
const BATCH: usize = 256;

/// Leaves must also reach this fraction of the best point value found, so
/// `c_star` is within a fixed factor of the true minimum over the domain.
pub const RELATIVE_GAP: f64 = 0.5;

/// Bisection depth at which the verifier gives up replaying the split tree.
const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertError {
    #[error("invalid certification request: {0}")]
    InvalidRequest(String),
    #[error("enclosure failed on a box inside the domain: {0}")]
    IndeterminateRegion(String),
    #[error("malformed certificate: {0}")]
    Malformed(String),
}

/// A box together with the derived `p4` range, as written to certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRecord {
    pub p1: Interval,
    pub p2: Interval,
    pub p3: Interval,
    pub p4: Interval,
    pub w: Interval,
}

impl BoxRecord {
    pub fn new(b: &ParamBox) -> Self {
        Self { p1: b.p1, p2: b.p2, p3: b.p3, p4: b.p4(), w: b.w }
    }

    pub fn param_box(&self) -> ParamBox {
        ParamBox { p1: self.p1, p2: self.p2, p3: self.p3, w: self.w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leaf {
    #[serde(rename = "box")]
    pub bx: BoxRecord,
    #[serde(with = "crate::json::f17")]
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutsideBox {
    #[serde(rename = "box")]
    pub bx: BoxRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub version: String,
    #[serde(with = "crate::json::f17")]
    pub margin: f64,
    pub gauge: String,
    #[serde(with = "crate::json::f17")]
    pub target: f64,
    pub max_boxes: usize,
    pub complete: bool,
    #[serde(with = "crate::json::f17")]
    pub c_star: f64,
    /// Smallest residual seen at a sample point of the domain; the true
    /// minimum lies in `[c_star, upper_bound]` when complete.
    #[serde(with = "crate::json::f17")]
    pub upper_bound: f64,
    pub box_count: usize,
    pub leaves: Vec<Leaf>,
    pub outside: Vec<OutsideBox>,
}

pub const GAUGE: &str = "psum1";

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate bounds are finite")
    }

    pub fn from_json(s: &str) -> Result<Self, CertError> {
        serde_json::from_str(s).map_err(|e| CertError::Malformed(e.to_string()))
    }
}

fn enclose(b: &ParamBox, margin: f64) -> Result<f64, CertError> {
    let lo = tight_residual_enclosure(b, margin).map_err(|e: IntervalError| CertError::IndeterminateRegion(e.to_string()))?.lo();
    if lo.is_finite() {
        Ok(lo)
    } else {
        Err(CertError::IndeterminateRegion(format!("non-finite bound on {b:?}")))
    }
}

fn clears(lower_bound: f64, target: f64) -> bool {
    lower_bound >= target && lower_bound > 0.0
}

fn settled(lower_bound: f64, target: f64, upper: f64) -> bool {
    clears(lower_bound, target) && lower_bound >= RELATIVE_GAP * upper
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    id: u64,
    bx: ParamBox,
    lower_bound: f64,
}

// Max-heap on the reversed key pops the lowest bound, then the oldest box.
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower_bound.total_cmp(&self.lower_bound).then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

enum Child {
    Outside(ParamBox),
    Bounded(ParamBox, f64, f64),
}

fn classify(b: ParamBox, margin: f64) -> Result<Child, CertError> {
    if b.is_outside(margin) {
        Ok(Child::Outside(b))
    } else {
        Ok(Child::Bounded(b, enclose(&b, margin)?, sample_value(&b, margin)))
    }
}

/// Point residual at the expansion point of a box that meets the domain.
/// Roundoff may leave that point a hair past the face `p4 = margin`; it is
/// snapped back and renormalized onto the gauge.
fn sample_value(b: &ParamBox, margin: f64) -> f64 {
    let c = b.expansion_point(margin);
    let p = [c[0], c[1], c[2], (1.0 - c[0] - c[1] - c[2]).max(margin)];
    let s: f64 = p.iter().sum();
    frame_edge_residual(p.map(|x| x / s), c[3]).unwrap_or(f64::INFINITY)
}

/// Refines the domain until every box clears `target` (and zero), or until
/// one more split would exceed `max_boxes` boxes in the tiling. In the
/// latter case the certificate is returned with `complete = false`.
pub fn certify(margin: f64, target: f64, max_boxes: usize) -> Result<Certificate, CertError> {
    if !(margin > 0.0 && margin <= 0.2) {
        return Err(CertError::InvalidRequest(format!("margin {margin} outside (0, 0.2]")));
    }
    if !(target >= 0.0 && target.is_finite()) {
        return Err(CertError::InvalidRequest(format!("target {target} must be finite and >= 0")));
    }
    if max_boxes < 1 {
        return Err(CertError::InvalidRequest("max_boxes must be at least 1".into()));
    }

    let root = ParamBox::root(margin);
    let mut next_id = 0u64;
    let mut queue = BinaryHeap::new();
    let mut done: Vec<(u64, Leaf)> = Vec::new();
    let mut outside: Vec<(u64, ParamBox)> = Vec::new();
    let root_bound = enclose(&root, margin)?;
    let mut upper = sample_value(&root, margin);
    let root_leaf = Pending { id: next_id, bx: root, lower_bound: root_bound };
    next_id += 1;
    if settled(root_bound, target, upper) {
        done.push((root_leaf.id, Leaf { bx: BoxRecord::new(&root), lower_bound: root_bound }));
    } else {
        queue.push(root_leaf);
    }

    let mut total = 1usize;
    while !queue.is_empty() {
        // Each split adds one box to the tiling.
        let room = max_boxes - total;
        if room == 0 {
            break;
        }
        // The threshold only falls as `upper` improves, so settled boxes
        // stay settled; queued ones are re-checked as they come out.
        let mut batch = Vec::new();
        while batch.len() < room.min(BATCH) {
            let Some(p) = queue.pop() else { break };
            if settled(p.lower_bound, target, upper) {
                done.push((p.id, Leaf { bx: BoxRecord::new(&p.bx), lower_bound: p.lower_bound }));
            } else {
                batch.push(p);
            }
        }
        let take = batch.len();
        if take == 0 {
            break;
        }
        let children: Vec<ParamBox> = batch
            .iter()
            .flat_map(|p| {
                let (a, b) = p.bx.split();
                [a, b]
            })
            .collect();
        let evaluated: Vec<Result<Child, CertError>> = children.into_par_iter().map(|b| classify(b, margin)).collect();
        total += take;
        let evaluated: Vec<Child> = evaluated.into_iter().collect::<Result<_, _>>()?;
        for child in &evaluated {
            if let Child::Bounded(_, _, v) = child {
                upper = upper.min(*v);
            }
        }
        for child in evaluated {
            let id = next_id;
            next_id += 1;
            match child {
                Child::Outside(b) => outside.push((id, b)),
                Child::Bounded(b, lb, _) if settled(lb, target, upper) => {
                    done.push((id, Leaf { bx: BoxRecord::new(&b), lower_bound: lb }))
                }
                Child::Bounded(b, lb, _) => queue.push(Pending { id, bx: b, lower_bound: lb }),
            }
        }
    }

    let complete = queue.is_empty();
    let mut leaves = done;
    leaves.extend(queue.into_iter().map(|p| (p.id, Leaf { bx: BoxRecord::new(&p.bx), lower_bound: p.lower_bound })));
    leaves.sort_by_key(|(id, _)| *id);
    let leaves: Vec<Leaf> = leaves.into_iter().map(|(_, l)| l).collect();
    let c_star = leaves.iter().map(|l| l.lower_bound).fold(f64::INFINITY, f64::min);
    Ok(Certificate {
        version: crate::VERSION.to_string(),
        margin,
        gauge: GAUGE.to_string(),
        target,
        max_boxes,
        complete,
        c_star,
        upper_bound: upper,
        box_count: leaves.len() + outside.len(),
        leaves,
        outside: outside.into_iter().map(|(_, b)| OutsideBox { bx: BoxRecord::new(&b) }).collect(),
    })
}

/// Replays `cert` from scratch: the boxes must be exactly the leaves of the
/// deterministic split tree of the domain (no gaps, overlaps or foreign
/// boxes), every recorded bound must be implied by a fresh enclosure, every
/// outside claim must hold, and the global claims must be consistent.
///
/// Returns `Ok(false)` when a claim fails and `Err` when the document is not
/// a certificate at all.
pub fn verify_certificate(cert: &Certificate) -> Result<bool, CertError> {
    if cert.gauge != GAUGE {
        return Err(CertError::Malformed(format!("unknown gauge {:?}", cert.gauge)));
    }
    if !(cert.margin > 0.0 && cert.margin <= 0.2) {
        return Err(CertError::Malformed(format!("margin {} outside (0, 0.2]", cert.margin)));
    }
    if !cert.target.is_finite() || !cert.c_star.is_finite() || !cert.upper_bound.is_finite() {
        return Err(CertError::Malformed("non-finite target or bound".into()));
    }
    if cert.leaves.is_empty() {
        return Err(CertError::Malformed("no leaves".into()));
    }
    let margin = cert.margin;

    // Tiling: every box in the document is a distinct leaf of the split tree
    // and the leaves cover the root.
    let boxes: Vec<ParamBox> = cert
        .leaves
        .iter()
        .map(|l| l.bx)
        .chain(cert.outside.iter().map(|o| o.bx))
        .map(|r| r.param_box())
        .collect();
    if cert.box_count != boxes.len() {
        return Ok(false);
    }
    let all: Vec<usize> = (0..boxes.len()).collect();
    if !tiles(&ParamBox::root(margin), &all, &boxes, 0) {
        return Ok(false);
    }

    let records_ok = cert
        .leaves
        .iter()
        .map(|l| l.bx)
        .chain(cert.outside.iter().map(|o| o.bx))
        .all(|r| r.p4 == r.param_box().p4());
    if !records_ok {
        return Ok(false);
    }
    if !cert.outside.iter().all(|o| o.bx.param_box().is_outside(margin)) {
        return Ok(false);
    }

    let bounds_ok = cert.leaves.par_iter().all(|l| {
        let b = l.bx.param_box();
        !b.is_outside(margin) && matches!(enclose(&b, margin), Ok(lo) if l.lower_bound <= lo)
    });
    if !bounds_ok {
        return Ok(false);
    }

    let min = cert.leaves.iter().map(|l| l.lower_bound).fold(f64::INFINITY, f64::min);
    if cert.c_star != min {
        return Ok(false);
    }
    if cert.complete && !cert.leaves.iter().all(|l| clears(l.lower_bound, cert.target)) {
        return Ok(false);
    }
    Ok(true)
}

fn tiles(node: &ParamBox, members: &[usize], boxes: &[ParamBox], depth: usize) -> bool {
    match members {
        [] => false,
        [only] if boxes[*only] == *node => true,
        _ if depth >= MAX_DEPTH => false,
        _ => {
            let (lo, hi) = node.split();
            let mut left = Vec::new();
            let mut right = Vec::new();
            for &i in members {
                if within(&boxes[i], &lo) {
                    left.push(i);
                } else if within(&boxes[i], &hi) {
                    right.push(i);
                } else {
                    return false;
                }
            }
            tiles(&lo, &left, boxes, depth + 1) && tiles(&hi, &right, boxes, depth + 1)
        }
    }
}

fn within(b: &ParamBox, node: &ParamBox) -> bool {
    b.dims().iter().zip(node.dims()).all(|(x, n)| x.is_subset_of(&n))
}
