//! The thirty monomials of the expanded residual, with their grouping.

use serde::{Deserialize, Serialize};

use crate::geometry::QuadMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Length {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Length {
    pub fn of(self, m: &QuadMetrics) -> f64 {
        match self {
            Length::A => m.a,
            Length::B => m.b,
            Length::C => m.c,
            Length::D => m.d,
            Length::E => m.e,
            Length::F => m.f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Area {
    A123,
    A124,
    A134,
    A234,
}

impl Area {
    pub fn of(self, m: &QuadMetrics) -> f64 {
        match self {
            Area::A123 => m.a123,
            Area::A124 => m.a124,
            Area::A134 => m.a134,
            Area::A234 => m.a234,
        }
    }
}

/// Classes of monomials. Multiplicity-one terms fall into `X`, `Y` or `W`
/// by the length pair they avoid; the `-2` coefficient terms form `Pair`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermGroup {
    /// Avoids `a` and `d`.
    X,
    /// Avoids `c` and `f`.
    Y,
    /// Avoids `b` and `e`.
    W,
    Pair,
}

impl TermGroup {
    pub const SINGLE: [TermGroup; 3] = [TermGroup::X, TermGroup::Y, TermGroup::W];

    fn avoided(self) -> [Length; 2] {
        match self {
            TermGroup::X => [Length::A, Length::D],
            TermGroup::Y => [Length::C, Length::F],
            TermGroup::W => [Length::B, Length::E],
            TermGroup::Pair => unreachable!(),
        }
    }
}

/// `coeff * outer * inner * area0 * area1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpandedTerm {
    pub coeff: f64,
    pub outer: Length,
    pub inner: Length,
    pub areas: [Area; 2],
}

impl ExpandedTerm {
    pub fn eval(&self, m: &QuadMetrics) -> f64 {
        self.coeff * self.outer.of(m) * self.inner.of(m) * self.areas[0].of(m) * self.areas[1].of(m)
    }

    pub fn group(&self) -> TermGroup {
        if self.coeff.abs() == 2.0 {
            return TermGroup::Pair;
        }
        let pair = [self.outer, self.inner];
        TermGroup::SINGLE
            .into_iter()
            .find(|g| g.avoided().iter().all(|l| !pair.contains(l)))
            .expect("every multiplicity-one term avoids exactly one length pair")
    }
}

/// One edge expression: sign, free length, the two areas, the four summed
/// lengths and the doubled one.
struct EdgeSpec {
    sign: f64,
    outer: Length,
    areas: [Area; 2],
    summed: [Length; 4],
    doubled: Length,
}

const EDGES: [EdgeSpec; 6] = {
    use Area::*;
    use Length::*;
    [
        EdgeSpec { sign: 1.0, outer: F, areas: [A123, A124], summed: [D, E, A, B], doubled: C },
        EdgeSpec { sign: 1.0, outer: D, areas: [A123, A234], summed: [C, B, E, F], doubled: A },
        EdgeSpec { sign: 1.0, outer: C, areas: [A134, A234], summed: [D, B, E, A], doubled: F },
        EdgeSpec { sign: 1.0, outer: A, areas: [A124, A134], summed: [C, E, B, F], doubled: D },
        EdgeSpec { sign: -1.0, outer: E, areas: [A123, A134], summed: [C, A, D, F], doubled: B },
        EdgeSpec { sign: -1.0, outer: B, areas: [A124, A234], summed: [C, D, A, F], doubled: E },
    ]
};

/// All thirty monomials in edge order, each edge's four summed lengths
/// followed by its doubled length.
pub fn expanded_terms() -> [ExpandedTerm; 30] {
    let mut out = [ExpandedTerm { coeff: 0.0, outer: Length::A, inner: Length::A, areas: [Area::A123; 2] }; 30];
    let mut k = 0;
    for edge in &EDGES {
        for inner in edge.summed {
            out[k] = ExpandedTerm { coeff: edge.sign, outer: edge.outer, inner, areas: edge.areas };
            k += 1;
        }
        out[k] = ExpandedTerm { coeff: -2.0 * edge.sign, outer: edge.outer, inner: edge.doubled, areas: edge.areas };
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_partition_the_singles() {
        let terms = expanded_terms();
        for g in TermGroup::SINGLE {
            assert_eq!(terms.iter().filter(|t| t.group() == g).count(), 8, "{g:?}");
        }
        assert_eq!(terms.iter().filter(|t| t.group() == TermGroup::Pair).count(), 6);
    }

    #[test]
    fn x_group_matches_hand_collection() {
        // f(e+b) A123 A124 + c(b+e) A134 A234 - e(c+f) A123 A134 - b(c+f) A124 A234
        use Area::*;
        use Length::*;
        let mut got: Vec<_> = expanded_terms()
            .into_iter()
            .filter(|t| t.group() == TermGroup::X)
            .map(|t| (t.coeff as i32, t.outer, t.inner, t.areas))
            .collect();
        let mut want = vec![
            (1, F, E, [A123, A124]),
            (1, F, B, [A123, A124]),
            (1, C, B, [A134, A234]),
            (1, C, E, [A134, A234]),
            (-1, E, C, [A123, A134]),
            (-1, E, F, [A123, A134]),
            (-1, B, C, [A124, A234]),
            (-1, B, F, [A124, A234]),
        ];
        let key = |t: &(i32, Length, Length, [Area; 2])| format!("{t:?}");
        got.sort_by_key(key);
        want.sort_by_key(key);
        assert_eq!(got, want);
    }
}
