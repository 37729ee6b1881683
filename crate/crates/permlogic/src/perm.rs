//! Permutations, pattern containment and structural operations.
//!
//! Positions and values are 1-indexed throughout. A permutation of length
//! `n` is a sequence containing every element of `1..=n` exactly once; its
//! diagram is the point set `{(i, values[i])}`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("values do not form a permutation of 1..={0}")]
    NotAPermutation(usize),
    #[error("inflation expects {expected} parts, got {got}")]
    InflationArity { expected: usize, got: usize },
    #[error("inflation part {0} is empty")]
    EmptyInflationPart(usize),
    #[error("position range {lo}..={hi} out of bounds for length {n}")]
    RangeOutOfBounds { lo: usize, hi: usize, n: usize },
    #[error("positions {lo}..={hi} are not an interval")]
    NotAnInterval { lo: usize, hi: usize },
    #[error("cannot parse permutation: {0}")]
    Parse(String),
    #[error("adjacency marker {0} out of range for pattern of length {1}")]
    BadAdjacency(usize, usize),
    #[error("coloring has length {got}, permutation has length {expected}")]
    ColoringLength { expected: usize, got: usize },
}

/// A permutation of `1..=n`, stored in one-line notation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from one-line notation, checking that the
    /// values are exactly `1..=n`. The empty sequence is allowed.
    pub fn new(values: Vec<usize>) -> Result<Self, PermError> {
        let n = values.len();
        let mut seen = vec![false; n + 1];
        for &v in &values {
            if v == 0 || v > n || seen[v] {
                return Err(PermError::NotAPermutation(n));
            }
            seen[v] = true;
        }
        Ok(Permutation { values })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { values: (1..=n).collect() }
    }

    pub fn empty() -> Self {
        Permutation { values: Vec::new() }
    }

    /// The decreasing permutation `n (n-1) ... 1`.
    pub fn decreasing(n: usize) -> Self {
        Permutation { values: (1..=n).rev().collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a 1-indexed position.
    pub fn value(&self, pos: usize) -> usize {
        self.values[pos - 1]
    }

    /// Position (1-indexed) of a value.
    pub fn position_of(&self, value: usize) -> usize {
        self.values.iter().position(|&v| v == value).expect("value in range") + 1
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// Diagram points `(position, value)`, left to right.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (i + 1, v))
    }

    pub fn reverse(&self) -> Self {
        Permutation { values: self.values.iter().rev().copied().collect() }
    }

    pub fn complement(&self) -> Self {
        let n = self.len();
        Permutation { values: self.values.iter().map(|&v| n + 1 - v).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut values = vec![0; self.len()];
        for (i, &v) in self.values.iter().enumerate() {
            values[v - 1] = i + 1;
        }
        Permutation { values }
    }

    /// Direct sum `12[self, other]`; tolerates empty operands.
    pub fn direct_sum(&self, other: &Permutation) -> Self {
        let k = self.len();
        let mut values = self.values.clone();
        values.extend(other.values.iter().map(|&v| v + k));
        Permutation { values }
    }

    /// Skew sum `21[self, other]`; tolerates empty operands.
    pub fn skew_sum(&self, other: &Permutation) -> Self {
        let shift = other.len();
        let mut values: Vec<usize> = self.values.iter().map(|&v| v + shift).collect();
        values.extend(other.values.iter().copied());
        Permutation { values }
    }

    /// Subpermutation induced by a set of positions (1-indexed, any order).
    pub fn induced(&self, positions: &[usize]) -> Permutation {
        let mut pts: Vec<(usize, usize)> = positions.iter().map(|&p| (p, self.value(p))).collect();
        pts.sort();
        let mut by_value: Vec<usize> = (0..pts.len()).collect();
        by_value.sort_by_key(|&i| pts[i].1);
        let mut values = vec![0; pts.len()];
        for (rank, &i) in by_value.iter().enumerate() {
            values[i] = rank + 1;
        }
        Permutation { values }
    }

    /// True when the permutation can be built from single points by direct
    /// and skew sums, i.e. when it avoids both 2413 and 3142.
    pub fn is_separable(&self) -> bool {
        fn rec(values: &[usize], lo: usize) -> bool {
            let n = values.len();
            if n <= 1 {
                return true;
            }
            // Split off a proper prefix holding either the smallest or the
            // largest band of values.
            let (mut min, mut max) = (usize::MAX, 0);
            for split in 1..n {
                min = min.min(values[split - 1]);
                max = max.max(values[split - 1]);
                if max - min + 1 != split {
                    continue;
                }
                if min == lo || max == lo + n - 1 {
                    let rest_lo = if min == lo { lo + split } else { lo };
                    if rec(&values[..split], min) && rec(&values[split..], rest_lo) {
                        return true;
                    }
                }
            }
            false
        }
        rec(&self.values, 1)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.values {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

impl FromStr for Permutation {
    type Err = PermError;

    /// Accepts whitespace-separated integers ("3 1 4 2") and, for `n <= 9`,
    /// the compact digit form ("3142").
    fn from_str(s: &str) -> Result<Self, PermError> {
        let t = s.trim();
        if t.is_empty() {
            return Ok(Permutation::empty());
        }
        let values: Vec<usize> = if t.contains(char::is_whitespace) {
            t.split_whitespace()
                .map(|tok| tok.parse::<usize>().map_err(|_| PermError::Parse(format!("bad token `{tok}`"))))
                .collect::<Result<_, _>>()?
        } else if t.chars().all(|c| c.is_ascii_digit()) {
            if t.len() > 9 {
                return Err(PermError::Parse("compact digit form is limited to length 9".into()));
            }
            t.chars().map(|c| c.to_digit(10).unwrap() as usize).collect()
        } else {
            return Err(PermError::Parse(format!("unexpected characters in `{t}`")));
        };
        Permutation::new(values)
    }
}

/// A classical pattern with marked adjacent element pairs: an occurrence
/// must map pattern positions `i` and `i+1` to text positions that are
/// consecutive with respect to `<1` for every marked `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VincularPattern {
    pattern: Permutation,
    adjacent: BTreeSet<usize>,
}

impl VincularPattern {
    pub fn new(pattern: Permutation, adjacent: impl IntoIterator<Item = usize>) -> Result<Self, PermError> {
        let k = pattern.len();
        let adjacent: BTreeSet<usize> = adjacent.into_iter().collect();
        for &i in &adjacent {
            if i == 0 || i + 1 > k {
                return Err(PermError::BadAdjacency(i, k));
            }
        }
        Ok(VincularPattern { pattern, adjacent })
    }

    pub fn classical(pattern: Permutation) -> Self {
        VincularPattern { pattern, adjacent: BTreeSet::new() }
    }

    pub fn pattern(&self) -> &Permutation {
        &self.pattern
    }

    pub fn adjacent(&self) -> &BTreeSet<usize> {
        &self.adjacent
    }
}

/// Classical permutation statistics of a single permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatRecord {
    /// Positions `i` with `values[i] > values[i+1]`.
    pub descent_set: BTreeSet<usize>,
    /// Sum of the descent set.
    pub maj: usize,
    pub inversions: usize,
    pub fixed_points: BTreeSet<usize>,
    /// Positions of left-to-right maxima.
    pub ltr_maxima: BTreeSet<usize>,
}

/// All occurrences of `pattern` in `text` as sorted position subsets, in
/// lexicographic order. Enumeration is plain subset search with early
/// pruning by partial order-isomorphism.
pub fn occurrences(pattern: &Permutation, text: &Permutation) -> Vec<Vec<usize>> {
    let k = pattern.len();
    let n = text.len();
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    fn extend(
        pattern: &Permutation,
        text: &Permutation,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let k = pattern.len();
        let j = chosen.len();
        if j == k {
            out.push(chosen.clone());
            return;
        }
        let start = chosen.last().map_or(1, |&p| p + 1);
        // Still need k - j - 1 further positions after this one.
        for p in start..=(text.len() - (k - j - 1)) {
            let ok = chosen.iter().enumerate().all(|(i, &q)| {
                (pattern.value(i + 1) < pattern.value(j + 1)) == (text.value(q) < text.value(p))
            });
            if ok {
                chosen.push(p);
                extend(pattern, text, chosen, out);
                chosen.pop();
            }
        }
    }
    extend(pattern, text, &mut chosen, &mut out);
    out
}

/// Whether `text` contains `pattern`.
pub fn contains(pattern: &Permutation, text: &Permutation) -> bool {
    !occurrences(pattern, text).is_empty()
}

/// Number of occurrences of a vincular pattern in `text`.
pub fn count_vincular(vp: &VincularPattern, text: &Permutation) -> usize {
    occurrences(vp.pattern(), text)
        .into_iter()
        .filter(|occ| vp.adjacent.iter().all(|&i| occ[i - 1] + 1 == occ[i]))
        .count()
}

/// Descents, major index, inversions, fixed points and left-to-right maxima.
pub fn statistics(p: &Permutation) -> StatRecord {
    let n = p.len();
    let mut descent_set = BTreeSet::new();
    for i in 1..n {
        if p.value(i) > p.value(i + 1) {
            descent_set.insert(i);
        }
    }
    let maj = descent_set.iter().sum();
    let mut inversions = 0;
    for i in 1..=n {
        for j in i + 1..=n {
            if p.value(i) > p.value(j) {
                inversions += 1;
            }
        }
    }
    let fixed_points = (1..=n).filter(|&i| p.value(i) == i).collect();
    let mut ltr_maxima = BTreeSet::new();
    let mut best = 0;
    for i in 1..=n {
        if p.value(i) > best {
            best = p.value(i);
            ltr_maxima.insert(i);
        }
    }
    StatRecord { descent_set, maj, inversions, fixed_points, ltr_maxima }
}

/// Inflation `sigma[parts[0], ..., parts[k-1]]`: each point of `sigma` is
/// replaced by a block isomorphic to the corresponding part. Parts must be
/// non-empty and match `sigma` in number.
pub fn inflate(sigma: &Permutation, parts: &[Permutation]) -> Result<Permutation, PermError> {
    let k = sigma.len();
    if parts.len() != k {
        return Err(PermError::InflationArity { expected: k, got: parts.len() });
    }
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(PermError::EmptyInflationPart(i + 1));
        }
    }
    let mut value_offset = vec![0usize; k];
    for i in 0..k {
        for j in 0..k {
            if sigma.values[j] < sigma.values[i] {
                value_offset[i] += parts[j].len();
            }
        }
    }
    let mut values = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for i in 0..k {
        values.extend(parts[i].values.iter().map(|&v| v + value_offset[i]));
    }
    Ok(Permutation { values })
}

/// All contiguous position ranges of size in `[2, n-1]` whose value set is
/// also contiguous, in lexicographic order. A permutation is simple exactly
/// when this list is empty.
pub fn proper_intervals(p: &Permutation) -> Vec<(usize, usize)> {
    let n = p.len();
    let mut out = Vec::new();
    for lo in 1..=n {
        let (mut min, mut max) = (p.value(lo), p.value(lo));
        for hi in lo + 1..=n {
            min = min.min(p.value(hi));
            max = max.max(p.value(hi));
            let size = hi - lo + 1;
            if size <= n - 1 && max - min + 1 == size {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Whether `p` is simple, i.e. has no proper interval.
pub fn is_simple(p: &Permutation) -> bool {
    proper_intervals(p).is_empty()
}

/// Replaces the interval at positions `lo..=hi` by a single point. The range
/// may be a single position or the whole permutation; its values must be
/// contiguous.
pub fn deflate(p: &Permutation, lo: usize, hi: usize) -> Result<Permutation, PermError> {
    let n = p.len();
    if lo == 0 || hi > n || lo > hi {
        return Err(PermError::RangeOutOfBounds { lo, hi, n });
    }
    let (mut min, mut max) = (usize::MAX, 0);
    for pos in lo..=hi {
        min = min.min(p.value(pos));
        max = max.max(p.value(pos));
    }
    if max - min != hi - lo {
        return Err(PermError::NotAnInterval { lo, hi });
    }
    let drop = hi - lo; // points removed
    let mut values = Vec::with_capacity(n - drop);
    for pos in 1..=n {
        if pos == lo {
            values.push(min);
        } else if pos > lo && pos <= hi {
            continue;
        } else {
            let v = p.value(pos);
            values.push(if v > max { v - drop } else { v });
        }
    }
    Ok(Permutation { values })
}

/// All permutations of length `n` in lexicographic order. Intended for
/// exhaustive desk-scale checks; `n` should stay small.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut values: Vec<usize> = (1..=n).collect();
    loop {
        out.push(Permutation { values: values.clone() });
        // next_permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| values[i] < values[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| values[j] > values[i]).unwrap();
        values.swap(i, j);
        values[i + 1..].reverse();
    }
    if n == 0 {
        return vec![Permutation::empty()];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(p("3142").values(), &[3, 1, 4, 2]);
        assert_eq!(p("3 1 4 2"), p("3142"));
        assert_eq!(p("10 2 3 4 5 6 7 8 9 1").len(), 10);
        assert_eq!(p("3142").to_string(), "3 1 4 2");
        assert!("3141".parse::<Permutation>().is_err());
        assert!("0 1".parse::<Permutation>().is_err());
        assert_eq!("".parse::<Permutation>().unwrap(), Permutation::empty());
    }

    #[test]
    fn occurrences_basic() {
        // 25341 is an inflation of 231, hence contains it.
        let occs = occurrences(&p("231"), &p("25341"));
        assert!(!occs.is_empty());
        assert!(occs.contains(&vec![1, 2, 5]));
        // Every point is a copy of 1.
        assert_eq!(occurrences(&p("1"), &p("3142")).len(), 4);
        // Derived by exhaustive 4-subset check: 25314 avoids 3142.
        assert!(occurrences(&p("3142"), &p("25314")).is_empty());
        // Pattern longer than text.
        assert!(occurrences(&p("123"), &p("12")).is_empty());
        // Lexicographic order of the output.
        let occs = occurrences(&p("12"), &p("132"));
        assert_eq!(occs, vec![vec![1, 2], vec![1, 3]]);
    }

    #[test]
    fn vincular_counts() {
        let dash21 = VincularPattern::new(p("21"), [1]).unwrap();
        assert_eq!(count_vincular(&dash21, &p("3142")), 2);
        let v132 = VincularPattern::new(p("132"), [2]).unwrap();
        assert_eq!(count_vincular(&v132, &Permutation::identity(6)), 0);
        assert_eq!(count_vincular(&v132, &p("132")), 1);
        assert!(VincularPattern::new(p("21"), [2]).is_err());
    }

    #[test]
    fn statistics_basic() {
        let s = statistics(&p("3142"));
        assert_eq!(s.descent_set, BTreeSet::from([1, 3]));
        assert_eq!(s.maj, 4);
        assert_eq!(s.inversions, 3);
        let id = statistics(&Permutation::identity(5));
        assert_eq!(id.maj, 0);
        assert_eq!(id.inversions, 0);
        assert_eq!(id.fixed_points, BTreeSet::from([1, 2, 3, 4, 5]));
        let s21 = statistics(&p("21"));
        assert_eq!(s21.descent_set, BTreeSet::from([1]));
        assert_eq!(s21.maj, 1);
        assert_eq!(statistics(&p("25134")).ltr_maxima, BTreeSet::from([1, 2]));
    }

    #[test]
    fn maj_is_sum_of_descents_everywhere() {
        for n in 0..=6 {
            for q in all_permutations(n) {
                let s = statistics(&q);
                assert_eq!(s.maj, s.descent_set.iter().sum::<usize>());
            }
        }
    }

    #[test]
    fn inflate_basic() {
        let got = inflate(&p("231"), &[p("1"), p("312"), p("1")]).unwrap();
        assert_eq!(got, p("25341"));
        let sigma = p("2413");
        let ones = vec![p("1"); 4];
        assert_eq!(inflate(&sigma, &ones).unwrap(), sigma);
        assert_eq!(inflate(&p("21"), &[p("21"), p("1")]).unwrap(), p("321"));
        assert!(inflate(&p("21"), &[p("1")]).is_err());
        assert!(inflate(&p("21"), &[p("1"), Permutation::empty()]).is_err());
    }

    #[test]
    fn sums_and_symmetries() {
        assert_eq!(p("12").direct_sum(&p("21")), p("1243"));
        assert_eq!(p("21").skew_sum(&p("1")), p("321"));
        assert_eq!(p("1").skew_sum(&p("12")), p("312"));
        for n in 0..=8 {
            for q in all_permutations(n.min(4)) {
                assert_eq!(q.reverse().reverse(), q);
                assert_eq!(q.complement().complement(), q);
            }
        }
    }

    #[test]
    fn intervals_and_simplicity() {
        assert!(proper_intervals(&p("25314")).is_empty());
        let ivs = proper_intervals(&p("25341"));
        assert!(ivs.contains(&(2, 4)));
        assert!(proper_intervals(&p("12")).is_empty());
        assert!(is_simple(&p("3142")));
        assert!(is_simple(&p("2413")));
        assert!(!is_simple(&p("321")));
    }

    #[test]
    fn deflate_basic() {
        assert_eq!(deflate(&p("25341"), 2, 4).unwrap(), p("231"));
        let q = p("3142");
        for pos in 1..=4 {
            assert_eq!(deflate(&q, pos, pos).unwrap(), q);
        }
        assert_eq!(deflate(&p("321"), 1, 3).unwrap(), p("1"));
        assert!(deflate(&p("3142"), 1, 2).is_err());
    }

    #[test]
    fn deflation_preserves_containment_of_avoiding_intervals() {
        // For an interval I avoiding alpha, deflating I preserves
        // alpha-containment, exhaustively for n <= 7.
        let alpha = p("3142");
        for n in 1..=7 {
            for q in all_permutations(n) {
                let has = contains(&alpha, &q);
                for (lo, hi) in proper_intervals(&q) {
                    let block = q.induced(&(lo..=hi).collect::<Vec<_>>());
                    if contains(&alpha, &block) {
                        continue;
                    }
                    let d = deflate(&q, lo, hi).unwrap();
                    assert_eq!(contains(&alpha, &d), has, "perm {q}, interval {lo}..={hi}");
                }
            }
        }
    }

    #[test]
    fn containment_is_transitive_sampled() {
        let perms: Vec<Permutation> = (1..=4).flat_map(all_permutations).collect();
        for a in &perms {
            for b in &perms {
                if !contains(a, b) {
                    continue;
                }
                for c in all_permutations(5) {
                    if contains(b, &c) {
                        assert!(contains(a, &c));
                    }
                }
            }
        }
    }

    #[test]
    fn separability_matches_avoidance() {
        for n in 0..=6 {
            for q in all_permutations(n) {
                let avoids = !contains(&p("2413"), &q) && !contains(&p("3142"), &q);
                assert_eq!(q.is_separable(), avoids, "perm {q}");
            }
        }
    }

    #[test]
    fn induced_subpermutation() {
        assert_eq!(p("25341").induced(&[1, 2, 5]), p("231"));
        assert_eq!(p("3142").induced(&[2, 3]), p("12"));
        assert_eq!(p("3142").induced(&[]), Permutation::empty());
    }

    #[test]
    fn all_permutations_counts() {
        assert_eq!(all_permutations(0).len(), 1);
        assert_eq!(all_permutations(4).len(), 24);
        let sum: usize = (1..=7).map(|n| all_permutations(n).len()).sum();
        assert_eq!(sum, 5913);
    }
}
