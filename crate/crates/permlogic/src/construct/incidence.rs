//! The labeled incidence structure of a permutation: points are vertices,
//! consecutive points (in position or in value) are joined by edges, and
//! labels mark the two minima and the two successor relations.

use std::collections::BTreeSet;

use super::ConstructError;
use crate::graph::Graph;
use crate::logic::{Signature, Structure};
use crate::perm::Permutation;

/// The incidence graph: vertices are the points of `p` (numbered by
/// position) and edges join points adjacent in position or in value.
pub fn incidence_graph(p: &Permutation) -> Graph {
    let n = p.len();
    let mut g = Graph::new(n);
    for i in 1..n {
        g.add_edge(i, i + 1).unwrap();
    }
    for v in 1..n {
        g.add_edge(p.position_of(v), p.position_of(v + 1)).unwrap();
    }
    g
}

/// A structure over the labeled-incidence signature together with the
/// bookkeeping linking domain elements back to points and edges.
#[derive(Debug, Clone)]
pub struct LabeledIncidence {
    structure: Structure,
    n: usize,
    /// Edge `j` (domain element `n + j`) joins these two vertices.
    edges: Vec<(usize, usize)>,
    graph: Graph,
}

impl LabeledIncidence {
    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Edges carrying the given label (`"succ1"` or `"succ2"`).
    pub fn labeled_edges(&self, label: &str) -> Vec<(usize, usize)> {
        self.structure
            .tuples(label)
            .map(|t| self.edges[t[0] - self.n - 1])
            .collect()
    }
}

/// Builds the labeled incidence structure of a non-empty permutation. The
/// domain is `1..=n` for the points (by position) followed by one element
/// per deduplicated edge. A single edge may carry both successor labels and
/// a single vertex both minimum labels.
pub fn incidence_structure(p: &Permutation) -> Result<LabeledIncidence, ConstructError> {
    let n = p.len();
    if n == 0 {
        return Err(ConstructError::EmptyPermutation);
    }
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let succ1: Vec<(usize, usize)> = (1..n).map(|i| norm(i, i + 1)).collect();
    let succ2: Vec<(usize, usize)> =
        (1..n).map(|v| norm(p.position_of(v), p.position_of(v + 1))).collect();
    let all: BTreeSet<(usize, usize)> = succ1.iter().chain(succ2.iter()).copied().collect();
    let edges: Vec<(usize, usize)> = all.into_iter().collect();
    let edge_id = |pair: (usize, usize)| n + 1 + edges.binary_search(&pair).unwrap();

    let mut s = Structure::new(Signature::incidence(), n + edges.len());
    for v in 1..=n {
        s.insert("vertex", vec![v]).unwrap();
    }
    for (j, &(u, v)) in edges.iter().enumerate() {
        let e = n + 1 + j;
        s.insert("edge", vec![e]).unwrap();
        s.insert("Inc", vec![e, u]).unwrap();
        s.insert("Inc", vec![e, v]).unwrap();
    }
    s.insert("min1", vec![1]).unwrap();
    s.insert("min2", vec![p.position_of(1)]).unwrap();
    for &pair in &succ1 {
        s.insert("succ1", vec![edge_id(pair)]).unwrap();
    }
    for &pair in &succ2 {
        s.insert("succ2", vec![edge_id(pair)]).unwrap();
    }
    Ok(LabeledIncidence { structure: s, n, edges, graph: incidence_graph(p) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::all_permutations;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn identity_is_a_path_with_doubled_labels() {
        let li = incidence_structure(&perm("123")).unwrap();
        assert_eq!(li.edges(), &[(1, 2), (2, 3)]);
        assert_eq!(li.labeled_edges("succ1"), vec![(1, 2), (2, 3)]);
        assert_eq!(li.labeled_edges("succ2"), vec![(1, 2), (2, 3)]);
        // The single smallest point carries both minimum labels.
        assert!(li.structure().contains("min1", &[1]));
        assert!(li.structure().contains("min2", &[1]));
    }

    #[test]
    fn complete_graph_for_2413() {
        let li = incidence_structure(&perm("2413")).unwrap();
        assert_eq!(li.graph().edge_count(), 6);
        assert_eq!(li.structure().domain_size(), 4 + 6);
    }

    #[test]
    fn singleton() {
        let li = incidence_structure(&perm("1")).unwrap();
        assert_eq!(li.vertex_count(), 1);
        assert!(li.edges().is_empty());
        assert!(li.structure().contains("min1", &[1]));
        assert!(li.structure().contains("min2", &[1]));
        assert!(incidence_structure(&Permutation::empty()).is_err());
    }

    #[test]
    fn axioms_hold_everywhere() {
        for n in 1..=8 {
            let sample = if n <= 5 { all_permutations(n) } else { vec![crate::construct::pi_kl(n / 2, n - 1 - n / 2)] };
            for p in sample {
                let li = incidence_structure(&p).unwrap();
                let s = li.structure();
                // Every edge is incident to exactly two vertices.
                for (j, &(u, v)) in li.edges().iter().enumerate() {
                    let e = li.vertex_count() + 1 + j;
                    let incs: Vec<&Vec<usize>> =
                        s.tuples("Inc").filter(|t| t[0] == e).collect();
                    assert_eq!(incs.len(), 2);
                    assert!(s.contains("Inc", &[e, u]) && s.contains("Inc", &[e, v]));
                }
                // Exactly one vertex per minimum label.
                assert_eq!(s.tuples("min1").count(), 1);
                assert_eq!(s.tuples("min2").count(), 1);
                // n - 1 successor edges per order, as labeled multiplicities.
                assert_eq!(li.labeled_edges("succ1").len(), p.len() - 1);
                assert_eq!(li.labeled_edges("succ2").len(), p.len() - 1);
                // succ1 edges form the position path, succ2 the value path.
                let mut s1 = li.labeled_edges("succ1");
                s1.sort();
                let expect: Vec<(usize, usize)> = (1..p.len()).map(|i| (i, i + 1)).collect();
                assert_eq!(s1, expect);
            }
        }
    }

    #[test]
    fn path_subset_order_characterization() {
        // x <1 y iff the succ1 path from the min1 vertex to x is a subset
        // of the path to y, natively on the edge sets; same for <2.
        for n in 1..=7 {
            let perms = if n <= 5 { all_permutations(n) } else {
                all_permutations(n).into_iter().step_by(17).collect()
            };
            for p in perms {
                let li = incidence_structure(&p).unwrap();
                let succ1: BTreeSet<(usize, usize)> = li.labeled_edges("succ1").into_iter().collect();
                let succ2: BTreeSet<(usize, usize)> = li.labeled_edges("succ2").into_iter().collect();
                let path_to = |edges: &BTreeSet<(usize, usize)>, start: usize, x: usize| {
                    // Walk the labeled path from `start` to `x`.
                    let mut seen = BTreeSet::new();
                    let mut cur = start;
                    let mut prev = 0;
                    while cur != x {
                        let next = edges
                            .iter()
                            .find_map(|&(u, v)| {
                                if u == cur && v != prev {
                                    Some(v)
                                } else if v == cur && u != prev {
                                    Some(u)
                                } else {
                                    None
                                }
                            })
                            .expect("x lies on the labeled path");
                        seen.insert((cur.min(next), cur.max(next)));
                        prev = cur;
                        cur = next;
                    }
                    seen
                };
                for x in 1..=n {
                    for y in 1..=n {
                        let px = path_to(&succ1, 1, x);
                        let py = path_to(&succ1, 1, y);
                        assert_eq!(x < y, px.is_subset(&py) && px != py, "{p} <1 {x},{y}");
                        let m2 = p.position_of(1);
                        let px = path_to(&succ2, m2, x);
                        let py = path_to(&succ2, m2, y);
                        assert_eq!(
                            p.value(x) < p.value(y),
                            px.is_subset(&py) && px != py,
                            "{p} <2 {x},{y}"
                        );
                    }
                }
            }
        }
    }
}
