//! Tree-width: an exact elimination-ordering dynamic program over vertex
//! subsets, and a min-degree greedy upper bound.

use super::ConstructError;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwMode {
    /// Exact value via the subset DP; limited to 14 vertices.
    Exact,
    /// Min-degree greedy elimination; an upper bound on the exact value.
    Upper,
}

/// Tree-width of `g`, exactly or as a greedy upper bound.
pub fn treewidth(g: &Graph, mode: TwMode) -> Result<usize, ConstructError> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(ConstructError::EmptyGraph);
    }
    match mode {
        TwMode::Exact => {
            if n > 14 {
                return Err(ConstructError::TooLargeForExact(n));
            }
            Ok(exact(g))
        }
        TwMode::Upper => Ok(greedy_upper(g)),
    }
}

/// Number of vertices outside `mask ∪ {v}` reachable from `v` through
/// vertices inside `mask`; the degree of `v` when eliminated after `mask`.
fn elimination_degree(g: &Graph, mask: u32, v: usize) -> usize {
    let n = g.vertex_count();
    let mut visited = 0u32;
    let mut stack = vec![v];
    let mut degree = 0;
    visited |= 1 << (v - 1);
    while let Some(u) = stack.pop() {
        for w in g.neighbors(u) {
            let bit = 1u32 << (w - 1);
            if visited & bit != 0 {
                continue;
            }
            visited |= bit;
            if mask & bit != 0 {
                stack.push(w);
            } else {
                degree += 1;
            }
        }
    }
    let _ = n;
    degree
}

fn exact(g: &Graph) -> usize {
    let n = g.vertex_count();
    // opt[mask] = best possible width when the vertices of `mask` are
    // eliminated first (in some order).
    let mut opt = vec![usize::MAX; 1 << n];
    opt[0] = 0;
    for mask in 1u32..1 << n {
        let mut best = usize::MAX;
        for v in 1..=n {
            let bit = 1u32 << (v - 1);
            if mask & bit == 0 {
                continue;
            }
            let rest = mask & !bit;
            let d = elimination_degree(g, rest, v);
            best = best.min(opt[rest as usize].max(d));
        }
        opt[mask as usize] = best;
    }
    opt[(1usize << n) - 1]
}

fn greedy_upper(g: &Graph) -> usize {
    let n = g.vertex_count();
    let mut adj: Vec<std::collections::BTreeSet<usize>> = (0..=n)
        .map(|v| if v == 0 { Default::default() } else { g.neighbors(v).collect() })
        .collect();
    let mut alive: Vec<usize> = (1..=n).collect();
    let mut width = 0;
    while let Some(&v) = alive.iter().min_by_key(|&&v| (adj[v].len(), v)) {
        width = width.max(adj[v].len());
        let neighbors: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &neighbors {
            adj[a].remove(&v);
        }
        adj[v].clear();
        alive.retain(|&u| u != v);
    }
    width
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::incidence_graph;
    use crate::perm::Permutation;

    #[test]
    fn exact_small_cases() {
        assert_eq!(treewidth(&Graph::new(1), TwMode::Exact).unwrap(), 0);
        assert_eq!(treewidth(&Graph::path(6), TwMode::Exact).unwrap(), 1);
        assert_eq!(treewidth(&Graph::complete(4), TwMode::Exact).unwrap(), 3);
        let mut cycle = Graph::path(5);
        cycle.add_edge(1, 5).unwrap();
        assert_eq!(treewidth(&cycle, TwMode::Exact).unwrap(), 2);
        assert!(treewidth(&Graph::new(0), TwMode::Exact).is_err());
        assert!(matches!(
            treewidth(&Graph::new(15), TwMode::Exact),
            Err(ConstructError::TooLargeForExact(15))
        ));
    }

    #[test]
    fn incidence_graph_widths() {
        let p: Permutation = "2413".parse().unwrap();
        assert_eq!(treewidth(&incidence_graph(&p), TwMode::Exact).unwrap(), 3);
        for n in 2..=10 {
            let id = Permutation::identity(n);
            assert_eq!(treewidth(&incidence_graph(&id), TwMode::Exact).unwrap(), 1, "n={n}");
        }
    }

    #[test]
    fn greedy_upper_bounds_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(1..=10);
            let mut g = Graph::new(n);
            for u in 1..=n {
                for v in u + 1..=n {
                    if rng.gen_bool(0.35) {
                        g.add_edge(u, v).unwrap();
                    }
                }
            }
            let exact = treewidth(&g, TwMode::Exact).unwrap();
            let upper = treewidth(&g, TwMode::Upper).unwrap();
            assert!(upper >= exact, "upper {upper} < exact {exact} on {g:?}");
        }
    }
}
