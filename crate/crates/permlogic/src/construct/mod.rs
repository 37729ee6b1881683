//! Concrete witness permutations and structures: skew towers, spirals,
//! labeled incidence structures, gridding matrices and tree-width.

pub(crate) mod builder;
mod grid;
mod incidence;
mod spiral;
mod treewidth;

pub use grid::{
    check_gridding, staircase_matrix, verify_gridding, Cell, Gridding, GriddingMatrix,
    GriddingOracle, StaircaseOracle,
};
pub use incidence::{incidence_graph, incidence_structure, LabeledIncidence};
pub use spiral::{spiral, Arrow, Orientation, SpiralBlock, SpiralPlan, TrackName};
pub use treewidth::{treewidth, TwMode};

use thiserror::Error;

use crate::perm::Permutation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("matrix rows must be non-empty and of equal length")]
    RaggedMatrix,
    #[error("cannot parse gridding matrix: {0}")]
    MatrixParse(String),
    #[error("permutation must be non-empty")]
    EmptyPermutation,
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("exact tree-width is limited to 14 vertices, got {0}")]
    TooLargeForExact(usize),
    #[error("spiral requires ell >= 1, got {0}")]
    BadSpiralDepth(usize),
    #[error("spiral pattern must be simple")]
    PatternNotSimple,
    #[error("spiral pattern must have length at least 4, got {0}")]
    PatternTooShort(usize),
    #[error("spiral pattern must contain 3142 (pass the reverse otherwise)")]
    PatternAvoids3142,
}

/// The skew tower `(⊕^k 1) ⊖ 1 ⊖ (⊕^l 1)`: an increasing run of `k` on
/// top, a single middle point, and an increasing run of `l` at the bottom.
/// It has a fixed point iff `k == l`.
pub fn pi_kl(k: usize, l: usize) -> Permutation {
    let mut values = Vec::with_capacity(k + l + 1);
    for i in 1..=k {
        values.push(l + 1 + i);
    }
    values.push(l + 1);
    for v in 1..=l {
        values.push(v);
    }
    Permutation::new(values).expect("construction yields a permutation")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::statistics;

    #[test]
    fn pi_kl_examples() {
        assert_eq!(pi_kl(0, 0), "1".parse().unwrap());
        assert_eq!(pi_kl(1, 1), "321".parse().unwrap());
        assert_eq!(pi_kl(1, 2), "4312".parse().unwrap());
        assert_eq!(pi_kl(2, 0), "231".parse().unwrap());
    }

    #[test]
    fn pi_kl_fixed_point_iff_equal() {
        for k in 0..=10 {
            for l in 0..=10 {
                let p = pi_kl(k, l);
                assert_eq!(p.len(), k + l + 1);
                let has_fp = !statistics(&p).fixed_points.is_empty();
                assert_eq!(has_fp, k == l, "k={k} l={l}");
            }
        }
    }
}
