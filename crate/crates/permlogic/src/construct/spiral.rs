//! The spiral family: a permutation built from `4*ell + 2` blocks winding
//! clockwise (right, down, left, up) around a central inflated copy of a
//! simple pattern `alpha`. Each intermediate block carries three arrows
//! (copies of `alpha` with one extreme point removed), every arrow sitting
//! fully inside the range of a distinct arrow of the previous block. The
//! three resulting arrow chains are the ground, positive and negative
//! tracks; whether an admissible two-coloring exists depends exactly on
//! the parity of `ell`.

use serde::Serialize;

use super::builder::{Axis, CoordSpec, PointBuilder};
use super::ConstructError;
use crate::perm::{contains, inflate, is_simple, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Right,
    Down,
    Left,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrackName {
    Ground,
    Positive,
    Negative,
}

/// An arrow: a copy of `alpha` minus one extreme point, pointing at the
/// next block. Positions are 1-indexed into the finished permutation.
#[derive(Debug, Clone, Serialize)]
pub struct Arrow {
    pub block: usize,
    pub orientation: Orientation,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpiralBlock {
    pub index: usize,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpiralPlan {
    pub alpha: Permutation,
    pub ell: usize,
    pub blocks: Vec<SpiralBlock>,
    /// Ground, positive and negative arrow chains; the arrow in block `i`
    /// (for `i >= 2`) lies in the range of the chain's arrow in block `i-1`.
    pub tracks: Vec<(TrackName, Vec<Arrow>)>,
    pub top_chunk: Vec<usize>,
    pub bottom_chunk: Vec<usize>,
}

impl SpiralPlan {
    pub fn track(&self, name: TrackName) -> &[Arrow] {
        &self.tracks.iter().find(|(t, _)| *t == name).unwrap().1
    }

    /// A branching order for coloring searches that follows the forcing
    /// structure: the two chunks, then the rest of the central block
    /// (whose full copies must be bichromatic, which is what refutes
    /// mixed-chunk branches), then the arrows block by block.
    pub fn coloring_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = self.top_chunk.clone();
        order.extend(&self.bottom_chunk);
        for &pos in &self.blocks[0].positions {
            if !order.contains(&pos) {
                order.push(pos);
            }
        }
        for block in &self.blocks[1..] {
            for (_, arrows) in &self.tracks {
                if let Some(a) = arrows.iter().find(|a| a.block == block.index) {
                    order.extend(&a.positions);
                }
            }
        }
        order
    }
}

/// `alpha` with one extreme point removed: the arrow shape pointing in the
/// given direction (the removed point is where the range lies).
fn arrow_pattern(alpha: &Permutation, orientation: Orientation) -> Permutation {
    let m = alpha.len();
    let removed = match orientation {
        Orientation::Right => m,
        Orientation::Left => 1,
        Orientation::Down => alpha.position_of(1),
        Orientation::Up => alpha.position_of(m),
    };
    let keep: Vec<usize> = (1..=m).filter(|&p| p != removed).collect();
    alpha.induced(&keep)
}

/// Which axis the range of an arrow occupies and how many arrow points
/// lie strictly below (or left of) a completing point on that axis.
fn gap_geometry(alpha: &Permutation, orientation: Orientation) -> (Axis, usize) {
    let m = alpha.len();
    match orientation {
        Orientation::Right => (Axis::Y, alpha.value(m) - 1),
        Orientation::Left => (Axis::Y, alpha.value(1) - 1),
        Orientation::Down => (Axis::X, alpha.position_of(1) - 1),
        Orientation::Up => (Axis::X, alpha.position_of(m) - 1),
    }
}

fn block_orientation(i: usize) -> Orientation {
    match i % 4 {
        1 => Orientation::Right,
        2 => Orientation::Down,
        3 => Orientation::Left,
        _ => Orientation::Up,
    }
}

#[derive(Debug, Clone, Copy)]
enum Arrangement {
    Increasing,
    Decreasing,
    /// The three items form the pattern 231 (in reading order of their
    /// gaps); the item inflating the `1` is the outer arrow.
    Pattern231,
}

fn block_arrangement(i: usize) -> Arrangement {
    if i % 2 == 0 {
        Arrangement::Increasing
    } else if i % 4 == 1 {
        Arrangement::Decreasing
    } else {
        Arrangement::Pattern231
    }
}

/// A gap an item is placed into: the anchor point of the predecessor arrow
/// and the axis the gap lives on.
#[derive(Debug, Clone, Copy)]
struct GapRef {
    axis: Axis,
    /// Anchor id and whether the slot lies above it (`GapAbove`) or below.
    anchor: usize,
    above: bool,
}

/// The range gap of an arrow: where completing points must go on the
/// perpendicular axis. Asserts the gap is still empty.
fn range_gap(builder: &PointBuilder, alpha: &Permutation, arrow: &[usize], orientation: Orientation) -> GapRef {
    let (axis, g) = gap_geometry(alpha, orientation);
    let mut by_coord: Vec<usize> = arrow.to_vec();
    by_coord.sort_by_key(|&id| builder.coord(axis, id));
    let m1 = arrow.len(); // m - 1
    if g == 0 {
        GapRef { axis, anchor: by_coord[0], above: false }
    } else {
        let anchor = by_coord[g - 1];
        if g < m1 {
            assert!(
                builder.adjacent_on(axis, anchor, by_coord[g]),
                "range gap of an arrow must be empty"
            );
        }
        GapRef { axis, anchor, above: true }
    }
}

fn gap_spec(gap: GapRef, rank: usize) -> CoordSpec {
    if gap.above {
        CoordSpec::GapAbove { anchor: gap.anchor, rank }
    } else {
        CoordSpec::GapBelow { anchor: gap.anchor, rank }
    }
}

/// Builds the spiral with `4*ell + 2` blocks over the simple pattern
/// `alpha` (which must contain 3142; pass the reverse otherwise). Returns
/// the permutation together with the block/track plan.
pub fn spiral(ell: usize, alpha: &Permutation) -> Result<(Permutation, SpiralPlan), ConstructError> {
    if ell == 0 {
        return Err(ConstructError::BadSpiralDepth(ell));
    }
    let m = alpha.len();
    if m < 4 {
        return Err(ConstructError::PatternTooShort(m));
    }
    if !is_simple(alpha) {
        return Err(ConstructError::PatternNotSimple);
    }
    if !contains(&"3142".parse().unwrap(), alpha) {
        return Err(ConstructError::PatternAvoids3142);
    }

    let right_arrow = arrow_pattern(alpha, Orientation::Right);
    let top_pos = alpha.position_of(m);
    let bottom_pos = alpha.position_of(1);

    // Block 1: alpha with the topmost point inflated by the double right
    // arrow (the top chunk), the bottommost by a single right arrow (the
    // bottom chunk) and all other points by full copies of alpha.
    let chunk_pattern = right_arrow.direct_sum(&right_arrow);
    let parts: Vec<Permutation> = (1..=m)
        .map(|i| {
            if i == top_pos {
                chunk_pattern.clone()
            } else if i == bottom_pos {
                right_arrow.clone()
            } else {
                alpha.clone()
            }
        })
        .collect();
    let b1 = inflate(alpha, &parts).expect("all parts are non-empty");

    let mut builder = PointBuilder::new();
    let ids = builder.commit(
        &b1.points()
            .map(|(pos, val)| {
                (CoordSpec::Append { rank: pos - 1 }, CoordSpec::Append { rank: val - 1 })
            })
            .collect::<Vec<_>>(),
    );

    // Identify the three arrows of block 1 by their position offsets.
    let offset_of = |i: usize| -> usize { parts.iter().take(i - 1).map(|p| p.len()).sum() };
    let chunk_base = offset_of(top_pos);
    let lower_summand: Vec<usize> = (0..m - 1).map(|j| ids[chunk_base + j]).collect();
    let upper_summand: Vec<usize> = (0..m - 1).map(|j| ids[chunk_base + m - 1 + j]).collect();
    let bottom_base = offset_of(bottom_pos);
    let bottom_arrow: Vec<usize> = (0..m - 1).map(|j| ids[bottom_base + j]).collect();

    let top_chunk_ids: Vec<usize> = lower_summand.iter().chain(&upper_summand).copied().collect();
    let bottom_chunk_ids = bottom_arrow.clone();

    // Track order is fixed: ground continues through outer arrows (from
    // the upper summand of the top chunk), positive starts at the lower
    // summand, negative at the bottom chunk.
    let mut track_ids: [Vec<Vec<usize>>; 3] =
        [vec![upper_summand], vec![lower_summand], vec![bottom_arrow]];
    let mut block_ids: Vec<Vec<usize>> = vec![ids];

    let block_count = 4 * ell + 2;
    for i in 2..=block_count - 1 {
        let prev_orientation = block_orientation(i - 1);
        let orientation = block_orientation(i);
        let shape = arrow_pattern(alpha, orientation);
        let item_len = shape.len();

        // Gaps of the three predecessor arrows, sorted by coordinate.
        let mut gaps: Vec<(usize, GapRef)> = (0..3)
            .map(|t| {
                let prev = track_ids[t].last().unwrap();
                (t, range_gap(&builder, alpha, prev, prev_orientation))
            })
            .collect();
        gaps.sort_by_key(|(_, gap)| builder.coord(gap.axis, gap.anchor));

        // Fresh-axis base index per sorted-gap slot.
        let base_of = |slot: usize| -> usize {
            match block_arrangement(i) {
                Arrangement::Increasing => slot,
                Arrangement::Decreasing => 2 - slot,
                Arrangement::Pattern231 => [1, 2, 0][slot],
            }
        };

        let fresh_append = matches!(prev_orientation, Orientation::Right | Orientation::Up);
        let fresh_axis = match prev_orientation {
            Orientation::Right | Orientation::Left => Axis::X,
            _ => Axis::Y,
        };

        let mut specs = Vec::new();
        let mut spec_owner = Vec::new();
        for (slot, &(t, gap)) in gaps.iter().enumerate() {
            let base = base_of(slot) * item_len;
            for j in 1..=item_len {
                let fresh_rank = base
                    + match fresh_axis {
                        Axis::X => j - 1,
                        Axis::Y => shape.value(j) - 1,
                    };
                let perp_rank = match gap.axis {
                    Axis::Y => shape.value(j) - 1,
                    Axis::X => j - 1,
                };
                let fresh = if fresh_append {
                    CoordSpec::Append { rank: fresh_rank }
                } else {
                    CoordSpec::Prepend { rank: fresh_rank }
                };
                let perp = gap_spec(gap, perp_rank);
                specs.push(match fresh_axis {
                    Axis::X => (fresh, perp),
                    Axis::Y => (perp, fresh),
                });
                spec_owner.push(t);
            }
        }
        let new_ids = builder.commit(&specs);
        let mut arrows: [Vec<usize>; 3] = Default::default();
        for (id, &t) in new_ids.iter().zip(&spec_owner) {
            arrows[t].push(*id);
        }
        for t in 0..3 {
            track_ids[t].push(arrows[t].clone());
        }
        block_ids.push(new_ids);
    }

    // Final block: a plain copy of alpha to the right, its topmost point in
    // the range of the ground (outer) arrow and the rest in the range of
    // the middle arrow of the last arrow block.
    {
        let prev_orientation = block_orientation(block_count - 1);
        debug_assert!(matches!(prev_orientation, Orientation::Right));
        let mut gaps: Vec<(usize, GapRef)> = (0..3)
            .map(|t| {
                let prev = track_ids[t].last().unwrap();
                (t, range_gap(&builder, alpha, prev, prev_orientation))
            })
            .collect();
        gaps.sort_by_key(|(_, gap)| builder.coord(gap.axis, gap.anchor));
        let ground_gap = gaps.iter().find(|&&(t, _)| t == 0).unwrap().1;
        let middle_gap = gaps[1].1;

        let mut specs = Vec::new();
        for (pos, val) in alpha.points() {
            let fresh = CoordSpec::Append { rank: pos - 1 };
            let perp = if val == m {
                gap_spec(ground_gap, 0)
            } else {
                gap_spec(middle_gap, val - 1)
            };
            specs.push((fresh, perp));
        }
        let new_ids = builder.commit(&specs);
        block_ids.push(new_ids);
    }

    let (permutation, position_of) = builder.to_permutation();
    let to_positions = |ids: &[usize]| -> Vec<usize> {
        let mut out: Vec<usize> = ids.iter().map(|&id| position_of[id]).collect();
        out.sort();
        out
    };

    let blocks = block_ids
        .iter()
        .enumerate()
        .map(|(i, ids)| SpiralBlock { index: i + 1, positions: to_positions(ids) })
        .collect();
    let names = [TrackName::Ground, TrackName::Positive, TrackName::Negative];
    let tracks = names
        .iter()
        .enumerate()
        .map(|(t, &name)| {
            let arrows = track_ids[t]
                .iter()
                .enumerate()
                .map(|(b, ids)| Arrow {
                    block: b + 1,
                    orientation: block_orientation(b + 1),
                    positions: to_positions(ids),
                })
                .collect();
            (name, arrows)
        })
        .collect();
    let plan = SpiralPlan {
        alpha: alpha.clone(),
        ell,
        blocks,
        tracks,
        top_chunk: to_positions(&top_chunk_ids),
        bottom_chunk: to_positions(&bottom_chunk_ids),
    };
    Ok((permutation, plan))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha() -> Permutation {
        "3142".parse().unwrap()
    }

    fn pattern_at(p: &Permutation, positions: &[usize]) -> Permutation {
        p.induced(positions)
    }

    #[test]
    fn validation() {
        assert!(matches!(spiral(0, &alpha()), Err(ConstructError::BadSpiralDepth(0))));
        assert!(matches!(
            spiral(1, &"321".parse().unwrap()),
            Err(ConstructError::PatternTooShort(3))
        ));
        assert!(matches!(
            spiral(1, &"1234".parse().unwrap()),
            Err(ConstructError::PatternNotSimple)
        ));
        assert!(matches!(
            spiral(1, &"2413".parse().unwrap()),
            Err(ConstructError::PatternAvoids3142)
        ));
    }

    #[test]
    fn sizes_and_block_counts() {
        let (p, plan) = spiral(1, &alpha()).unwrap();
        assert_eq!(p.len(), 57);
        assert_eq!(plan.blocks.len(), 6);
        let (p, plan) = spiral(2, &alpha()).unwrap();
        assert_eq!(p.len(), 93);
        assert_eq!(plan.blocks.len(), 10);
        // Blocks partition the positions.
        let mut all: Vec<usize> = plan.blocks.iter().flat_map(|b| b.positions.clone()).collect();
        all.sort();
        assert_eq!(all, (1..=93).collect::<Vec<_>>());
    }

    #[test]
    fn arrows_have_arrow_shapes() {
        let (p, plan) = spiral(2, &alpha()).unwrap();
        for (_, arrows) in &plan.tracks {
            for arrow in arrows {
                let shape = pattern_at(&p, &arrow.positions);
                assert_eq!(shape, arrow_pattern(&alpha(), arrow.orientation), "block {}", arrow.block);
            }
        }
        // The chunks are right arrows / the double right arrow.
        let right = arrow_pattern(&alpha(), Orientation::Right);
        assert_eq!(pattern_at(&p, &plan.bottom_chunk), right);
        assert_eq!(pattern_at(&p, &plan.top_chunk), right.direct_sum(&right));
    }

    #[test]
    fn every_arrow_lies_in_range_of_its_predecessor() {
        for ell in 1..=2 {
            let (p, plan) = spiral(ell, &alpha()).unwrap();
            let a = alpha();
            for (name, arrows) in &plan.tracks {
                for pair in arrows.windows(2) {
                    let (prev, next) = (&pair[0], &pair[1]);
                    for &pos in &next.positions {
                        let mut pts = prev.positions.clone();
                        pts.push(pos);
                        assert_eq!(
                            pattern_at(&p, &pts),
                            a,
                            "track {name:?}, block {} -> {}",
                            prev.block,
                            next.block
                        );
                    }
                }
            }
            // Final block: topmost point completes the ground arrow, the
            // rest complete the middle arrow of the last arrow block.
            let last = plan.blocks.last().unwrap();
            let topmost = *last
                .positions
                .iter()
                .max_by_key(|&&pos| p.value(pos))
                .unwrap();
            let ground_last = plan.track(TrackName::Ground).last().unwrap();
            let mut pts = ground_last.positions.clone();
            pts.push(topmost);
            assert_eq!(pattern_at(&p, &pts), a, "ell {ell} final topmost");
            // The middle arrow is the one whose range hosts the rest: try
            // the two non-ground tracks, exactly one must fit all points.
            let rest: Vec<usize> =
                last.positions.iter().copied().filter(|&q| q != topmost).collect();
            let fits = |arrow: &Arrow| {
                rest.iter().all(|&q| {
                    let mut pts = arrow.positions.clone();
                    pts.push(q);
                    pattern_at(&p, &pts) == a
                })
            };
            let pos_last = plan.track(TrackName::Positive).last().unwrap();
            let neg_last = plan.track(TrackName::Negative).last().unwrap();
            assert!(fits(pos_last) ^ fits(neg_last), "ell {ell} middle arrow");
            // The middle arrow belongs to the positive track iff ell is even.
            assert_eq!(fits(pos_last), ell % 2 == 0, "ell {ell}");
        }
    }

    #[test]
    fn final_block_is_alpha() {
        let (p, plan) = spiral(1, &alpha()).unwrap();
        let last = plan.blocks.last().unwrap();
        assert_eq!(pattern_at(&p, &last.positions), alpha());
    }
}
