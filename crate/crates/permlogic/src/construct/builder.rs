//! Exact integer point-set builder shared by the spiral and the graph
//! encoder: insertions open gaps by uniform dilation and both axes are
//! rank-compressed after every batch, so coordinates never grow.

use crate::perm::Permutation;

#[derive(Debug, Clone, Copy)]
pub(crate) enum CoordSpec {
    /// Beyond the current maximum; ranks order the new points ascending.
    Append { rank: usize },
    /// Below the current minimum; ranks order the new points ascending.
    Prepend { rank: usize },
    /// Strictly between the anchor point's coordinate and the next
    /// existing coordinate above it.
    GapAbove { anchor: usize, rank: usize },
    /// Strictly between the previous existing coordinate and the anchor's.
    GapBelow { anchor: usize, rank: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Axis {
    X,
    Y,
}

/// Exact point-set builder: coordinates stay integers, insertions open
/// gaps by uniform dilation and both axes are rank-compressed after every
/// batch, so values never grow.
pub(crate) struct PointBuilder {
    xs: Vec<i64>,
    ys: Vec<i64>,
}

impl PointBuilder {
    pub(crate) fn new() -> Self {
        PointBuilder { xs: Vec::new(), ys: Vec::new() }
    }

    pub(crate) fn len(&self) -> usize {
        self.xs.len()
    }

    pub(crate) fn coord(&self, axis: Axis, id: usize) -> i64 {
        match axis {
            Axis::X => self.xs[id],
            Axis::Y => self.ys[id],
        }
    }

    /// True when no existing point lies strictly between the two on `axis`.
    pub(crate) fn adjacent_on(&self, axis: Axis, a: usize, b: usize) -> bool {
        let coords = match axis {
            Axis::X => &self.xs,
            Axis::Y => &self.ys,
        };
        let (lo, hi) = (coords[a].min(coords[b]), coords[a].max(coords[b]));
        !coords.iter().any(|&c| c > lo && c < hi)
    }

    pub(crate) fn commit(&mut self, specs: &[(CoordSpec, CoordSpec)]) -> Vec<usize> {
        let x_coords = Self::plan_axis(&mut self.xs, &self.ys, specs.iter().map(|s| s.0));
        let y_coords = Self::plan_axis(&mut self.ys, &self.xs, specs.iter().map(|s| s.1));
        let first = self.len();
        for (x, y) in x_coords.into_iter().zip(y_coords) {
            self.xs.push(x);
            self.ys.push(y);
        }
        Self::normalize(&mut self.xs);
        Self::normalize(&mut self.ys);
        (first..self.len()).collect()
    }

    fn plan_axis(
        coords: &mut [i64],
        _other: &[i64],
        specs: impl Iterator<Item = CoordSpec> + Clone,
    ) -> Vec<i64> {
        // Resolve GapBelow to the predecessor's GapAbove (or Prepend when
        // the anchor is the minimum).
        let resolved: Vec<CoordSpec> = specs
            .clone()
            .map(|s| match s {
                CoordSpec::GapBelow { anchor, rank } => {
                    let a = coords[anchor];
                    match (0..coords.len())
                        .filter(|&i| coords[i] < a)
                        .max_by_key(|&i| coords[i])
                    {
                        Some(pred) => CoordSpec::GapAbove { anchor: pred, rank },
                        None => CoordSpec::Prepend { rank },
                    }
                }
                other => other,
            })
            .collect();
        // Scale so every unit gap can hold the largest insertion group.
        let mut group_max = 1usize;
        for spec in &resolved {
            if let CoordSpec::GapAbove { anchor, rank } = spec {
                let size = resolved
                    .iter()
                    .filter(|s| matches!(s, CoordSpec::GapAbove { anchor: a, .. } if a == anchor))
                    .count();
                group_max = group_max.max(size.max(rank + 1));
            }
        }
        let f = (group_max + 1) as i64;
        for c in coords.iter_mut() {
            *c *= f;
        }
        let max = coords.iter().copied().max().unwrap_or(0);
        let min = coords.iter().copied().min().unwrap_or(0);
        let prepend_count = resolved.iter().filter(|s| matches!(s, CoordSpec::Prepend { .. })).count() as i64;
        resolved
            .iter()
            .map(|spec| match *spec {
                CoordSpec::Append { rank } => max + 1 + rank as i64,
                CoordSpec::Prepend { rank } => min - prepend_count + rank as i64,
                CoordSpec::GapAbove { anchor, rank } => coords[anchor] + 1 + rank as i64,
                CoordSpec::GapBelow { .. } => unreachable!("resolved above"),
            })
            .collect()
    }

    fn normalize(coords: &mut [i64]) {
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by_key(|&i| coords[i]);
        for (rank, &i) in order.iter().enumerate() {
            coords[i] = rank as i64 + 1;
        }
    }

    pub(crate) fn to_permutation(&self) -> (Permutation, Vec<usize>) {
        // After normalization, coordinates are exactly the ranks.
        let n = self.len();
        let mut values = vec![0usize; n];
        for id in 0..n {
            values[self.xs[id] as usize - 1] = self.ys[id] as usize;
        }
        let positions: Vec<usize> = (0..n).map(|id| self.xs[id] as usize).collect();
        (Permutation::new(values).expect("builder yields a permutation"), positions)
    }

}

