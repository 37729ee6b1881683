//! Monotone gridding matrices, their cell graphs, the staircase family and
//! gridding search/verification.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ConstructError;
use crate::graph::Graph;
use crate::perm::Permutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cell {
    Empty,
    Increasing,
    Decreasing,
}

/// A matrix of monotone cells. Row 1 is the bottom row, matching value
/// bands; the text format lists rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GriddingMatrix {
    rows: Vec<Vec<Cell>>,
}

impl GriddingMatrix {
    /// Builds from rows listed bottom to top.
    pub fn new(rows: Vec<Vec<Cell>>) -> Result<Self, ConstructError> {
        if rows.is_empty() || rows[0].is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(ConstructError::RaggedMatrix);
        }
        Ok(GriddingMatrix { rows })
    }

    pub fn cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Cell at 1-indexed `(col, row)`, row 1 at the bottom.
    pub fn cell(&self, col: usize, row: usize) -> Cell {
        self.rows[row - 1][col - 1]
    }

    /// Non-empty cells as `(col, row)`, sorted.
    pub fn non_empty_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for col in 1..=self.cols() {
            for row in 1..=self.rows() {
                if self.cell(col, row) != Cell::Empty {
                    out.push((col, row));
                }
            }
        }
        out
    }

    /// The cell graph: non-empty cells are adjacent when they share a row
    /// or column with no non-empty cell between them. Returns the sorted
    /// cell list and a graph on `1..=k` in that order.
    pub fn cell_graph(&self) -> (Vec<(usize, usize)>, Graph) {
        let cells = self.non_empty_cells();
        let index = |c: &(usize, usize)| cells.binary_search(c).unwrap() + 1;
        let mut g = Graph::new(cells.len());
        for row in 1..=self.rows() {
            let in_row: Vec<(usize, usize)> =
                cells.iter().copied().filter(|&(_, r)| r == row).collect();
            for w in in_row.windows(2) {
                g.add_edge(index(&w[0]), index(&w[1])).unwrap();
            }
        }
        for col in 1..=self.cols() {
            let in_col: Vec<(usize, usize)> =
                cells.iter().copied().filter(|&(c, _)| c == col).collect();
            for w in in_col.windows(2) {
                g.add_edge(index(&w[0]), index(&w[1])).unwrap();
            }
        }
        (cells, g)
    }
}

impl fmt::Display for GriddingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows.iter().rev() {
            let mut first = true;
            for cell in row {
                if !first {
                    write!(f, " ")?;
                }
                let c = match cell {
                    Cell::Empty => '.',
                    Cell::Increasing => '/',
                    Cell::Decreasing => '\\',
                };
                write!(f, "{c}")?;
                first = false;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for GriddingMatrix {
    type Err = ConstructError;

    fn from_str(s: &str) -> Result<Self, ConstructError> {
        let mut rows = Vec::new();
        for line in s.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                let cell = match tok {
                    "." => Cell::Empty,
                    "/" => Cell::Increasing,
                    "\\" => Cell::Decreasing,
                    other => return Err(ConstructError::MatrixParse(format!("bad cell `{other}`"))),
                };
                row.push(cell);
            }
            rows.push(row);
        }
        rows.reverse(); // text is top to bottom, storage bottom to top
        GriddingMatrix::new(rows)
    }
}

/// The staircase with `k` increasing cells: starting in the bottom-left
/// corner, steps alternate right and up, so cell `i` sits at column
/// `ceil((i+1)/2)` and row `ceil(i/2)`. Its cell graph is a path with no
/// three consecutive cells in one row or column, and the single non-empty
/// cell of the leftmost column is an endpoint.
pub fn staircase_matrix(k: usize) -> GriddingMatrix {
    assert!(k >= 1, "staircase needs at least one cell");
    let cols = k / 2 + 1;
    let rows = k.div_ceil(2);
    let mut m = vec![vec![Cell::Empty; cols]; rows];
    for i in 1..=k {
        let col = (i + 1).div_ceil(2);
        let row = i.div_ceil(2).max(1);
        m[row - 1][col - 1] = Cell::Increasing;
    }
    GriddingMatrix::new(m).expect("staircase is rectangular")
}

/// A source of gridding matrices whose cell graphs are long paths; the
/// permutations admitting such a gridding stay inside the oracle's class.
pub trait GriddingOracle {
    fn matrix(&self, cells: usize) -> GriddingMatrix;
}

/// The default oracle: all-increasing staircases, whose grid class sits
/// inside the class of all permutations.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaircaseOracle;

impl GriddingOracle for StaircaseOracle {
    fn matrix(&self, cells: usize) -> GriddingMatrix {
        staircase_matrix(cells)
    }
}

/// Column and row cut sequences: `col_cuts[0] = 1`,
/// `col_cuts[cols] = n + 1`, and cell `(i, j)` holds the points with
/// `col_cuts[i-1] <= pos < col_cuts[i]` and `row_cuts[j-1] <= val < row_cuts[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gridding {
    pub col_cuts: Vec<usize>,
    pub row_cuts: Vec<usize>,
}

fn cell_points(p: &Permutation, g: &Gridding, col: usize, row: usize) -> Vec<(usize, usize)> {
    let (clo, chi) = (g.col_cuts[col - 1], g.col_cuts[col]);
    let (rlo, rhi) = (g.row_cuts[row - 1], g.row_cuts[row]);
    p.points()
        .filter(|&(pos, val)| pos >= clo && pos < chi && val >= rlo && val < rhi)
        .collect()
}

fn conforms(points: &[(usize, usize)], cell: Cell) -> bool {
    match cell {
        Cell::Empty => points.is_empty(),
        Cell::Increasing => points.windows(2).all(|w| w[0].1 < w[1].1),
        Cell::Decreasing => points.windows(2).all(|w| w[0].1 > w[1].1),
    }
}

/// Checks that the given cuts are a valid gridding of `p` conforming to `m`.
pub fn verify_gridding(p: &Permutation, m: &GriddingMatrix, g: &Gridding) -> bool {
    let n = p.len();
    let shape_ok = |cuts: &[usize], parts: usize| {
        cuts.len() == parts + 1
            && cuts[0] == 1
            && *cuts.last().unwrap() == n + 1
            && cuts.windows(2).all(|w| w[0] <= w[1])
    };
    if !shape_ok(&g.col_cuts, m.cols()) || !shape_ok(&g.row_cuts, m.rows()) {
        return false;
    }
    for col in 1..=m.cols() {
        for row in 1..=m.rows() {
            if !conforms(&cell_points(p, g, col, row), m.cell(col, row)) {
                return false;
            }
        }
    }
    true
}

/// Searches for a gridding of `p` conforming to `m` by backtracking over
/// row cuts and then column cuts. Complete, so `None` means no gridding
/// exists; intended for desk-scale inputs.
pub fn check_gridding(p: &Permutation, m: &GriddingMatrix) -> Option<Gridding> {
    let n = p.len();
    let mut row_cuts = vec![1usize; m.rows() + 1];
    row_cuts[m.rows()] = n + 1;
    search_rows(p, m, &mut row_cuts, 1)
}

fn search_rows(
    p: &Permutation,
    m: &GriddingMatrix,
    row_cuts: &mut Vec<usize>,
    next: usize,
) -> Option<Gridding> {
    if next == m.rows() {
        let mut col_cuts = vec![1usize; m.cols() + 1];
        col_cuts[m.cols()] = p.len() + 1;
        return search_cols(p, m, row_cuts, &mut col_cuts, 1);
    }
    for cut in row_cuts[next - 1]..=p.len() + 1 {
        row_cuts[next] = cut;
        if let Some(g) = search_rows(p, m, row_cuts, next + 1) {
            return Some(g);
        }
    }
    None
}

fn search_cols(
    p: &Permutation,
    m: &GriddingMatrix,
    row_cuts: &[usize],
    col_cuts: &mut Vec<usize>,
    next: usize,
) -> Option<Gridding> {
    if next == m.cols() {
        let g = Gridding { col_cuts: col_cuts.clone(), row_cuts: row_cuts.to_vec() };
        return verify_gridding(p, m, &g).then_some(g);
    }
    for cut in col_cuts[next - 1]..=p.len() + 1 {
        col_cuts[next] = cut;
        // Column `next` is finalized; prune on it.
        let g = Gridding { col_cuts: col_cuts.clone(), row_cuts: row_cuts.to_vec() };
        let ok = (1..=m.rows()).all(|row| conforms(&cell_points(p, &g, next, row), m.cell(next, row)));
        if ok {
            if let Some(g) = search_cols(p, m, row_cuts, col_cuts, next + 1) {
                return Some(g);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn staircase_shapes() {
        let m = staircase_matrix(1);
        assert_eq!((m.cols(), m.rows()), (1, 1));
        assert_eq!(m.cell(1, 1), Cell::Increasing);

        let m = staircase_matrix(3);
        assert_eq!(m.non_empty_cells(), vec![(1, 1), (2, 1), (2, 2)]);
    }

    #[test]
    fn staircase_cell_graph_is_a_path_with_left_endpoint() {
        for k in 1..=10 {
            let m = staircase_matrix(k);
            let (cells, g) = m.cell_graph();
            assert_eq!(cells.len(), k);
            assert_eq!(g.edge_count(), k - 1);
            let deg1: Vec<usize> = (1..=k).filter(|&v| g.degree(v) == 1).collect();
            if k >= 2 {
                assert_eq!(deg1.len(), 2);
            }
            // Exactly one non-empty cell in the leftmost column, and it is
            // an endpoint of the path.
            let leftmost: Vec<&(usize, usize)> = cells.iter().filter(|&&(c, _)| c == 1).collect();
            assert_eq!(leftmost.len(), 1);
            let idx = cells.iter().position(|c| c == leftmost[0]).unwrap() + 1;
            assert!(g.degree(idx) <= 1);
            // No three consecutive cells share a row or column: walk the path.
            let mut order = vec![idx];
            let mut prev = 0;
            while order.len() < k {
                let cur = *order.last().unwrap();
                let next = g.neighbors(cur).find(|&u| u != prev).unwrap();
                prev = cur;
                order.push(next);
            }
            for w in order.windows(3) {
                let a = cells[w[0] - 1];
                let b = cells[w[1] - 1];
                let c = cells[w[2] - 1];
                assert!(!(a.0 == b.0 && b.0 == c.0), "three in column {k}");
                assert!(!(a.1 == b.1 && b.1 == c.1), "three in row {k}");
            }
        }
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = staircase_matrix(4);
        let text = m.to_string();
        let back: GriddingMatrix = text.parse().unwrap();
        assert_eq!(back, m);
        assert!("x .".parse::<GriddingMatrix>().is_err());
    }

    #[test]
    fn gridding_search_basics() {
        let inc = GriddingMatrix::new(vec![vec![Cell::Increasing]]).unwrap();
        let g = check_gridding(&perm("123"), &inc).unwrap();
        assert!(verify_gridding(&perm("123"), &inc, &g));
        assert!(check_gridding(&perm("21"), &inc).is_none());

        // 2143 fits a 2x2 with two decreasing diagonal cells.
        let m: GriddingMatrix = ". \\\n\\ .".parse().unwrap();
        assert!(check_gridding(&perm("2143"), &m).is_some());
        assert!(check_gridding(&perm("3412"), &m).is_none());

        // Staircase with 3 cells accepts increasing permutations.
        let m = staircase_matrix(3);
        assert!(check_gridding(&perm("123456"), &m).is_some());
    }

    #[test]
    fn verify_rejects_bad_cuts() {
        let inc = GriddingMatrix::new(vec![vec![Cell::Increasing]]).unwrap();
        let bad = Gridding { col_cuts: vec![1, 3], row_cuts: vec![1, 4] };
        assert!(!verify_gridding(&perm("123"), &inc, &bad));
    }
}
