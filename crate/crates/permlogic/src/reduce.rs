//! Encoding graphs into permutations of a grid class and translating graph
//! sentences into two-order sentences.
//!
//! The encoder lays `n + 3` monotone blocks along the oracle's path of
//! cells. Block 1 is the anchor pair; every later block carries four
//! barricades, three `Z` pairs and an `X`/`Y` pair per vertex, chained
//! through the predecessor's strips into tracks. Block 3 adds one
//! separator point per vertex between its `X` and `Y` pairs; block `i + 3`
//! adds a two-point marker on its own row and a one-point marker per
//! incident edge. The decoder reads the adjacency back off the markers,
//! and `track_closure` implements the strip-chasing closure natively for
//! verification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::builder::{Axis, CoordSpec, PointBuilder};
use crate::construct::{Cell, Gridding, GriddingMatrix, GriddingOracle};
use crate::graph::Graph;
use crate::logic::Formula;
use crate::perm::Permutation;
use crate::transform::FreshNames;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("gridding oracle violated its contract: {0}")]
    OracleConditions(String),
    #[error("reduction meta is inconsistent with the permutation: {0}")]
    InconsistentMeta(String),
    #[error("`{0}` is not a registered atomic pair")]
    UnknownPair(String),
    #[error("atom `{0}` is not a graph atom")]
    NonGraphAtom(String),
    #[error("cardinality atoms are not supported by this translation")]
    CardAtomUnsupported,
    #[error("the graph formula must be a sentence")]
    NotASentence,
}

/// Names of the atomic pairs in every block: the three chain anchors and
/// one X/Y pair per vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairName {
    Z(u8),
    X(usize),
    Y(usize),
}

impl std::fmt::Display for PairName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairName::Z(i) => write!(f, "Z{i}"),
            PairName::X(j) => write!(f, "X{j}"),
            PairName::Y(j) => write!(f, "Y{j}"),
        }
    }
}

impl std::str::FromStr for PairName {
    type Err = ReduceError;

    fn from_str(s: &str) -> Result<Self, ReduceError> {
        let err = || ReduceError::UnknownPair(s.to_string());
        if s.len() < 2 {
            return Err(err());
        }
        let (kind, idx) = s.split_at(1);
        let idx: usize = idx.parse().map_err(|_| err())?;
        match kind {
            "Z" if (1..=3).contains(&idx) => Ok(PairName::Z(idx as u8)),
            "X" if idx >= 1 => Ok(PairName::X(idx)),
            "Y" if idx >= 1 => Ok(PairName::Y(idx)),
            _ => Err(err()),
        }
    }
}

impl Serialize for PairName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PairName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockMeta {
    pub index: usize,
    /// Grid cell `(col, row)` hosting the block.
    pub cell: (usize, usize),
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairMeta {
    pub name: PairName,
    pub block: usize,
    pub positions: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatorMeta {
    pub vertex: usize,
    pub position: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkerMeta {
    pub block: usize,
    /// The vertex slot the marker sits in (between `X_j` and `Y_j`).
    pub vertex: usize,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackMeta {
    pub name: PairName,
    /// One pair per block `2..=n+3`, in block order.
    pub pairs: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GriddingCuts {
    pub col_cuts: Vec<usize>,
    pub row_cuts: Vec<usize>,
}

/// Decoder metadata emitted alongside the encoded permutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionMeta {
    pub n: usize,
    pub block_count: usize,
    /// The oracle matrix in its text format.
    pub matrix: String,
    pub gridding: GriddingCuts,
    pub anchor: [usize; 2],
    pub blocks: Vec<BlockMeta>,
    pub pairs: Vec<PairMeta>,
    /// Four barricade positions per block `2..=n+3`.
    pub barricades: Vec<(usize, Vec<usize>)>,
    pub separators: Vec<SeparatorMeta>,
    pub markers: Vec<MarkerMeta>,
    pub tracks: Vec<TrackMeta>,
}

/// The encoded permutation, the translated sentence (when requested) and
/// the decoder metadata.
#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub permutation: Permutation,
    pub sentence: Option<Formula>,
    pub meta: ReductionMeta,
}

impl ReductionOutput {
    pub fn gridding(&self) -> Gridding {
        Gridding {
            col_cuts: self.meta.gridding.col_cuts.clone(),
            row_cuts: self.meta.gridding.row_cuts.clone(),
        }
    }

    pub fn pair_positions(&self, name: PairName, block: usize) -> Option<[usize; 2]> {
        self.meta
            .pairs
            .iter()
            .find(|p| p.name == name && p.block == block)
            .map(|p| p.positions)
    }
}

/// Validates the oracle matrix and returns the path cells in order,
/// starting at the unique non-empty cell of the leftmost column.
fn validate_oracle(m: &GriddingMatrix, cells_wanted: usize) -> Result<Vec<(usize, usize)>, ReduceError> {
    let (cells, graph) = m.cell_graph();
    let err = |msg: String| ReduceError::OracleConditions(msg);
    if cells.len() != cells_wanted {
        return Err(err(format!("expected a path on {cells_wanted} cells, got {}", cells.len())));
    }
    let leftmost: Vec<usize> = cells
        .iter()
        .enumerate()
        .filter(|(_, &(c, _))| c == 1)
        .map(|(i, _)| i + 1)
        .collect();
    if leftmost.len() != 1 {
        return Err(err("the leftmost column must contain exactly one non-empty cell".into()));
    }
    let start = leftmost[0];
    if cells_wanted > 1 && graph.degree(start) != 1 {
        return Err(err("the leftmost-column cell must be an endpoint of the path".into()));
    }
    let mut order = vec![start];
    let mut prev = 0;
    while order.len() < cells.len() {
        let cur = *order.last().unwrap();
        if graph.degree(cur) > 2 {
            return Err(err("cell graph is not a path (degree > 2)".into()));
        }
        let Some(next) = graph.neighbors(cur).find(|&u| u != prev) else {
            return Err(err("cell graph is not a connected path".into()));
        };
        prev = cur;
        order.push(next);
    }
    let path: Vec<(usize, usize)> = order.iter().map(|&i| cells[i - 1]).collect();
    for w in path.windows(3) {
        if (w[0].0 == w[1].0 && w[1].0 == w[2].0) || (w[0].1 == w[1].1 && w[1].1 == w[2].1) {
            return Err(err("three consecutive cells share a row or column".into()));
        }
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Pair(PairName),
    Separator(usize),
    Marker(usize, usize),
}

/// Logical bottom-to-top item list (barricades excluded) of block `i`.
fn block_items(i: usize, n: usize, g: &Graph) -> Vec<Item> {
    let mut items = vec![Item::Pair(PairName::Z(1))];
    for j in 1..=n {
        items.push(Item::Pair(PairName::X(j)));
        if i == 3 {
            items.push(Item::Separator(j));
        } else if i >= 4 {
            let row = i - 3;
            if row == j {
                items.push(Item::Marker(j, 2));
            } else if g.has_edge(row, j) {
                items.push(Item::Marker(j, 1));
            }
        }
        items.push(Item::Pair(PairName::Y(j)));
    }
    items.push(Item::Pair(PairName::Z(2)));
    items.push(Item::Pair(PairName::Z(3)));
    items
}

fn track_names(n: usize) -> Vec<PairName> {
    let mut names = vec![PairName::Z(1), PairName::Z(2), PairName::Z(3)];
    for j in 1..=n {
        names.push(PairName::X(j));
        names.push(PairName::Y(j));
    }
    names
}

#[derive(Debug, Clone, Copy)]
enum Tag {
    Barricade,
    Pair(PairName),
    Separator(usize),
    Marker(usize),
}

/// Encodes `g` into a permutation inside the oracle's grid class, emitting
/// the decoder metadata; the translated sentence is left empty.
pub fn encode_graph(g: &Graph, oracle: &dyn GriddingOracle) -> Result<ReductionOutput, ReduceError> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(ReduceError::EmptyGraph);
    }
    let matrix = oracle.matrix(n + 3);
    let path = validate_oracle(&matrix, n + 3)?;

    let mut builder = PointBuilder::new();
    let mut col_ids: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut row_ids: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut pair_ids: BTreeMap<(usize, PairName), [usize; 2]> = BTreeMap::new();
    let mut barricade_ids: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut separator_ids: Vec<(usize, usize)> = Vec::new();
    let mut marker_ids: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    let mut block_ids: Vec<Vec<usize>> = Vec::new();

    // Fresh-axis spec for a block living in grid band `slot`: inside the
    // existing band when revisited, otherwise next to the nearest populated
    // band, else appended.
    let band_spec = |builder: &PointBuilder,
                     bands: &BTreeMap<usize, Vec<usize>>,
                     axis: Axis,
                     slot: usize,
                     rank: usize| {
        if let Some(ids) = bands.get(&slot) {
            let anchor = *ids.iter().max_by_key(|&&id| builder.coord(axis, id)).unwrap();
            return CoordSpec::GapAbove { anchor, rank };
        }
        if let Some((_, ids)) = bands.range(..slot).next_back() {
            let anchor = *ids.iter().max_by_key(|&&id| builder.coord(axis, id)).unwrap();
            return CoordSpec::GapAbove { anchor, rank };
        }
        if let Some((_, ids)) = bands.range(slot + 1..).next() {
            let anchor = *ids.iter().min_by_key(|&&id| builder.coord(axis, id)).unwrap();
            return CoordSpec::GapBelow { anchor, rank };
        }
        CoordSpec::Append { rank }
    };

    // Block 1: the anchor pair, alone in its cell.
    let (c1, r1) = path[0];
    let v1_increasing = matrix.cell(c1, r1) != Cell::Decreasing;
    let anchor_ids = {
        let specs: Vec<(CoordSpec, CoordSpec)> = (0..2)
            .map(|k| {
                let x = band_spec(&builder, &col_ids, Axis::X, c1, k);
                let y_rank = if v1_increasing { k } else { 1 - k };
                let y = band_spec(&builder, &row_ids, Axis::Y, r1, y_rank);
                (x, y)
            })
            .collect();
        builder.commit(&specs)
    };
    col_ids.entry(c1).or_default().extend(&anchor_ids);
    row_ids.entry(r1).or_default().extend(&anchor_ids);
    block_ids.push(anchor_ids.clone());

    for i in 2..=n + 3 {
        let (_, pr) = path[i - 2];
        let (c, r) = path[i - 1];
        let horizontal = pr == r;
        let shared_axis = if horizontal { Axis::Y } else { Axis::X };
        let fresh_axis = if horizontal { Axis::X } else { Axis::Y };
        let increasing = matrix.cell(c, r) != Cell::Decreasing;
        let items = block_items(i, n, g);

        // Shared-axis spec per new point, with a sortable region key:
        // distinct anchors yield distinct gaps, so `4*coord(anchor) ± 1`
        // orders regions and the rank orders points within a region.
        let region_key = |builder: &PointBuilder, spec: &CoordSpec| -> (i64, usize) {
            match *spec {
                CoordSpec::GapAbove { anchor, rank } => {
                    (4 * builder.coord(shared_axis, anchor) + 1, rank)
                }
                CoordSpec::GapBelow { anchor, rank } => {
                    (4 * builder.coord(shared_axis, anchor) - 1, rank)
                }
                _ => unreachable!("shared axis uses gap specs only"),
            }
        };

        let mut tags: Vec<Tag> = Vec::new();
        let mut shared: Vec<CoordSpec> = Vec::new();
        // Lower/upper endpoints of the strips items are placed into, for
        // anchoring the barricades outside all of them.
        let mut strip_lo: Vec<usize> = Vec::new();
        let mut strip_hi: Vec<usize> = Vec::new();

        if i == 2 {
            // All pairs sit inside the anchor strip, in canonical order.
            let lower = *anchor_ids
                .iter()
                .min_by_key(|&&id| builder.coord(shared_axis, id))
                .unwrap();
            let upper = *anchor_ids
                .iter()
                .max_by_key(|&&id| builder.coord(shared_axis, id))
                .unwrap();
            strip_lo.push(lower);
            strip_hi.push(upper);
            let mut rank = 0;
            for item in &items {
                let Item::Pair(name) = item else { unreachable!("block 2 has no extras") };
                for _ in 0..2 {
                    shared.push(CoordSpec::GapAbove { anchor: lower, rank });
                    tags.push(Tag::Pair(*name));
                    rank += 1;
                }
            }
        } else {
            for item in &items {
                match item {
                    Item::Pair(name) => {
                        let prev = pair_ids[&(i - 1, *name)];
                        let (lower, upper) = if builder.coord(shared_axis, prev[0])
                            < builder.coord(shared_axis, prev[1])
                        {
                            (prev[0], prev[1])
                        } else {
                            (prev[1], prev[0])
                        };
                        strip_lo.push(lower);
                        strip_hi.push(upper);
                        for k in 0..2 {
                            shared.push(CoordSpec::GapAbove { anchor: lower, rank: k });
                            tags.push(Tag::Pair(*name));
                        }
                    }
                    Item::Separator(j) | Item::Marker(j, _) => {
                        // Between the strips of the predecessor's X_j and
                        // Y_j pairs: just above the lower strip's top.
                        let px = pair_ids[&(i - 1, PairName::X(*j))];
                        let py = pair_ids[&(i - 1, PairName::Y(*j))];
                        let strip_low = |pair: [usize; 2]| {
                            builder
                                .coord(shared_axis, pair[0])
                                .min(builder.coord(shared_axis, pair[1]))
                        };
                        let lower_pair = if strip_low(px) < strip_low(py) { px } else { py };
                        let anchor = *lower_pair
                            .iter()
                            .max_by_key(|&&id| builder.coord(shared_axis, id))
                            .unwrap();
                        let count = if let Item::Marker(_, c) = item { *c } else { 1 };
                        for k in 0..count {
                            shared.push(CoordSpec::GapAbove { anchor, rank: k });
                            tags.push(match item {
                                Item::Separator(j) => Tag::Separator(*j),
                                Item::Marker(j, _) => Tag::Marker(*j),
                                Item::Pair(_) => unreachable!(),
                            });
                        }
                    }
                }
            }
        }

        // Barricades: two below and two above everything else in the
        // block on the shared axis, anchored outside every strip (below
        // the lowest strip's lower endpoint, above the highest strip's
        // upper endpoint).
        {
            let low_anchor = *strip_lo
                .iter()
                .min_by_key(|&&id| builder.coord(shared_axis, id))
                .expect("block has strips");
            let high_anchor = *strip_hi
                .iter()
                .max_by_key(|&&id| builder.coord(shared_axis, id))
                .unwrap();
            for k in 0..2 {
                shared.push(CoordSpec::GapBelow { anchor: low_anchor, rank: k });
                tags.push(Tag::Barricade);
            }
            for k in 0..2 {
                shared.push(CoordSpec::GapAbove { anchor: high_anchor, rank: k });
                tags.push(Tag::Barricade);
            }
        }

        // Fresh-axis ranks: shared order, reversed for decreasing cells.
        let keys: Vec<(i64, usize)> = shared.iter().map(|s| region_key(&builder, s)).collect();
        let mut order: Vec<usize> = (0..shared.len()).collect();
        order.sort_by_key(|&e| keys[e]);
        let mut fresh_rank = vec![0usize; shared.len()];
        for (pos, &e) in order.iter().enumerate() {
            fresh_rank[e] = if increasing { pos } else { shared.len() - 1 - pos };
        }

        let slot = if fresh_axis == Axis::X { c } else { r };
        let bands = if fresh_axis == Axis::X { &col_ids } else { &row_ids };
        let specs: Vec<(CoordSpec, CoordSpec)> = shared
            .iter()
            .enumerate()
            .map(|(e, &sspec)| {
                let fresh = band_spec(&builder, bands, fresh_axis, slot, fresh_rank[e]);
                match fresh_axis {
                    Axis::X => (fresh, sspec),
                    Axis::Y => (sspec, fresh),
                }
            })
            .collect();
        let new_ids = builder.commit(&specs);

        col_ids.entry(c).or_default().extend(&new_ids);
        row_ids.entry(r).or_default().extend(&new_ids);
        block_ids.push(new_ids.clone());

        let mut barr: Vec<usize> = Vec::new();
        let mut pair_acc: BTreeMap<PairName, Vec<usize>> = BTreeMap::new();
        let mut marker_acc: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (tag, id) in tags.iter().zip(&new_ids) {
            match tag {
                Tag::Barricade => barr.push(*id),
                Tag::Pair(name) => pair_acc.entry(*name).or_default().push(*id),
                Tag::Separator(j) => separator_ids.push((*j, *id)),
                Tag::Marker(j) => marker_acc.entry(*j).or_default().push(*id),
            }
        }
        for (name, ids) in pair_acc {
            pair_ids.insert((i, name), [ids[0], ids[1]]);
        }
        for (j, ids) in marker_acc {
            marker_ids.push((i, j, ids));
        }
        barricade_ids.push((i, barr));
    }

    let (permutation, position_of) = builder.to_permutation();
    let np = permutation.len();
    let pos = |id: usize| position_of[id];
    let sorted_positions = |ids: &[usize]| {
        let mut v: Vec<usize> = ids.iter().map(|&id| pos(id)).collect();
        v.sort();
        v
    };

    // Cuts from the column/row bands, in grid order.
    let cuts_for = |bands: &BTreeMap<usize, Vec<usize>>,
                    total: usize,
                    coord: &dyn Fn(usize) -> usize| {
        let mut cuts = vec![1usize];
        let mut running = 0usize;
        for slot in 1..=total {
            if let Some(ids) = bands.get(&slot) {
                let lo = ids.iter().map(|&id| coord(id)).min().unwrap();
                let hi = ids.iter().map(|&id| coord(id)).max().unwrap();
                assert!(lo > running, "band order matches grid order");
                running = hi;
            }
            cuts.push(running + 1);
        }
        *cuts.last_mut().unwrap() = np + 1;
        cuts
    };
    let col_cuts = cuts_for(&col_ids, matrix.cols(), &|id| position_of[id]);
    let row_cuts = cuts_for(&row_ids, matrix.rows(), &|id| permutation.value(position_of[id]));

    let meta = ReductionMeta {
        n,
        block_count: n + 3,
        matrix: matrix.to_string(),
        gridding: GriddingCuts { col_cuts, row_cuts },
        anchor: [pos(block_ids[0][0]), pos(block_ids[0][1])],
        blocks: block_ids
            .iter()
            .enumerate()
            .map(|(i, ids)| BlockMeta { index: i + 1, cell: path[i], positions: sorted_positions(ids) })
            .collect(),
        pairs: pair_ids
            .iter()
            .map(|(&(block, name), ids)| {
                let mut p = [pos(ids[0]), pos(ids[1])];
                p.sort();
                PairMeta { name, block, positions: p }
            })
            .collect(),
        barricades: barricade_ids
            .iter()
            .map(|(block, ids)| (*block, sorted_positions(ids)))
            .collect(),
        separators: separator_ids
            .iter()
            .map(|&(vertex, id)| SeparatorMeta { vertex, position: pos(id) })
            .collect(),
        markers: marker_ids
            .iter()
            .map(|(block, vertex, ids)| MarkerMeta {
                block: *block,
                vertex: *vertex,
                positions: sorted_positions(ids),
            })
            .collect(),
        tracks: track_names(n)
            .into_iter()
            .map(|name| TrackMeta {
                name,
                pairs: (2..=n + 3)
                    .map(|block| {
                        let ids = pair_ids[&(block, name)];
                        let mut p = [pos(ids[0]), pos(ids[1])];
                        p.sort();
                        p
                    })
                    .collect(),
            })
            .collect(),
    };

    Ok(ReductionOutput { permutation, sentence: None, meta })
}

/// Points of `p` strictly inside the open rectangle spanned by the two
/// pairs in both orders.
fn rectangle_between(p: &Permutation, a: [usize; 2], b: [usize; 2]) -> Vec<usize> {
    let (ahi, blo) = (a[0].max(a[1]), b[0].min(b[1]));
    let (bhi, alo) = (b[0].max(b[1]), a[0].min(a[1]));
    let (plo, phi) = if ahi < blo { (ahi, blo) } else { (bhi, alo) };
    let va: Vec<usize> = a.iter().map(|&q| p.value(q)).collect();
    let vb: Vec<usize> = b.iter().map(|&q| p.value(q)).collect();
    let (amax, bmin) = (*va.iter().max().unwrap(), *vb.iter().min().unwrap());
    let (bmax, amin) = (*vb.iter().max().unwrap(), *va.iter().min().unwrap());
    let (vlo, vhi) = if amax < bmin { (amax, bmin) } else { (bmax, amin) };
    if phi < plo + 1 || vhi < vlo + 1 {
        return Vec::new();
    }
    (plo + 1..phi).filter(|&q| p.value(q) > vlo && p.value(q) < vhi).collect()
}

/// Reads the graph back from an encoded permutation; validates the meta
/// against the permutation as it goes.
pub fn decode_graph(out: &ReductionOutput) -> Result<Graph, ReduceError> {
    let meta = &out.meta;
    let p = &out.permutation;
    let n = meta.n;
    let b2_pairs = meta.pairs.iter().filter(|pm| pm.block == 2).count();
    if b2_pairs != 2 * n + 3 {
        return Err(ReduceError::InconsistentMeta(format!(
            "block 2 registers {b2_pairs} pairs, expected {}",
            2 * n + 3
        )));
    }
    for pm in &meta.pairs {
        for &q in &pm.positions {
            if q == 0 || q > p.len() {
                return Err(ReduceError::InconsistentMeta(format!(
                    "pair {} position {q} out of range",
                    pm.name
                )));
            }
        }
    }
    let pair = |name: PairName, block: usize| -> Result<[usize; 2], ReduceError> {
        out.pair_positions(name, block).ok_or_else(|| {
            ReduceError::InconsistentMeta(format!("missing pair {name} in block {block}"))
        })
    };
    let mut g = Graph::new(n);
    for i in 1..=n {
        let block = i + 3;
        for j in 1..=n {
            let x = pair(PairName::X(j), block)?;
            let y = pair(PairName::Y(j), block)?;
            let count = rectangle_between(p, x, y).len();
            match (count, j == i) {
                (2, true) | (0, false) => {}
                (1, false) => {
                    g.add_edge(i, j).map_err(|e| ReduceError::InconsistentMeta(e.to_string()))?;
                }
                (got, _) => {
                    return Err(ReduceError::InconsistentMeta(format!(
                        "block {block} slot {j} holds {got} marker points"
                    )));
                }
            }
        }
    }
    Ok(g)
}

/// The least point set containing the named block-2 pair that is closed
/// under the strip-chasing rules: whenever two members have an empty open
/// interval in one order and a two-point open interval in the other, those
/// two points join the set.
pub fn track_closure(out: &ReductionOutput, name: PairName) -> Result<BTreeSet<usize>, ReduceError> {
    let seed = out
        .pair_positions(name, 2)
        .ok_or_else(|| ReduceError::UnknownPair(name.to_string()))?;
    let p = &out.permutation;
    let mut set: BTreeSet<usize> = seed.into_iter().collect();
    loop {
        let mut grew = false;
        let members: Vec<usize> = set.iter().copied().collect();
        for (ai, &a) in members.iter().enumerate() {
            for &b in &members[ai + 1..] {
                for (r1, r2) in absorbed(p, a, b) {
                    if set.insert(r1) | set.insert(r2) {
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            return Ok(set);
        }
    }
}

/// Checks a set against the absorption rules without growing it: true when
/// no rule demands a point outside `set`. (Containing the seed pair is the
/// remaining rule, checked by callers.)
pub fn satisfies_closure_rules(p: &Permutation, set: &BTreeSet<usize>) -> bool {
    let members: Vec<usize> = set.iter().copied().collect();
    for (ai, &a) in members.iter().enumerate() {
        for &b in &members[ai + 1..] {
            for (r1, r2) in absorbed(p, a, b) {
                if !set.contains(&r1) || !set.contains(&r2) {
                    return false;
                }
            }
        }
    }
    true
}

/// Points a member pair forces into the closure: each rule fires when one
/// open interval is empty and the other holds exactly two points.
fn absorbed(p: &Permutation, a: usize, b: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (plo, phi) = (a.min(b), a.max(b));
    let (va, vb) = (p.value(a), p.value(b));
    let (vlo, vhi) = (va.min(vb), va.max(vb));
    let pos_between: Vec<usize> = (plo + 1..phi).collect();
    let val_between: Vec<usize> = (vlo + 1..vhi).map(|v| p.position_of(v)).collect();
    if pos_between.is_empty() && val_between.len() == 2 {
        out.push((val_between[0], val_between[1]));
    }
    if val_between.is_empty() && pos_between.len() == 2 {
        out.push((pos_between[0], pos_between[1]));
    }
    out
}

// ---------------------------------------------------------------------
// Sentence translation
// ---------------------------------------------------------------------

struct Ctx {
    a1: String,
    a2: String,
    tz: [String; 3],
    vertex_vars: BTreeMap<String, (String, String)>,
}

fn lt(alpha: u8, a: &str, b: &str) -> Formula {
    Formula::atom(format!("<{alpha}"), vec![a, b])
}

/// Unordered strict betweenness in order `alpha`.
fn between(alpha: u8, w: &str, a: &str, b: &str) -> Formula {
    Formula::or(
        Formula::and(lt(alpha, a, w), lt(alpha, w, b)),
        Formula::and(lt(alpha, b, w), lt(alpha, w, a)),
    )
}

fn empty_between(alpha: u8, a: &str, b: &str, fresh: &mut FreshNames) -> Formula {
    let w = fresh.elem();
    Formula::not(Formula::exists(&w, between(alpha, &w, a, b)))
}

/// Global immediate successor in order `alpha`.
fn succ(alpha: u8, a: &str, b: &str, fresh: &mut FreshNames) -> Formula {
    Formula::and(lt(alpha, a, b), empty_between(alpha, a, b, fresh))
}

/// Exactly `k` points (k = 1 or 2) lie strictly between `a` and `b` in
/// order `alpha`.
fn exactly_between(alpha: u8, k: usize, a: &str, b: &str, fresh: &mut FreshNames) -> Formula {
    let w = fresh.elem();
    match k {
        1 => {
            let w1 = fresh.elem();
            Formula::exists(
                &w1,
                Formula::and(
                    between(alpha, &w1, a, b),
                    Formula::forall(
                        &w,
                        Formula::implies(between(alpha, &w, a, b), Formula::equal(&w, &w1)),
                    ),
                ),
            )
        }
        2 => {
            let w1 = fresh.elem();
            let w2 = fresh.elem();
            Formula::exists_all(
                &[&w1, &w2],
                Formula::and_all(vec![
                    Formula::not(Formula::equal(&w1, &w2)),
                    between(alpha, &w1, a, b),
                    between(alpha, &w2, a, b),
                    Formula::forall(
                        &w,
                        Formula::implies(
                            between(alpha, &w, a, b),
                            Formula::or(Formula::equal(&w, &w1), Formula::equal(&w, &w2)),
                        ),
                    ),
                ]),
            )
        }
        _ => unreachable!("only counts 1 and 2 are needed"),
    }
}

fn subset(sub: &str, sup: &str, fresh: &mut FreshNames) -> Formula {
    let u = fresh.elem();
    Formula::forall(&u, Formula::implies(Formula::member(&u, sub), Formula::member(&u, sup)))
}

fn set_equal(a: &str, b: &str, fresh: &mut FreshNames) -> Formula {
    let u = fresh.elem();
    Formula::forall(&u, Formula::iff(Formula::member(&u, a), Formula::member(&u, b)))
}

fn proper_subset(sub: &str, sup: &str, fresh: &mut FreshNames) -> Formula {
    let u = fresh.elem();
    Formula::and(
        subset(sub, sup, fresh),
        Formula::exists(
            &u,
            Formula::and(Formula::member(&u, sup), Formula::not(Formula::member(&u, sub))),
        ),
    )
}

/// The closure conditions: the pair belongs to `t` and both absorption
/// rules hold inside `t`.
fn suptrack(p: &str, q: &str, t: &str, fresh: &mut FreshNames) -> Formula {
    let q1 = fresh.elem();
    let q2 = fresh.elem();
    let rule = |first: u8, second: u8, fresh: &mut FreshNames| {
        let r1 = fresh.elem();
        let r2 = fresh.elem();
        let all_w = fresh.elem();
        Formula::implies(
            empty_between(first, &q1, &q2, fresh),
            Formula::forall_all(
                &[&r1, &r2],
                Formula::implies(
                    Formula::and_all(vec![
                        Formula::not(Formula::equal(&r1, &r2)),
                        between(second, &r1, &q1, &q2),
                        between(second, &r2, &q1, &q2),
                        Formula::forall(
                            &all_w,
                            Formula::implies(
                                between(second, &all_w, &q1, &q2),
                                Formula::or(
                                    Formula::equal(&all_w, &r1),
                                    Formula::equal(&all_w, &r2),
                                ),
                            ),
                        ),
                    ]),
                    Formula::and(Formula::member(&r1, t), Formula::member(&r2, t)),
                ),
            ),
        )
    };
    let rule_a = rule(1, 2, fresh);
    let rule_b = rule(2, 1, fresh);
    Formula::and_all(vec![
        Formula::member(p, t),
        Formula::member(q, t),
        Formula::forall_all(
            &[&q1, &q2],
            Formula::implies(
                Formula::and(Formula::member(&q1, t), Formula::member(&q2, t)),
                Formula::and(rule_a, rule_b),
            ),
        ),
    ])
}

/// `t` is exactly the track seeded by the pair: closed under the rules and
/// minimal with respect to inclusion.
fn track(p: &str, q: &str, t: &str, fresh: &mut FreshNames) -> Formula {
    let s = fresh.set();
    Formula::and(
        suptrack(p, q, t, fresh),
        Formula::forall_set(
            &s,
            Formula::implies(proper_subset(&s, t, fresh), Formula::not(suptrack(p, q, &s, fresh))),
        ),
    )
}

/// `tx`/`ty` are the two tracks of one vertex: seeded by consecutive pairs
/// inside the anchor strip whose block-3 strips hold two points each with
/// exactly one separator between them.
fn vertex_pred(tx: &str, ty: &str, ctx: &Ctx, fresh: &mut FreshNames) -> Formula {
    let p1 = fresh.elem();
    let q1 = fresh.elem();
    let p2 = fresh.elem();
    let q2 = fresh.elem();
    let in_strip = |v: &str| Formula::and(lt(2, &ctx.a1, v), lt(2, v, &ctx.a2));
    let body = Formula::and_all(vec![
        in_strip(&p1),
        in_strip(&q1),
        in_strip(&p2),
        in_strip(&q2),
        succ(2, &p1, &q1, fresh),
        succ(2, &q1, &p2, fresh),
        succ(2, &p2, &q2, fresh),
        exactly_between(1, 2, &p1, &q1, fresh),
        exactly_between(1, 2, &p2, &q2, fresh),
        exactly_between(1, 1, &q1, &p2, fresh),
        track(&p1, &q1, tx, fresh),
        track(&p2, &q2, ty, fresh),
    ]);
    Formula::exists_all(&[&p1, &q1, &p2, &q2], body)
}

/// Set quantifiers range over unions of vertex tracks.
fn union_of_tracks(x: &str, ctx: &Ctx, fresh: &mut FreshNames) -> Formula {
    let v = fresh.elem();
    let ta = fresh.set();
    let tb = fresh.set();
    let body = Formula::and_all(vec![
        vertex_pred(&ta, &tb, ctx, fresh),
        subset(&ta, x, fresh),
        subset(&tb, x, fresh),
        Formula::or(Formula::member(&v, &ta), Formula::member(&v, &tb)),
    ]);
    Formula::forall(
        &v,
        Formula::implies(
            Formula::member(&v, x),
            Formula::exists_set(&ta, Formula::exists_set(&tb, body)),
        ),
    )
}

/// Flips the argument order of `<1` (when `flip_cols`) and `<2` (when
/// `flip_rows`) atoms: the four block orientations are symmetric images of
/// the base one.
fn swap_order_atoms(f: &Formula, flip_cols: bool, flip_rows: bool) -> Formula {
    let rec = |g: &Formula| swap_order_atoms(g, flip_cols, flip_rows);
    match f {
        Formula::Atom { rel, args } if rel == "<1" && flip_cols => {
            Formula::atom("<1", vec![&args[1], &args[0]])
        }
        Formula::Atom { rel, args } if rel == "<2" && flip_rows => {
            Formula::atom("<2", vec![&args[1], &args[0]])
        }
        Formula::Not(a) => Formula::not(rec(a)),
        Formula::And(a, b) => Formula::and(rec(a), rec(b)),
        Formula::Or(a, b) => Formula::or(rec(a), rec(b)),
        Formula::Implies(a, b) => Formula::implies(rec(a), rec(b)),
        Formula::Iff(a, b) => Formula::iff(rec(a), rec(b)),
        Formula::Exists { var, body } => Formula::exists(var, rec(body)),
        Formula::Forall { var, body } => Formula::forall(var, rec(body)),
        Formula::ExistsSet { var, body } => Formula::exists_set(var, rec(body)),
        Formula::ForallSet { var, body } => Formula::forall_set(var, rec(body)),
        leaf => leaf.clone(),
    }
}

/// The base-orientation block predicate: `s` is a rectangle in both
/// orders, increasing, meets each anchor track in exactly two points, and
/// its two lowest points lie on the first track, its two highest on the
/// third.
fn block_base(s: &str, ctx: &Ctx, fresh: &mut FreshNames) -> Formula {
    let le = |alpha: u8, a: &str, b: &str| Formula::or(lt(alpha, a, b), Formula::equal(a, b));
    let p = fresh.elem();
    let q = fresh.elem();
    let r = fresh.elem();
    let t = fresh.elem();
    let w = fresh.elem();
    let rectangle = Formula::exists_all(
        &[&p, &q, &r, &t],
        Formula::forall(
            &w,
            Formula::iff(
                Formula::member(&w, s),
                Formula::and_all(vec![le(1, &p, &w), le(1, &w, &q), le(2, &r, &w), le(2, &w, &t)]),
            ),
        ),
    );
    let u = fresh.elem();
    let v = fresh.elem();
    let increasing = Formula::forall_all(
        &[&u, &v],
        Formula::implies(
            Formula::and(Formula::member(&u, s), Formula::member(&v, s)),
            Formula::iff(lt(1, &u, &v), lt(2, &u, &v)),
        ),
    );
    let mut conjuncts = vec![rectangle, increasing];
    for tz in &ctx.tz {
        let u = fresh.elem();
        let v = fresh.elem();
        let w = fresh.elem();
        let both = |x: &str| Formula::and(Formula::member(x, s), Formula::member(x, tz));
        conjuncts.push(Formula::exists_all(
            &[&u, &v],
            Formula::and_all(vec![
                Formula::not(Formula::equal(&u, &v)),
                both(&u),
                both(&v),
                Formula::forall(
                    &w,
                    Formula::implies(
                        both(&w),
                        Formula::or(Formula::equal(&w, &u), Formula::equal(&w, &v)),
                    ),
                ),
            ]),
        ));
    }
    for (tz, lowest) in [(&ctx.tz[0], true), (&ctx.tz[2], false)] {
        let u = fresh.elem();
        let v = fresh.elem();
        let w = fresh.elem();
        let extreme = if lowest {
            Formula::and(lt(2, &u, &w), lt(2, &v, &w))
        } else {
            Formula::and(lt(2, &w, &u), lt(2, &w, &v))
        };
        conjuncts.push(Formula::exists_all(
            &[&u, &v],
            Formula::and_all(vec![
                Formula::not(Formula::equal(&u, &v)),
                Formula::member(&u, s),
                Formula::member(&v, s),
                Formula::member(&u, tz),
                Formula::member(&v, tz),
                Formula::forall(
                    &w,
                    Formula::implies(
                        Formula::and_all(vec![
                            Formula::member(&w, s),
                            Formula::not(Formula::equal(&w, &u)),
                            Formula::not(Formula::equal(&w, &v)),
                        ]),
                        extreme,
                    ),
                ),
            ]),
        ));
    }
    Formula::and_all(conjuncts)
}

/// Exactly `k` points lie between the pairs `a ∩ s` and `b ∩ s` in both
/// orders at once (inside the open rectangle spanned by the two pairs).
fn exactly_between_rect(k: usize, a: &str, b: &str, s: &str, fresh: &mut FreshNames) -> Formula {
    let betw = |w: &str, fresh: &mut FreshNames| {
        let dir = |alpha: u8, fresh: &mut FreshNames| {
            let u = fresh.elem();
            let v = fresh.elem();
            let in_a = |x: &str| Formula::and(Formula::member(x, a), Formula::member(x, s));
            let in_b = |x: &str| Formula::and(Formula::member(x, b), Formula::member(x, s));
            let a_below = Formula::and(
                Formula::forall(&u, Formula::implies(in_a(&u), lt(alpha, &u, w))),
                Formula::forall(&v, Formula::implies(in_b(&v), lt(alpha, w, &v))),
            );
            let b_below = Formula::and(
                Formula::forall(&u, Formula::implies(in_b(&u), lt(alpha, &u, w))),
                Formula::forall(&v, Formula::implies(in_a(&v), lt(alpha, w, &v))),
            );
            Formula::or(a_below, b_below)
        };
        Formula::and(dir(1, fresh), dir(2, fresh))
    };
    let w = fresh.elem();
    match k {
        1 => {
            let w1 = fresh.elem();
            let b1 = betw(&w1, fresh);
            let ball = betw(&w, fresh);
            Formula::exists(
                &w1,
                Formula::and(
                    b1,
                    Formula::forall(&w, Formula::implies(ball, Formula::equal(&w, &w1))),
                ),
            )
        }
        2 => {
            let w1 = fresh.elem();
            let w2 = fresh.elem();
            let b1 = betw(&w1, fresh);
            let b2 = betw(&w2, fresh);
            let ball = betw(&w, fresh);
            Formula::exists_all(
                &[&w1, &w2],
                Formula::and_all(vec![
                    Formula::not(Formula::equal(&w1, &w2)),
                    b1,
                    b2,
                    Formula::forall(
                        &w,
                        Formula::implies(
                            ball,
                            Formula::or(Formula::equal(&w, &w1), Formula::equal(&w, &w2)),
                        ),
                    ),
                ]),
            )
        }
        _ => unreachable!(),
    }
}

/// `E(x, y)` translated: some block contains the two-point marker between
/// x's tracks and the one-point marker between y's.
fn edge_pred(
    txx: &str,
    tyx: &str,
    txy: &str,
    tyy: &str,
    ctx: &Ctx,
    fresh: &mut FreshNames,
) -> Formula {
    let s = fresh.set();
    let base = block_base(&s, ctx, fresh);
    let variants: Vec<Formula> = [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .map(|&(fc, fr)| swap_order_atoms(&base, fc, fr))
        .collect();
    let block_any = Formula::or_all(variants);
    let marks = Formula::and(
        exactly_between_rect(2, txx, tyx, &s, fresh),
        exactly_between_rect(1, txy, tyy, &s, fresh),
    );
    Formula::exists_set(&s, Formula::and(block_any, marks))
}

fn anchor_pred(ctx: &Ctx, fresh: &mut FreshNames) -> Formula {
    let x = fresh.elem();
    Formula::and(
        lt(2, &ctx.a1, &ctx.a2),
        Formula::forall(
            &x,
            Formula::or_all(vec![
                Formula::equal(&x, &ctx.a1),
                Formula::equal(&x, &ctx.a2),
                Formula::and(lt(1, &ctx.a1, &x), lt(1, &ctx.a2, &x)),
            ]),
        ),
    )
}

fn z_binding(ctx: &Ctx, fresh: &mut FreshNames, inner: Formula) -> Formula {
    let p1 = fresh.elem();
    let q1 = fresh.elem();
    let p2 = fresh.elem();
    let q2 = fresh.elem();
    let p3 = fresh.elem();
    let q3 = fresh.elem();
    let chain = Formula::and_all(vec![
        succ(2, &ctx.a1, &p1, fresh),
        succ(2, &p1, &q1, fresh),
        succ(2, &p2, &q2, fresh),
        succ(2, &q2, &p3, fresh),
        succ(2, &p3, &q3, fresh),
        succ(2, &q3, &ctx.a2, fresh),
        track(&p1, &q1, &ctx.tz[0], fresh),
        track(&p2, &q2, &ctx.tz[1], fresh),
        track(&p3, &q3, &ctx.tz[2], fresh),
    ]);
    let bound = Formula::exists_all(&[&p1, &q1, &p2, &q2, &p3, &q3], Formula::and(chain, inner));
    let mut out = bound;
    for tz in ctx.tz.iter().rev() {
        out = Formula::exists_set(tz, out);
    }
    out
}

fn resolve_vertex(ctx: &Ctx, var: &str) -> Result<(String, String), ReduceError> {
    ctx.vertex_vars
        .get(var)
        .cloned()
        .ok_or_else(|| ReduceError::NonGraphAtom(format!("unbound vertex variable {var}")))
}

fn translate_core(phi: &Formula, ctx: &mut Ctx, fresh: &mut FreshNames) -> Result<Formula, ReduceError> {
    match phi {
        Formula::Atom { rel, args } if rel == "E" => {
            let (txx, tyx) = resolve_vertex(ctx, &args[0])?;
            let (txy, tyy) = resolve_vertex(ctx, &args[1])?;
            Ok(edge_pred(&txx, &tyx, &txy, &tyy, ctx, fresh))
        }
        Formula::Atom { rel, .. } => Err(ReduceError::NonGraphAtom(rel.clone())),
        Formula::Card { .. } => Err(ReduceError::CardAtomUnsupported),
        Formula::Equal(x, y) => {
            let (txx, _) = resolve_vertex(ctx, x)?;
            let (txy, _) = resolve_vertex(ctx, y)?;
            Ok(set_equal(&txx, &txy, fresh))
        }
        Formula::Member { element, set } => {
            let (txx, tyx) = resolve_vertex(ctx, element)?;
            Ok(Formula::and(subset(&txx, set, fresh), subset(&tyx, set, fresh)))
        }
        Formula::Not(a) => Ok(Formula::not(translate_core(a, ctx, fresh)?)),
        Formula::And(a, b) => {
            Ok(Formula::and(translate_core(a, ctx, fresh)?, translate_core(b, ctx, fresh)?))
        }
        Formula::Or(a, b) => {
            Ok(Formula::or(translate_core(a, ctx, fresh)?, translate_core(b, ctx, fresh)?))
        }
        Formula::Implies(a, b) => {
            Ok(Formula::implies(translate_core(a, ctx, fresh)?, translate_core(b, ctx, fresh)?))
        }
        Formula::Iff(a, b) => {
            Ok(Formula::iff(translate_core(a, ctx, fresh)?, translate_core(b, ctx, fresh)?))
        }
        Formula::Exists { var, body } | Formula::Forall { var, body } => {
            let tx = fresh.set();
            let ty = fresh.set();
            let saved = ctx.vertex_vars.insert(var.clone(), (tx.clone(), ty.clone()));
            let inner = translate_core(body, ctx, fresh)?;
            match saved {
                Some(old) => {
                    ctx.vertex_vars.insert(var.clone(), old);
                }
                None => {
                    ctx.vertex_vars.remove(var);
                }
            }
            let vp = vertex_pred(&tx, &ty, ctx, fresh);
            Ok(if matches!(phi, Formula::Exists { .. }) {
                Formula::exists_set(&tx, Formula::exists_set(&ty, Formula::and(vp, inner)))
            } else {
                Formula::forall_set(&tx, Formula::forall_set(&ty, Formula::implies(vp, inner)))
            })
        }
        Formula::ExistsSet { var, body } => {
            let guard = union_of_tracks(var, ctx, fresh);
            let inner = translate_core(body, ctx, fresh)?;
            Ok(Formula::exists_set(var, Formula::and(guard, inner)))
        }
        Formula::ForallSet { var, body } => {
            let guard = union_of_tracks(var, ctx, fresh);
            let inner = translate_core(body, ctx, fresh)?;
            Ok(Formula::forall_set(var, Formula::implies(guard, inner)))
        }
    }
}

/// Translates a graph sentence into a two-order sentence that holds on an
/// encoded permutation iff the original holds on the encoded graph. The
/// output depends only on the input sentence, not on any oracle.
pub fn translate_sentence(phi: &Formula) -> Result<Formula, ReduceError> {
    if !phi.is_sentence() {
        return Err(ReduceError::NotASentence);
    }
    let mut fresh = FreshNames::new(phi.all_var_names());
    let a1 = fresh.elem();
    let a2 = fresh.elem();
    let tz = [fresh.set(), fresh.set(), fresh.set()];
    let mut ctx = Ctx { a1, a2, tz, vertex_vars: BTreeMap::new() };
    let core = translate_core(phi, &mut ctx, &mut fresh)?;
    let anchored = Formula::and(anchor_pred(&ctx, &mut fresh), z_binding(&ctx, &mut fresh, core));
    let (a1, a2) = (ctx.a1.clone(), ctx.a2.clone());
    Ok(Formula::exists(&a1, Formula::exists(&a2, anchored)))
}

/// Runs the full reduction: encode the graph and translate the sentence.
pub fn reduce(
    g: &Graph,
    phi: &Formula,
    oracle: &dyn GriddingOracle,
) -> Result<ReductionOutput, ReduceError> {
    let mut out = encode_graph(g, oracle)?;
    out.sentence = Some(translate_sentence(phi)?);
    Ok(out)
}
