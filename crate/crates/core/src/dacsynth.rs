//! Divide-and-conquer synthesis: split the operator into 2×2 blocks, zero
//! the off-diagonal blocks through the reduced matrix `B = A3·A1⁻¹`, then
//! recurse on the two diagonal blocks, which act on disjoint wires.

use crate::bruteforce::BlockTables;
use crate::circuit::SynthesisResult;
use crate::error::{Error, Result};
use crate::gf2::{select_independent_rows, BitMatrix};
use crate::matching::{
    edge_color_bipartite, max_bipartite_matching, max_weight_matching, BipartiteGraph,
    WeightedGraph,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Row,
    Col,
    Flip,
}

/// One operation on `B`: `Row` adds row `a` into row `b`, `Col` adds column
/// `a` into column `b`, `Flip` toggles entry `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OpRecord {
    pub kind: OpKind,
    pub a: usize,
    pub b: usize,
}

impl OpRecord {
    pub fn row(a: usize, b: usize) -> Self {
        debug_assert_ne!(a, b);
        OpRecord {
            kind: OpKind::Row,
            a,
            b,
        }
    }

    pub fn col(a: usize, b: usize) -> Self {
        debug_assert_ne!(a, b);
        OpRecord {
            kind: OpKind::Col,
            a,
            b,
        }
    }

    pub fn flip(row: usize, col: usize) -> Self {
        OpRecord {
            kind: OpKind::Flip,
            a: row,
            b: col,
        }
    }

    pub fn apply(&self, m: &mut BitMatrix) {
        match self.kind {
            OpKind::Row => m.row_add(self.a, self.b),
            OpKind::Col => m.col_add(self.a, self.b),
            OpKind::Flip => m.toggle(self.a, self.b),
        }
    }

    /// Same operation with row indices mapped through `rows` and column
    /// indices through `cols`.
    pub fn mapped(&self, rows: impl Fn(usize) -> usize, cols: impl Fn(usize) -> usize) -> Self {
        match self.kind {
            OpKind::Row => OpRecord::row(rows(self.a), rows(self.b)),
            OpKind::Col => OpRecord::col(cols(self.a), cols(self.b)),
            OpKind::Flip => OpRecord::flip(rows(self.a), cols(self.b)),
        }
    }
}

/// Operations that act on disjoint wires and so fit in one time step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Layer {
    pub ops: Vec<OpRecord>,
}

impl Layer {
    pub fn new(ops: Vec<OpRecord>) -> Self {
        Layer { ops }
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn apply(&self, m: &mut BitMatrix) {
        for op in &self.ops {
            op.apply(m);
        }
    }

    /// Rows are wires on one side and columns on the other: no row may be
    /// touched twice by row operations and flips, likewise for columns.
    pub fn is_valid(&self, rows: usize, cols: usize) -> bool {
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        let take = |used: &mut Vec<bool>, i: usize| -> bool {
            if i >= used.len() || used[i] {
                return false;
            }
            used[i] = true;
            true
        };
        self.ops.iter().all(|op| match op.kind {
            OpKind::Row => op.a != op.b && take(&mut row_used, op.a) && take(&mut row_used, op.b),
            OpKind::Col => op.a != op.b && take(&mut col_used, op.a) && take(&mut col_used, op.b),
            OpKind::Flip => take(&mut row_used, op.a) && take(&mut col_used, op.b),
        })
    }

    pub fn mapped(&self, rows: impl Fn(usize) -> usize, cols: impl Fn(usize) -> usize) -> Self {
        Layer {
            ops: self.ops.iter().map(|op| op.mapped(&rows, &cols)).collect(),
        }
    }
}

/// How each off-diagonal block is zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Greedy,
    Tiled(usize),
}

impl Strategy {
    pub fn method_name(&self) -> String {
        match self {
            Strategy::Greedy => "dacsynth".into(),
            Strategy::Tiled(k) => format!("dacsynth-tiled:{k}"),
        }
    }
}

fn max_degree(b: &BitMatrix) -> usize {
    BipartiteGraph::new(b.clone()).max_degree()
}

/// One layer of flips per colour class of the ones of `B`.
pub fn flip_layers(b: &BitMatrix) -> Vec<Layer> {
    edge_color_bipartite(&BipartiteGraph::new(b.clone()))
        .into_iter()
        .map(|m| {
            Layer::new(
                m.pairs
                    .into_iter()
                    .map(|(r, c)| OpRecord::flip(r, c))
                    .collect(),
            )
        })
        .collect()
}

fn row_gain(m: &BitMatrix, a: usize, b: usize) -> i64 {
    let after: u32 = m
        .row(a)
        .iter()
        .zip(m.row(b))
        .map(|(x, y)| (x ^ y).count_ones())
        .sum();
    m.row_weight(b) as i64 - after as i64
}

/// Completes a layer with a maximum set of flips on untouched rows and columns.
fn add_flips(w: &mut BitMatrix, ops: &mut Vec<OpRecord>, row_used: &[bool], col_used: &[bool]) {
    let free = BitMatrix::from_fn(w.rows(), w.cols(), |i, j| {
        !row_used[i] && !col_used[j] && w.get(i, j)
    });
    for (r, c) in max_bipartite_matching(&BipartiteGraph::new(free)).pairs {
        w.toggle(r, c);
        ops.push(OpRecord::flip(r, c));
    }
}

/// Best-first joint layer: repeatedly take the compatible row or column
/// operation removing the most ones, then fill with flips.
fn joint_layer(b: &BitMatrix) -> (Layer, BitMatrix) {
    let mut w = b.clone();
    let mut wt = b.transpose();
    let mut row_used = vec![false; b.rows()];
    let mut col_used = vec![false; b.cols()];
    let mut ops = Vec::new();
    loop {
        let mut best: Option<(i64, OpRecord)> = None;
        for (m, used, kind) in [(&w, &row_used, OpKind::Row), (&wt, &col_used, OpKind::Col)] {
            for a in (0..m.rows()).filter(|&a| !used[a]) {
                for t in (0..m.rows()).filter(|&t| t != a && !used[t]) {
                    let g = row_gain(m, a, t);
                    if g > 0 && best.is_none_or(|(bg, _)| g > bg) {
                        best = Some((g, OpRecord { kind, a, b: t }));
                    }
                }
            }
        }
        let Some((_, op)) = best else { break };
        if op.kind == OpKind::Row {
            w.row_add(op.a, op.b);
            wt.col_add(op.a, op.b);
            row_used[op.a] = true;
            row_used[op.b] = true;
        } else {
            w.col_add(op.a, op.b);
            wt.row_add(op.a, op.b);
            col_used[op.a] = true;
            col_used[op.b] = true;
        }
        ops.push(op);
    }
    add_flips(&mut w, &mut ops, &row_used, &col_used);
    (Layer::new(ops), w)
}

/// Layer made of a maximum-gain matching of row operations only (or of
/// column operations when `cols` is set), then flips.
fn single_side_layer(b: &BitMatrix, cols: bool) -> (Layer, BitMatrix) {
    let m = if cols { b.transpose() } else { b.clone() };
    let n = m.rows();
    let mut g = WeightedGraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let w = row_gain(&m, i, j).max(row_gain(&m, j, i));
            if w > 0 {
                g.add_edge(i, j, w);
            }
        }
    }
    let mut w = b.clone();
    let mut row_used = vec![false; b.rows()];
    let mut col_used = vec![false; b.cols()];
    let mut ops = Vec::new();
    for (i, j) in max_weight_matching(&g).pairs {
        let (src, tgt) = if row_gain(&m, i, j) >= row_gain(&m, j, i) {
            (i, j)
        } else {
            (j, i)
        };
        let op = if cols {
            col_used[src] = true;
            col_used[tgt] = true;
            OpRecord::col(src, tgt)
        } else {
            row_used[src] = true;
            row_used[tgt] = true;
            OpRecord::row(src, tgt)
        };
        op.apply(&mut w);
        ops.push(op);
    }
    add_flips(&mut w, &mut ops, &row_used, &col_used);
    (Layer::new(ops), w)
}

fn has_positive_op(b: &BitMatrix) -> bool {
    let bt = b.transpose();
    [b, &bt]
        .iter()
        .any(|m| (0..m.rows()).any(|a| (0..m.rows()).any(|t| t != a && row_gain(m, a, t) > 0)))
}

/// Greedy zeroing: each layer removes as many ones as the candidates allow;
/// once no row or column operation helps, the rest is done with flips.
pub fn zero_matrix_greedy(b: &BitMatrix) -> Vec<Layer> {
    let mut w = b.clone();
    let mut layers = Vec::new();
    while !w.is_zero() {
        if !has_positive_op(&w) {
            layers.extend(flip_layers(&w));
            break;
        }
        let ones = w.count_ones();
        let mut best = joint_layer(&w);
        for cols in [false, true] {
            let cand = single_side_layer(&w, cols);
            if cand.1.count_ones() < best.1.count_ones() {
                best = cand;
            }
        }
        debug_assert!(best.0.is_valid(w.rows(), w.cols()));
        debug_assert!(best.1.count_ones() < ones);
        layers.push(best.0);
        w = best.1;
    }
    layers
}

/// Zeroing with `k×k` tiles: nonzero tiles are scheduled by colouring the
/// tile-level bipartite graph, each tile is reduced to a partial permutation
/// by its stored optimal sequence, then cleared with one flip layer.
pub fn zero_matrix_tiled(b: &BitMatrix, k: usize, tables: &BlockTables) -> Result<Vec<Layer>> {
    if k == 0 || k > tables.k() {
        return Err(Error::MissingTable(k));
    }
    let (rows, cols) = (b.rows(), b.cols());
    let tile_rows = rows.div_ceil(k);
    let tile_cols = cols.div_ceil(k);
    let span = |t: usize, total: usize| (t * k, ((t + 1) * k).min(total));
    let mut w = b.clone();
    let tiles = BitMatrix::from_fn(tile_rows, tile_cols, |ti, tj| {
        let (r0, r1) = span(ti, rows);
        let (c0, c1) = span(tj, cols);
        !b.block(r0, r1, c0, c1).is_zero()
    });
    let mut layers = Vec::new();
    for matching in edge_color_bipartite(&BipartiteGraph::new(tiles)) {
        let mut merged: Vec<Layer> = Vec::new();
        for &(ti, tj) in &matching.pairs {
            let (r0, r1) = span(ti, rows);
            let (c0, c1) = span(tj, cols);
            let tile = w.block(r0, r1, c0, c1);
            if tile.is_zero() {
                continue;
            }
            for (d, layer) in tables.witness(&tile)?.into_iter().enumerate() {
                if merged.len() <= d {
                    merged.push(Layer::default());
                }
                merged[d]
                    .ops
                    .extend(layer.mapped(|r| r + r0, |c| c + c0).ops);
            }
        }
        for layer in merged {
            layer.apply(&mut w);
            layers.push(layer);
        }
        let mut flips = Vec::new();
        for &(ti, tj) in &matching.pairs {
            let (r0, r1) = span(ti, rows);
            let (c0, c1) = span(tj, cols);
            for r in r0..r1 {
                for c in c0..c1 {
                    if w.get(r, c) {
                        flips.push(OpRecord::flip(r, c));
                    }
                }
            }
        }
        if !flips.is_empty() {
            let layer = Layer::new(flips);
            layer.apply(&mut w);
            layers.push(layer);
        }
    }
    debug_assert!(w.is_zero());
    Ok(layers)
}

struct Reducer<'a> {
    w: BitMatrix,
    gates: Vec<(usize, usize)>,
    strategy: Strategy,
    tables: Option<&'a BlockTables>,
}

impl Reducer<'_> {
    fn zero(&self, b: &BitMatrix) -> Result<Vec<Layer>> {
        match self.strategy {
            Strategy::Greedy => {
                let layers = zero_matrix_greedy(b);
                // flips alone need max-degree layers; never do worse
                if layers.len() > max_degree(b) {
                    Ok(flip_layers(b))
                } else {
                    Ok(layers)
                }
            }
            Strategy::Tiled(k) => zero_matrix_tiled(b, k, self.tables.expect("tables loaded")),
        }
    }

    /// Applies `layers` computed on `B = W[lower]·W[upper]⁻¹` (restricted to
    /// the pivot columns) as row additions on `W`.
    fn emit(&mut self, layers: &[Layer], upper: &[usize], lower: &[usize]) {
        for layer in layers {
            for op in &layer.ops {
                let (c, t) = match op.kind {
                    OpKind::Row => (lower[op.a], lower[op.b]),
                    OpKind::Col => (upper[op.b], upper[op.a]),
                    OpKind::Flip => (upper[op.b], lower[op.a]),
                };
                self.w.row_add(c, t);
                self.gates.push((c, t));
            }
        }
    }

    /// `W[rows][cols]` is invertible and `W[rows]` is zero outside `cols`.
    fn reduce(&mut self, rows: &[usize], cols: &[usize]) -> Result<()> {
        let m = rows.len();
        if m <= 1 {
            return Ok(());
        }
        let h = m.div_ceil(2);
        let (left, right) = cols.split_at(h);
        let chosen = select_independent_rows(&self.w.select(rows, left), 0..m, h);
        debug_assert_eq!(chosen.len(), h);
        let top: Vec<usize> = chosen.iter().map(|&i| rows[i]).collect();
        let bottom: Vec<usize> = rows.iter().copied().filter(|r| !top.contains(r)).collect();

        let a1_inv = self.w.select(&top, left).invert()?;
        let b = self.w.select(&bottom, left).mul(&a1_inv);
        let layers = self.zero(&b)?;
        self.emit(&layers, &top, &bottom);
        debug_assert!(self.w.select(&bottom, left).is_zero());

        let a4_inv = self.w.select(&bottom, right).invert()?;
        let b = self.w.select(&top, right).mul(&a4_inv);
        let layers = self.zero(&b)?;
        self.emit(&layers, &bottom, &top);
        debug_assert!(self.w.select(&top, right).is_zero());

        self.reduce(&top, left)?;
        self.reduce(&bottom, right)
    }
}

pub fn dacsynth(a: &BitMatrix, strategy: Strategy) -> Result<SynthesisResult> {
    let tables = match strategy {
        Strategy::Tiled(k) => Some(BlockTables::cached(k)?),
        Strategy::Greedy => None,
    };
    dacsynth_with_tables(a, strategy, tables.as_deref())
}

/// Same as [`dacsynth`] with explicitly supplied tables for the tiled strategy.
pub fn dacsynth_with_tables(
    a: &BitMatrix,
    strategy: Strategy,
    tables: Option<&BlockTables>,
) -> Result<SynthesisResult> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator",
            a.rows(),
            a.cols()
        )));
    }
    if a.rank() != a.rows() {
        return Err(Error::Singular);
    }
    if let Strategy::Tiled(k) = strategy {
        if tables.is_none_or(|t| t.k() < k) || k == 0 {
            return Err(Error::MissingTable(k));
        }
    }
    let n = a.rows();
    let mut r = Reducer {
        w: a.clone(),
        gates: Vec::new(),
        strategy,
        tables,
    };
    let all: Vec<usize> = (0..n).collect();
    r.reduce(&all, &all)?;
    Ok(SynthesisResult::from_row_reduction(
        &r.gates,
        &r.w,
        strategy.method_name(),
    ))
}
