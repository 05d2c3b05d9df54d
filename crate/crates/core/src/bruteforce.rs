//! Exhaustive search over small Boolean matrices up to row and column
//! permutations: the minimal number of parallel row/column-operation layers
//! that reduces each class to a partial permutation, with a witness sequence.
//!
//! Matrices of shape `r×c` (`r·c ≤ 25`) are encoded column-major in a `u64`:
//! bit `j·r + i` holds entry `(i, j)`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use crate::dacsynth::{Layer, OpKind, OpRecord};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// Largest tile side the search supports.
pub const MAX_K: usize = 5;

const MAGIC: &[u8; 4] = b"LRBT";
const VERSION: u16 = 1;

/// Canonical encoding of a matrix class under independent row and column
/// permutations: the smallest code over all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub rows: usize,
    pub cols: usize,
    pub code: u64,
}

/// Canonical key plus the maps realizing it:
/// `canonical[i][j] = m[row_map[i]][col_map[j]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    pub key: CanonicalKey,
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                go(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Row bitmasks (bit `j` = column `j`).
type Rows = [u8; 8];

fn encode(rows: &Rows, r: usize, c: usize) -> u64 {
    let mut code = 0u64;
    for (i, &row) in rows.iter().enumerate().take(r) {
        for j in 0..c {
            code |= u64::from(row >> j & 1) << (j * r + i);
        }
    }
    code
}

fn decode(code: u64, r: usize, c: usize) -> Rows {
    let mut rows = [0u8; 8];
    for (i, row) in rows.iter_mut().enumerate().take(r) {
        for j in 0..c {
            *row |= ((code >> (j * r + i) & 1) as u8) << j;
        }
    }
    rows
}

fn to_rows(m: &BitMatrix) -> Rows {
    let mut rows = [0u8; 8];
    for (i, row) in rows.iter_mut().enumerate().take(m.rows()) {
        for j in 0..m.cols() {
            *row |= (m.get(i, j) as u8) << j;
        }
    }
    rows
}

/// Column values of `rows` with rows reordered by `sigma`.
fn column_values(rows: &Rows, sigma: &[usize], c: usize) -> [u64; 8] {
    let mut vals = [0u64; 8];
    for (i, &s) in sigma.iter().enumerate() {
        let row = rows[s];
        for (j, v) in vals.iter_mut().enumerate().take(c) {
            *v |= u64::from(row >> j & 1) << i;
        }
    }
    vals
}

fn canonical_rows(rows: &Rows, r: usize, c: usize, row_perms: &[Vec<usize>]) -> Canonical {
    let mut best: Option<Canonical> = None;
    for sigma in row_perms {
        let vals = column_values(rows, sigma, c);
        // the most significant column must be the smallest
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&x, &y| vals[y].cmp(&vals[x]).then(x.cmp(&y)));
        let code = order
            .iter()
            .enumerate()
            .fold(0u64, |acc, (p, &j)| acc | vals[j] << (p * r));
        if best.as_ref().is_none_or(|b| code < b.key.code) {
            best = Some(Canonical {
                key: CanonicalKey {
                    rows: r,
                    cols: c,
                    code,
                },
                row_map: sigma.clone(),
                col_map: order,
            });
        }
    }
    best.expect("at least one permutation")
}

/// Canonical form of `m` (at most 6×6) with its transform. Exact minimum
/// over all row permutations; for each, the best column order is a sort.
pub fn canonical_transform(m: &BitMatrix) -> Canonical {
    let (r, c) = (m.rows(), m.cols());
    assert!(r <= 6 && c <= 6, "canonical form supports at most 6x6");
    canonical_rows(&to_rows(m), r, c, &permutations(r))
}

pub fn canonical_form(m: &BitMatrix) -> CanonicalKey {
    canonical_transform(m).key
}

/// Every layer of disjoint directed row operations combined with disjoint
/// directed column operations, including the empty side.
fn directed_matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(free: u32, n: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some(a) = (0..n).find(|&v| free >> v & 1 == 1) else {
            out.push(cur.clone());
            return;
        };
        let rest = free & !(1 << a);
        go(rest, n, cur, out);
        for b in (a + 1..n).filter(|&b| rest >> b & 1 == 1) {
            for pair in [(a, b), (b, a)] {
                cur.push(pair);
                go(rest & !(1 << b), n, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go((1u32 << n) - 1, n, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub depth: usize,
    /// Layers reducing the canonical representative to a partial permutation.
    pub witness: Vec<Layer>,
}

/// Search result for one tile shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeTable {
    pub rows: usize,
    pub cols: usize,
    /// Number of classes first reached at each depth.
    pub counts: Vec<usize>,
    pub classes: HashMap<u64, ClassEntry>,
}

impl ShapeTable {
    pub fn max_depth(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    pub fn representative(&self, code: u64) -> BitMatrix {
        let rows = decode(code, self.rows, self.cols);
        BitMatrix::from_fn(self.rows, self.cols, |i, j| rows[i] >> j & 1 == 1)
    }
}

/// Breadth-first search from the partial permutations of shape `r×c`,
/// stopping after `max_depth` expansions or when nothing new is reached.
pub fn bfs_depth_classes(r: usize, c: usize, max_depth: usize) -> Result<ShapeTable> {
    if r == 0 || c == 0 || r > MAX_K || c > MAX_K {
        return Err(Error::UnsupportedK(r.max(c)));
    }
    let row_perms = permutations(r);
    let col_perms = permutations(c);
    let bits = r * c;
    let mut seen = vec![0u64; (1usize << bits).div_ceil(64)];
    let mark_orbit = |seen: &mut Vec<u64>, rows: &Rows| {
        for sigma in &row_perms {
            let vals = column_values(rows, sigma, c);
            for tau in &col_perms {
                let code = tau
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (p, &j)| acc | vals[j] << (p * r))
                    as usize;
                seen[code / 64] |= 1 << (code % 64);
            }
        }
    };
    let is_seen = |seen: &[u64], code: u64| seen[code as usize / 64] >> (code % 64) & 1 == 1;

    // (row operations, column operations) of each nonempty depth-1 layer
    type Moves = Vec<(usize, usize)>;
    let layers: Vec<(Moves, Moves)> = {
        let rm = directed_matchings(r);
        let cm = directed_matchings(c);
        rm.iter()
            .flat_map(|a| cm.iter().map(move |b| (a.clone(), b.clone())))
            .filter(|(a, b)| !a.is_empty() || !b.is_empty())
            .collect()
    };

    let mut classes: HashMap<u64, ClassEntry> = HashMap::new();
    let mut counts = Vec::new();
    let mut frontier = Vec::new();
    for rank in 0..=r.min(c) {
        let mut rows = [0u8; 8];
        for (i, row) in rows.iter_mut().enumerate().take(rank) {
            *row = 1 << i;
        }
        let canon = canonical_rows(&rows, r, c, &row_perms);
        let rows = decode(canon.key.code, r, c);
        mark_orbit(&mut seen, &rows);
        classes.insert(
            canon.key.code,
            ClassEntry {
                depth: 0,
                witness: Vec::new(),
            },
        );
        frontier.push(canon.key.code);
    }
    counts.push(frontier.len());

    for depth in 1..=max_depth {
        let mut next = Vec::new();
        for &xcode in &frontier {
            let x = decode(xcode, r, c);
            for (row_ops, col_ops) in &layers {
                let mut y = x;
                for &(a, b) in row_ops {
                    y[b] ^= y[a];
                }
                for &(a, b) in col_ops {
                    for row in y.iter_mut().take(r) {
                        *row ^= (*row >> a & 1) << b;
                    }
                }
                if is_seen(&seen, encode(&y, r, c)) {
                    continue;
                }
                mark_orbit(&mut seen, &y);
                let canon = canonical_rows(&y, r, c, &row_perms);
                let mut rinv = vec![0; r];
                for (i, &s) in canon.row_map.iter().enumerate() {
                    rinv[s] = i;
                }
                let mut cinv = vec![0; c];
                for (p, &j) in canon.col_map.iter().enumerate() {
                    cinv[j] = p;
                }
                // reduce y: undo the layer (an involution), then follow x's witness
                let first = Layer::new(
                    row_ops
                        .iter()
                        .map(|&(a, b)| OpRecord::row(a, b))
                        .chain(col_ops.iter().map(|&(a, b)| OpRecord::col(a, b)))
                        .collect(),
                );
                let witness = std::iter::once(&first)
                    .chain(classes[&xcode].witness.iter())
                    .map(|l| l.mapped(|i| rinv[i], |j| cinv[j]))
                    .collect();
                classes.insert(canon.key.code, ClassEntry { depth, witness });
                next.push(canon.key.code);
            }
        }
        if next.is_empty() {
            break;
        }
        counts.push(next.len());
        frontier = next;
    }
    Ok(ShapeTable {
        rows: r,
        cols: c,
        counts,
        classes,
    })
}

/// Optimal reduction sequences for every tile shape up to `k×k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTables {
    k: usize,
    /// Indexed by `(rows - 1) * k + (cols - 1)`.
    shapes: Vec<ShapeTable>,
}

impl BlockTables {
    pub fn build(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::UnsupportedK(k));
        }
        let mut shapes = Vec::with_capacity(k * k);
        for r in 1..=k {
            for c in 1..=k {
                shapes.push(bfs_depth_classes(r, c, usize::MAX)?);
            }
        }
        Ok(BlockTables { k, shapes })
    }

    /// Tables built once per process and shared.
    pub fn cached(k: usize) -> Result<Arc<BlockTables>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<BlockTables>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().unwrap().get(&k) {
            return Ok(t.clone());
        }
        let built = Arc::new(BlockTables::build(k)?);
        cache.lock().unwrap().insert(k, built.clone());
        Ok(built)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn shape(&self, rows: usize, cols: usize) -> Option<&ShapeTable> {
        if rows == 0 || cols == 0 || rows > self.k || cols > self.k {
            return None;
        }
        Some(&self.shapes[(rows - 1) * self.k + (cols - 1)])
    }

    /// Class counts per depth for the square `k×k` shape.
    pub fn depth_counts(&self) -> &[usize] {
        &self.shape(self.k, self.k).expect("square shape").counts
    }

    /// Worst case over every stored shape.
    pub fn max_depth(&self) -> usize {
        self.shapes
            .iter()
            .map(ShapeTable::max_depth)
            .max()
            .unwrap_or(0)
    }

    /// Layers reducing `m` to a partial permutation, in `m`'s coordinates.
    pub fn witness(&self, m: &BitMatrix) -> Result<Vec<Layer>> {
        let table = self
            .shape(m.rows(), m.cols())
            .ok_or(Error::MissingTable(m.rows().max(m.cols())))?;
        let canon = canonical_transform(m);
        let entry = table
            .classes
            .get(&canon.key.code)
            .ok_or(Error::MissingTable(self.k))?;
        Ok(entry
            .witness
            .iter()
            .map(|l| l.mapped(|i| canon.row_map[i], |j| canon.col_map[j]))
            .collect())
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.k as u8])?;
        for s in &self.shapes {
            w.write_all(&[s.rows as u8, s.cols as u8, s.counts.len() as u8])?;
            for &n in &s.counts {
                w.write_all(&(n as u32).to_le_bytes())?;
            }
            let mut codes: Vec<&u64> = s.classes.keys().collect();
            codes.sort();
            w.write_all(&(codes.len() as u32).to_le_bytes())?;
            for code in codes {
                let e = &s.classes[code];
                w.write_all(&code.to_le_bytes())?;
                w.write_all(&[e.depth as u8, e.witness.len() as u8])?;
                for layer in &e.witness {
                    w.write_all(&[layer.ops.len() as u8])?;
                    for op in &layer.ops {
                        let kind = match op.kind {
                            OpKind::Row => 0u8,
                            OpKind::Col => 1,
                            OpKind::Flip => 2,
                        };
                        w.write_all(&[kind, op.a as u8, op.b as u8])?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)
            .map_err(|e| Error::BadTableFile(e.to_string()))?;
        BlockTables::from_bytes(&data)
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut cur = Cursor { data, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::BadTableFile("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::BadTableFile(format!(
                "unsupported version {version}"
            )));
        }
        let k = cur.byte()? as usize;
        if k == 0 || k > MAX_K {
            return Err(Error::BadTableFile(format!("k = {k}")));
        }
        let mut shapes = Vec::new();
        for r in 1..=k {
            for c in 1..=k {
                let (rr, cc) = (cur.byte()? as usize, cur.byte()? as usize);
                if (rr, cc) != (r, c) {
                    return Err(Error::BadTableFile(format!(
                        "expected shape {r}x{c}, got {rr}x{cc}"
                    )));
                }
                let depths = cur.byte()? as usize;
                let counts = (0..depths).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
                let n_classes = cur.u32()?;
                let mut classes = HashMap::new();
                for _ in 0..n_classes {
                    let code = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
                    let depth = cur.byte()? as usize;
                    let n_layers = cur.byte()? as usize;
                    let mut witness = Vec::with_capacity(n_layers);
                    for _ in 0..n_layers {
                        let n_ops = cur.byte()? as usize;
                        let mut ops = Vec::with_capacity(n_ops);
                        for _ in 0..n_ops {
                            let (kind, a, b) =
                                (cur.byte()?, cur.byte()? as usize, cur.byte()? as usize);
                            let (kind, la, lb) = match kind {
                                0 => (OpKind::Row, r, r),
                                1 => (OpKind::Col, c, c),
                                2 => (OpKind::Flip, r, c),
                                _ => return Err(Error::BadTableFile(format!("op kind {kind}"))),
                            };
                            if a >= la || b >= lb || (kind != OpKind::Flip && a == b) {
                                return Err(Error::BadTableFile("operation out of range".into()));
                            }
                            ops.push(OpRecord { kind, a, b });
                        }
                        witness.push(Layer::new(ops));
                    }
                    if code >> (r * c) != 0 {
                        return Err(Error::BadTableFile("code wider than its shape".into()));
                    }
                    classes.insert(code, ClassEntry { depth, witness });
                }
                if counts.iter().sum::<usize>() != classes.len() {
                    return Err(Error::BadTableFile("class counts disagree".into()));
                }
                shapes.push(ShapeTable {
                    rows: r,
                    cols: c,
                    counts,
                    classes,
                });
            }
        }
        if cur.pos != data.len() {
            return Err(Error::BadTableFile("trailing bytes".into()));
        }
        Ok(BlockTables { k, shapes })
    }

    /// Replays every witness; returns the first class whose witness does
    /// not end on a partial permutation within its depth.
    pub fn find_bad_witness(&self) -> Option<(usize, usize, u64)> {
        for s in &self.shapes {
            for (&code, e) in &s.classes {
                let mut m = s.representative(code);
                let ok_layers = e.witness.len() <= e.depth
                    && e.witness.iter().all(|l| l.is_valid(s.rows, s.cols));
                for l in &e.witness {
                    l.apply(&mut m);
                }
                if !ok_layers || !is_partial_permutation(&m) {
                    return Some((s.rows, s.cols, code));
                }
            }
        }
        None
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.data.len() {
            return Err(Error::BadTableFile("truncated".into()));
        }
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn byte(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

/// At most one 1 in every row and every column.
pub fn is_partial_permutation(m: &BitMatrix) -> bool {
    (0..m.rows()).all(|i| m.row_weight(i) <= 1) && (0..m.cols()).all(|j| m.col_weight(j) <= 1)
}
