//! Dense linear algebra over GF(2).
//!
//! [`BitMatrix`] stores each row as a run of `u64` words, so that row
//! additions cost `O(cols / 64)`. Every synthesizer in the crate works on
//! this representation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD).max(1)
}

/// Dense Boolean matrix with bit-packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Builds a matrix from rows of 0/1 values, given either as numbers or as
    /// ASCII digits (`"0110"`). All rows must have equal length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                match v {
                    0 | b'0' => {}
                    1 | b'1' => m.set(i, j, true),
                    _ => panic!("entry {v} is not 0/1"),
                }
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        (self.words[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        let w = &mut self.words[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize, j: usize) {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        self.words[i * self.stride + j / WORD] ^= 1u64 << (j % WORD);
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.words[i * self.stride..(i + 1) * self.stride]
    }

    /// `row[tgt] ^= row[src]`, i.e. left multiplication by `E_{tgt,src}`.
    pub fn row_add(&mut self, src: usize, tgt: usize) {
        assert!(src != tgt, "row_add with src == tgt");
        assert!(src < self.rows && tgt < self.rows, "row index out of range");
        let s = self.stride;
        let (a, b) = (src * s, tgt * s);
        for k in 0..s {
            let v = self.words[a + k];
            self.words[b + k] ^= v;
        }
    }

    /// `col[tgt] ^= col[src]`, i.e. right multiplication by `E_{src,tgt}`.
    pub fn col_add(&mut self, src: usize, tgt: usize) {
        assert!(src != tgt, "col_add with src == tgt");
        assert!(
            src < self.cols && tgt < self.cols,
            "column index out of range"
        );
        for i in 0..self.rows {
            if self.get(i, src) {
                self.toggle(i, tgt);
            }
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for k in 0..s {
            self.words.swap(a * s + k, b * s + k);
        }
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weight(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| self.get(i, j)).count()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.rows) && self.is_square()
    }

    /// Column indices of the ones in row `i`, ascending.
    pub fn row_ones(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * WORD + b)
                }
            })
        })
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row_ones(i).collect::<Vec<_>>() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// GF(2) product `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in multiply");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in self.row_ones(i).collect::<Vec<_>>() {
                let src = other.row(k);
                let dst = &mut out.words[i * out.stride..(i + 1) * out.stride];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d ^= s;
                }
            }
        }
        out
    }

    /// Submatrix made of the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> BitMatrix {
        BitMatrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Contiguous block `[r0, r1) x [c0, c1)`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> BitMatrix {
        BitMatrix::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j))
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut out = self.clone();
        out.rows += other.rows;
        out.words.extend_from_slice(&other.words);
        out
    }

    pub fn rank(&self) -> usize {
        let mut basis = EchelonBasis::new(self.cols);
        (0..self.rows)
            .filter(|&i| basis.insert(self.row(i)))
            .count()
    }

    /// Inverse over GF(2) via Gauss-Jordan elimination.
    pub fn invert(&self) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let pivot = (c..n).find(|&r| a.get(r, c)).ok_or(Error::Singular)?;
            a.swap_rows(c, pivot);
            inv.swap_rows(c, pivot);
            for r in 0..n {
                if r != c && a.get(r, c) {
                    a.row_add(c, r);
                    inv.row_add(c, r);
                }
            }
        }
        Ok(inv)
    }

    /// If this is a permutation matrix, returns `P` with `P.to_matrix() == self`.
    pub fn as_permutation(&self) -> Option<Permutation> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut image = vec![usize::MAX; n];
        for r in 0..n {
            let mut ones = self.row_ones(r);
            let c = ones.next()?;
            if ones.next().is_some() || image[c] != usize::MAX {
                return None;
            }
            image[c] = r;
        }
        Some(Permutation { image })
    }

    /// Factors `self = P·L·U` with `L` unit lower and `U` unit upper triangular.
    pub fn lu_decompose(
        &self,
        strategy: LuStrategy,
    ) -> Result<(Permutation, BitMatrix, BitMatrix)> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("LU of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut w = self.clone();
        // order[k] = physical row currently sitting at position k
        let mut order: Vec<usize> = (0..n).collect();
        // multipliers are attached to physical rows until the end
        let mut lphys = BitMatrix::zeros(n, n);
        for k in 0..n {
            let candidates = (k..n).filter(|&i| w.get(order[i], k));
            let chosen = match strategy {
                LuStrategy::Plain => candidates.into_iter().next(),
                LuStrategy::Sparse => candidates.min_by_key(|&i| (w.row_weight(order[i]), i)),
            }
            .ok_or(Error::Singular)?;
            order.swap(k, chosen);
            let prow = order[k];
            for &r in &order[k + 1..] {
                if w.get(r, k) {
                    lphys.set(r, k, true);
                    w.row_add(prow, r);
                }
            }
        }
        let mut l = BitMatrix::identity(n);
        let mut u = BitMatrix::zeros(n, n);
        for (pos, &r) in order.iter().enumerate() {
            for c in 0..pos {
                if lphys.get(r, c) {
                    l.set(pos, c, true);
                }
            }
            u.row_mut(pos).copy_from_slice(w.row(r));
        }
        Ok((Permutation { image: order }, l, u))
    }

    pub fn is_lower_unitriangular(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| self.get(i, i) && self.row_ones(i).all(|j| j <= i))
    }

    pub fn is_upper_unitriangular(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| self.get(i, i) && self.row_ones(i).all(|j| j >= i))
    }

    /// Permutation `P` such that the top-left `ceil(n/2)` block of `P·self` is invertible.
    ///
    /// Rows are scanned in order and kept whenever they raise the rank of the
    /// kept set restricted to the first `ceil(n/2)` columns.
    pub fn select_invertible_top_block(&self) -> Permutation {
        let h = self.rows.div_ceil(2);
        let chosen = select_independent_rows(&self.block(0, self.rows, 0, h), 0..self.rows, h);
        Permutation::moving_to_front(self.rows, &chosen)
    }

    /// Solves `W·basis = v` for `W`, i.e. returns `v · basis^{-1}`.
    pub fn decompose_in_basis(basis: &BitMatrix, v: &BitMatrix) -> Result<BitMatrix> {
        if v.cols != basis.rows {
            return Err(Error::ShapeMismatch(format!(
                "vectors have {} entries, basis has {} rows",
                v.cols, basis.rows
            )));
        }
        Ok(v.mul(&basis.invert()?))
    }
}

/// Greedily picks up to `want` rows from `candidates` (in order) that are
/// linearly independent in `m`.
pub fn select_independent_rows(
    m: &BitMatrix,
    candidates: impl IntoIterator<Item = usize>,
    want: usize,
) -> Vec<usize> {
    let mut basis = EchelonBasis::new(m.cols());
    let mut chosen = Vec::with_capacity(want);
    for r in candidates {
        if chosen.len() == want {
            break;
        }
        if basis.insert(m.row(r)) {
            chosen.push(r);
        }
    }
    chosen
}

/// Incrementally built row-echelon basis of a subspace of GF(2)^width.
#[derive(Clone, Debug)]
pub struct EchelonBasis {
    width: usize,
    vecs: Vec<(usize, Vec<u64>)>,
}

impl EchelonBasis {
    pub fn new(width: usize) -> Self {
        EchelonBasis {
            width,
            vecs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vecs.len()
    }

    fn reduce(&self, v: &mut [u64]) {
        for (p, b) in &self.vecs {
            if (v[p / WORD] >> (p % WORD)) & 1 == 1 {
                for (x, y) in v.iter_mut().zip(b) {
                    *x ^= y;
                }
            }
        }
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        let mut v = v.to_vec();
        self.reduce(&mut v);
        v.iter().all(|&w| w == 0)
    }

    /// Adds `v`; returns whether the dimension grew.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let mut v = v[..words_for(self.width)].to_vec();
        self.reduce(&mut v);
        let Some(k) = v.iter().position(|&w| w != 0) else {
            return false;
        };
        let pivot = k * WORD + v[k].trailing_zeros() as usize;
        // keep earlier vectors reduced w.r.t. the new pivot
        for (_, b) in self.vecs.iter_mut() {
            if (b[pivot / WORD] >> (pivot % WORD)) & 1 == 1 {
                for (x, y) in b.iter_mut().zip(&v) {
                    *x ^= y;
                }
            }
        }
        self.vecs.push((pivot, v));
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LuStrategy {
    #[default]
    Plain,
    /// Picks the lightest pivot row at every elimination step.
    Sparse,
}

/// Bijection on `0..n`; as a matrix it has a one at `(image[i], i)`, so
/// `P·M` moves row `i` of `M` to row `image[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            image: (0..n).collect(),
        }
    }

    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &x in &image {
            if x >= n || std::mem::replace(&mut seen[x], true) {
                return Err(Error::ShapeMismatch(format!(
                    "{image:?} is not a permutation"
                )));
            }
        }
        Ok(Permutation { image })
    }

    /// Moves `front[k]` to position `k`; the remaining indices follow in order.
    pub fn moving_to_front(n: usize, front: &[usize]) -> Self {
        let mut image = vec![usize::MAX; n];
        for (k, &r) in front.iter().enumerate() {
            image[r] = k;
        }
        let mut next = front.len();
        for slot in image.iter_mut() {
            if *slot == usize::MAX {
                *slot = next;
                next += 1;
            }
        }
        Permutation { image }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &x)| i == x)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &x) in self.image.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { image: inv }
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len());
        Permutation {
            image: other.image.iter().map(|&x| self.image[x]).collect(),
        }
    }

    pub fn to_matrix(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.len(), self.len());
        for (i, &x) in self.image.iter().enumerate() {
            m.set(x, i, true);
        }
        m
    }

    /// `P·m` without forming `P`.
    pub fn permute_rows(&self, m: &BitMatrix) -> BitMatrix {
        assert_eq!(self.len(), m.rows());
        let mut out = BitMatrix::zeros(m.rows(), m.cols());
        for (i, &x) in self.image.iter().enumerate() {
            out.row_mut(x).copy_from_slice(m.row(i));
        }
        out
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let s: String = (0..self.cols)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        write!(f, "]")
    }
}

/// Text format: a `<rows> <cols>` header line, then one line of `0`/`1`
/// characters per row.
impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let s: String = (0..self.cols)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_matrix_lines(&mut s.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }
}

/// Parses one matrix from an iterator of `(line_number, line)` pairs,
/// consuming exactly the header and the matrix rows.
pub fn parse_matrix_lines<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<BitMatrix> {
    let err = |line, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let (hline, header) = lines
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| err(1, "missing `<rows> <cols>` header"))?;
    let mut parts = header.split_whitespace();
    let mut dim = || -> Result<usize> {
        parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(hline, "expected `<rows> <cols>`"))
    };
    let (rows, cols) = (dim()?, dim()?);
    if parts.next().is_some() {
        return Err(err(hline, "trailing tokens after header"));
    }
    if rows == 0 || cols == 0 {
        return Err(err(hline, "dimensions must be positive"));
    }
    let mut m = BitMatrix::zeros(rows, cols);
    for i in 0..rows {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| err(hline + i + 1, "unexpected end of input"))?;
        let line = line.trim_end();
        if line.chars().count() != cols {
            return Err(err(
                ln,
                &format!("expected {cols} characters, found {}", line.chars().count()),
            ));
        }
        for (j, ch) in line.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => m.set(i, j, true),
                other => return Err(err(ln, &format!("invalid character `{other}`"))),
            }
        }
    }
    Ok(m)
}
