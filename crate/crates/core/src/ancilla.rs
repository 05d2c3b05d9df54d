//! Synthesis with encoded ancillas: find a `p×p` CNOT circuit `B` with
//! `B·A_in = A_out` for `p×n` parity tables, working on `n`-row blocks.

use std::collections::HashMap;
use std::ops::Range;

use rayon::prelude::*;

use crate::circuit::{Circuit, SynthesisResult};
use crate::error::{Error, Result};
use crate::gf2::{select_independent_rows, BitMatrix, Permutation};

/// `p×n` table: row `w` is the parity carried by wire `w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityTable {
    matrix: BitMatrix,
}

impl ParityTable {
    pub fn new(matrix: BitMatrix) -> Result<Self> {
        let (p, n) = (matrix.rows(), matrix.cols());
        if p < n {
            return Err(Error::ShapeMismatch(format!(
                "{p}x{n} table has fewer wires than variables"
            )));
        }
        let rank = matrix.rank();
        if rank < n {
            return Err(Error::RankDeficient { rank, expected: n });
        }
        Ok(ParityTable { matrix })
    }

    /// `[I_n; 0]`: the inputs on the first `n` wires, ancillas holding zero.
    pub fn fresh(n: usize, p: usize) -> Self {
        assert!(p >= n);
        ParityTable {
            matrix: BitMatrix::from_fn(p, n, |i, j| i == j),
        }
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn wires(&self) -> usize {
        self.matrix.rows()
    }

    pub fn vars(&self) -> usize {
        self.matrix.cols()
    }
}

/// Outcome of [`make_blocks_invertible`].
#[derive(Debug, Clone)]
pub struct BlockPrep {
    /// Depth-`ceil(log2 k)` circuit on the real wires.
    pub circuit: Circuit,
    /// Wire `w` sits at position `layout.apply(w)` of the block partition.
    pub layout: Permutation,
    /// Position ranges: the first block has `n + r` rows, the others `n`.
    pub blocks: Vec<Range<usize>>,
    /// Table after the circuit, indexed by real wire.
    pub table: BitMatrix,
}

impl BlockPrep {
    pub fn block_wires(&self, i: usize) -> Vec<usize> {
        let order = self.layout.inverse();
        self.blocks[i].clone().map(|q| order.apply(q)).collect()
    }
}

fn block_ranges(p: usize, n: usize) -> Vec<Range<usize>> {
    let (k, r) = (p / n, p % n);
    let mut blocks = Vec::with_capacity(k.max(1));
    blocks.push(0..n + r);
    for i in 1..k {
        let s = n + r + (i - 1) * n;
        blocks.push(s..s + n);
    }
    blocks
}

pub(crate) fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

/// Positions for the wires of `a`: `n` independent rows first, taken in the
/// order of `prefer`; every wire keeps its preferred position when possible.
fn layout_for(a: &BitMatrix, prefer: &Permutation) -> Permutation {
    let (p, n) = (a.rows(), a.cols());
    let preferred_order = prefer.inverse();
    let chosen = select_independent_rows(a, preferred_order.image().iter().copied(), n);
    let mut is_chosen = vec![false; p];
    for &w in &chosen {
        is_chosen[w] = true;
    }
    let mut slots: Vec<Option<usize>> = vec![None; p];
    for (w, &c) in is_chosen.iter().enumerate() {
        let q = prefer.apply(w);
        if c == (q < n) {
            slots[q] = Some(w);
        }
    }
    let mut displaced_top = chosen.iter().copied().filter(|&w| prefer.apply(w) >= n);
    let mut displaced_rest = preferred_order.image()[..n]
        .iter()
        .copied()
        .filter(|&w| !is_chosen[w]);
    for (q, slot) in slots.iter_mut().enumerate() {
        if slot.is_none() {
            *slot = if q < n {
                displaced_top.next()
            } else {
                displaced_rest.next()
            };
        }
    }
    let mut image = vec![0; p];
    for (q, w) in slots.into_iter().enumerate() {
        image[w.expect("every slot is filled")] = q;
    }
    Permutation::from_image(image).expect("slots form a bijection")
}

/// Makes every block of the table invertible (the first block through its top
/// `n` rows). Round `t` fixes blocks `2^t .. 2^(t+1)` with one layer of CNOTs
/// whose sources lie in the blocks already fixed.
pub fn make_blocks_invertible(a: &ParityTable) -> BlockPrep {
    prepare(a, &Permutation::identity(a.wires()))
}

fn prepare(a: &ParityTable, prefer: &Permutation) -> BlockPrep {
    let (p, n) = (a.wires(), a.vars());
    let layout = layout_for(&a.matrix, prefer);
    let order = layout.inverse();
    let blocks = block_ranges(p, n);
    let mut table = a.matrix.clone();
    let mut circuit = Circuit::new(p);
    let k = blocks.len();
    let mut fixed = 1;
    while fixed < k {
        let end = (2 * fixed).min(k);
        for t in fixed..end {
            let targets: Vec<usize> = blocks[t].clone().map(|q| order.apply(q)).collect();
            let src_start = blocks[t - fixed].start;
            let sources: Vec<usize> = (src_start..src_start + n).map(|q| order.apply(q)).collect();
            let all: Vec<usize> = (0..n).collect();
            let sigma = find_partial_permutation(
                &table.select(&targets, &all),
                &table.select(&sources, &all),
            );
            for (i, j) in sigma {
                table.row_add(sources[j], targets[i]);
                circuit.push_cnot(sources[j], targets[i]);
            }
        }
        fixed = end;
    }
    assert!(circuit.depth() <= ceil_log2(k));
    BlockPrep {
        circuit,
        layout,
        blocks,
        table,
    }
}

/// Pairs `(i, j)` such that adding row `j` of `a` into row `i` of `b`, for all
/// pairs at once, makes `b` invertible. `a` must be invertible.
///
/// Rows of `a` extending a basis of `b`'s row space are assigned to the rows
/// of `b` left out of that basis.
pub fn find_partial_permutation(b: &BitMatrix, a: &BitMatrix) -> Vec<(usize, usize)> {
    let n = b.rows();
    assert!(b.is_square() && a.rows() == n && a.cols() == n);
    let basis = select_independent_rows(b, 0..n, n);
    let extended = select_independent_rows(&b.vstack(a), basis.iter().copied().chain(n..2 * n), n);
    debug_assert_eq!(extended.len(), n, "a must be invertible");
    let mut in_basis = vec![false; n];
    for &i in &basis {
        in_basis[i] = true;
    }
    (0..n)
        .filter(|&i| !in_basis[i])
        .zip(extended[basis.len()..].iter().map(|&j| j - n))
        .collect()
}

/// Circuit of the block method, kept in its four phases.
#[derive(Debug, Clone)]
pub struct AncillaResult {
    pub prep_in: Circuit,
    /// Block-diagonal part; no gate touches two blocks.
    pub d_phase: Circuit,
    /// Explicit wire permutation matching the block outputs to the target layout.
    pub relabel: Circuit,
    pub prep_out_inverse: Circuit,
    /// The wire permutation `relabel` realizes.
    pub relabel_permutation: Permutation,
    /// Real wires of each block of the diagonal phase.
    pub blocks: Vec<Vec<usize>>,
    pub circuit: Circuit,
    pub depth: usize,
    pub cnot_count: usize,
}

impl AncillaResult {
    /// Whether `simulate(circuit) · a_in = a_out`.
    pub fn maps(&self, a_in: &ParityTable, a_out: &ParityTable) -> bool {
        let s = self.circuit.simulate().expect("CNOT-only");
        s.mul(a_in.matrix()) == *a_out.matrix()
    }

    /// Same map with the relabeling left as an output permutation instead of
    /// swap gates: the output preparation is moved across it.
    pub fn with_free_relabel(&self, method: impl Into<String>) -> SynthesisResult {
        let p = self.circuit.n_wires();
        let back = self.relabel_permutation.inverse();
        let mut circuit = self.prep_in.clone();
        circuit.extend(&self.d_phase);
        circuit.extend(&self.prep_out_inverse.relabeled(p, |w| back.apply(w)));
        SynthesisResult::new(circuit, self.relabel_permutation.clone(), method)
    }
}

fn apply_cnots(table: &mut BitMatrix, c: &Circuit) {
    for g in c.gates() {
        if let crate::circuit::Gate::Cnot { control, target } = *g {
            table.row_add(control, target);
        }
    }
}

/// Block method: prepare both tables, synthesize the block-diagonal
/// transition with `inner`, then undo the output preparation.
pub fn ancilla_synth<F>(a_in: &ParityTable, a_out: &ParityTable, inner: F) -> Result<AncillaResult>
where
    F: Fn(&BitMatrix) -> Result<SynthesisResult> + Sync,
{
    let (p, n) = (a_in.wires(), a_in.vars());
    if a_out.wires() != p || a_out.vars() != n {
        return Err(Error::ShapeMismatch(format!(
            "tables {}x{} and {}x{}",
            p,
            n,
            a_out.wires(),
            a_out.vars()
        )));
    }
    let prep_in = make_blocks_invertible(a_in);
    let prep_out = prepare(a_out, &prep_in.layout);
    let all: Vec<usize> = (0..n).collect();
    let blocks: Vec<Vec<usize>> = (0..prep_in.blocks.len())
        .map(|i| prep_in.block_wires(i))
        .collect();

    let mut transitions = Vec::with_capacity(blocks.len());
    for (i, wires) in blocks.iter().enumerate() {
        let k = prep_in.table.select(wires, &all);
        let h = prep_out.table.select(&prep_out.block_wires(i), &all);
        let top = k.block(0, n, 0, n);
        let d_top = h.block(0, n, 0, n).mul(&top.invert()?);
        let r = wires.len() - n;
        if r == 0 {
            transitions.push(d_top);
            continue;
        }
        let mut diff = k.block(n, n + r, 0, n);
        for row in 0..r {
            for (x, y) in diff.row_mut(row).iter_mut().zip(h.row(n + row)) {
                *x ^= y;
            }
        }
        let g = BitMatrix::decompose_in_basis(&top, &diff)?;
        transitions.push(BitMatrix::from_fn(n + r, n + r, |a, b| {
            match (a < n, b < n) {
                (true, true) => d_top.get(a, b),
                (true, false) => false,
                (false, true) => g.get(a - n, b),
                (false, false) => a == b,
            }
        }));
    }

    let results: Vec<SynthesisResult> =
        transitions.par_iter().map(&inner).collect::<Result<_>>()?;
    let mut d_phase = Circuit::new(p);
    for (res, (d, wires)) in results.iter().zip(transitions.iter().zip(&blocks)) {
        assert!(
            res.implements(d),
            "inner method `{}` returned a wrong circuit",
            res.method
        );
        d_phase.extend(&res.circuit.relabeled(p, |w| wires[w]));
    }

    let mut current = prep_in.table.clone();
    apply_cnots(&mut current, &d_phase);
    let relabel_permutation = matching_permutation(&current, &prep_out.table);
    let relabel = Circuit::permutation_network(&relabel_permutation);
    let prep_out_inverse = prep_out.circuit.inverse()?;

    let mut circuit = prep_in.circuit.clone();
    circuit.extend(&d_phase);
    circuit.extend(&relabel);
    circuit.extend(&prep_out_inverse);
    Ok(AncillaResult {
        depth: circuit.depth(),
        cnot_count: circuit.cnot_count(),
        prep_in: prep_in.circuit,
        d_phase,
        relabel,
        relabel_permutation,
        prep_out_inverse,
        blocks,
        circuit,
    })
}

/// Permutation moving the row on wire `w` of `from` to a wire holding the
/// same row in `to`, fixing wires where the rows already agree.
fn matching_permutation(from: &BitMatrix, to: &BitMatrix) -> Permutation {
    let p = from.rows();
    let mut image: Vec<Option<usize>> = vec![None; p];
    let mut free: HashMap<&[u64], Vec<usize>> = HashMap::new();
    for w in (0..p).rev() {
        if from.row(w) == to.row(w) {
            image[w] = Some(w);
        } else {
            free.entry(to.row(w)).or_default().push(w);
        }
    }
    for (w, slot) in image.iter_mut().enumerate() {
        if slot.is_none() {
            let dest = free.get_mut(from.row(w)).and_then(|v| v.pop());
            *slot = Some(dest.expect("block outputs hold the target rows"));
        }
    }
    Permutation::from_image(image.into_iter().map(Option::unwrap).collect()).expect("bijection")
}
