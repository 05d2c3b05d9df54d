//! Reference synthesizers: Gaussian elimination, and brick-wall triangular
//! synthesis (a sorting-network construction run on all-to-all wiring)
//! applied to the factors of `A = P·L·U`.

use crate::circuit::{Circuit, SynthesisResult};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, LuStrategy};

/// Row-only elimination: forward elimination below the diagonal (first
/// nonzero pivot at or below the diagonal, swaps kept virtual), then back
/// substitution.
///
/// Within a column, targets are emitted in the order of their final pivot
/// position (nearest first in the backward phase). Each phase then admits
/// the systolic schedule "column k, position q at time k + q", so ASAP
/// depth is below `2n` per phase.
pub fn gaussian_synth(a: &BitMatrix) -> Result<SynthesisResult> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut w = a.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut columns: Vec<(usize, Vec<usize>)> = Vec::with_capacity(n);
    for k in 0..n {
        let pos = (k..n)
            .find(|&p| w.get(order[p], k))
            .ok_or(Error::Singular)?;
        order.swap(k, pos);
        let pivot = order[k];
        let targets: Vec<usize> = order[k + 1..]
            .iter()
            .copied()
            .filter(|&r| w.get(r, k))
            .collect();
        for &r in &targets {
            w.row_add(pivot, r);
        }
        columns.push((pivot, targets));
    }
    let mut position = vec![0; n];
    for (p, &r) in order.iter().enumerate() {
        position[r] = p;
    }
    let mut gates = Vec::new();
    for (pivot, mut targets) in columns {
        targets.sort_by_key(|&r| position[r]);
        gates.extend(targets.into_iter().map(|r| (pivot, r)));
    }
    for k in (0..n).rev() {
        let pivot = order[k];
        for &r in order[..k].iter().rev() {
            if w.get(r, k) {
                w.row_add(pivot, r);
                gates.push((pivot, r));
            }
        }
    }
    Ok(SynthesisResult::from_row_reduction(&gates, &w, "gaussian"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Lower,
    Upper,
}

/// Brick-wall synthesis of a unit-triangular operator, depth at most `n`.
///
/// Sweep `j` pairs neighbouring slots `(s, s+1)` starting at slot 0 or 1
/// alternately; when the working operator has a one at (row in slot `s+1`,
/// column in slot `s`) that row is cleared by a CNOT, and the two slots then
/// trade their labels. The emitted list, reversed, implements the operator.
pub fn kutin_triangular(l: &BitMatrix, orientation: Orientation) -> Result<Circuit> {
    match orientation {
        Orientation::Lower => {
            if !l.is_lower_unitriangular() {
                return Err(Error::NotTriangular("lower"));
            }
            Ok(brick_wall(l))
        }
        Orientation::Upper => {
            if !l.is_upper_unitriangular() {
                return Err(Error::NotTriangular("upper"));
            }
            // J·U·J is lower triangular; undo J by reversing the wire order
            let n = l.rows();
            let mirrored = BitMatrix::from_fn(n, n, |i, j| l.get(n - 1 - i, n - 1 - j));
            Ok(brick_wall(&mirrored).relabeled(n, |w| n - 1 - w))
        }
    }
}

fn brick_wall(l: &BitMatrix) -> Circuit {
    let n = l.rows();
    let mut w = l.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut gates = Vec::new();
    for j in 1..=n {
        let mut start = if j % 2 == 1 { 0 } else { 1 };
        while start + 1 < n {
            let (c, t) = (perm[start], perm[start + 1]);
            if w.get(t, c) {
                w.row_add(c, t);
                gates.push((c, t));
            }
            perm.swap(start, start + 1);
            start += 2;
        }
    }
    debug_assert!(w.is_identity());
    Circuit::from_cnots(n, gates.into_iter().rev())
}

/// `A = P·L·U`: the circuit for `U` runs first, then the one for `L`; `P`
/// stays a relabeling.
pub fn kutin_synth(a: &BitMatrix) -> Result<SynthesisResult> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator",
            a.rows(),
            a.cols()
        )));
    }
    let (p, l, u) = a.lu_decompose(LuStrategy::Plain)?;
    let mut circuit = kutin_triangular(&u, Orientation::Upper)?;
    circuit.extend(&kutin_triangular(&l, Orientation::Lower)?);
    Ok(SynthesisResult::new(circuit, p, "kutin"))
}
