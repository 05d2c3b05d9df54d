//! Cost-minimization synthesis: row operations on the left and column
//! operations on the right of the operator, chosen greedily to decrease a
//! cost that is minimal exactly on permutation matrices.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, SynthesisResult};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, LuStrategy};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Number of ones.
    HSum,
    /// Number of ones of the operator and of its inverse.
    HSumInv,
    /// Sum over rows of `log2(row weight)`.
    HProd,
    /// `HProd` of the operator plus that of its inverse.
    HProdInv,
}

impl CostKind {
    pub const ALL: [CostKind; 4] = [
        CostKind::HSum,
        CostKind::HSumInv,
        CostKind::HProd,
        CostKind::HProdInv,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CostKind::HSum => "h_sum",
            CostKind::HSumInv => "H_sum",
            CostKind::HProd => "h_prod",
            CostKind::HProdInv => "H_prod",
        }
    }

    fn uses_inverse(&self) -> bool {
        matches!(self, CostKind::HSumInv | CostKind::HProdInv)
    }

    fn is_prod(&self) -> bool {
        matches!(self, CostKind::HProd | CostKind::HProdInv)
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CostKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownMethod(format!("cost `{s}`")))
    }
}

fn h_sum(a: &BitMatrix) -> f64 {
    a.count_ones() as f64
}

fn h_prod(a: &BitMatrix) -> f64 {
    (0..a.rows()).map(|i| (a.row_weight(i) as f64).log2()).sum()
}

/// Value of the cost function on `a`.
pub fn cost(a: &BitMatrix, kind: CostKind) -> Result<f64> {
    let base = if kind.is_prod() { h_prod(a) } else { h_sum(a) };
    if !kind.uses_inverse() {
        return Ok(base);
    }
    let inv = a.invert()?;
    Ok(base
        + if kind.is_prod() {
            h_prod(&inv)
        } else {
            h_sum(&inv)
        })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyConfig {
    pub cost: CostKind,
    pub seed: u64,
    /// Resets allowed before giving up; `None` means `20·n`.
    pub max_resets: Option<usize>,
    pub use_lu: bool,
    pub lu_strategy: LuStrategy,
}

impl GreedyConfig {
    pub fn new(cost: CostKind, seed: u64) -> Self {
        GreedyConfig {
            cost,
            seed,
            max_resets: None,
            use_lu: false,
            lu_strategy: LuStrategy::Sparse,
        }
    }

    pub fn with_lu(mut self) -> Self {
        self.use_lu = true;
        self
    }

    pub fn method_name(&self) -> String {
        if self.use_lu {
            format!("lu+greedy:{}", self.cost)
        } else {
            format!("greedy:{}", self.cost)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Row `src` added into row `tgt` (left multiplication).
    Row,
    /// Column `src` added into column `tgt` (right multiplication).
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub side: Side,
    pub src: usize,
    pub tgt: usize,
    pub cost_after: f64,
    /// Number of resets before this step.
    pub layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// No operation decreases the cost, even with every wire available.
    LocalMinimum,
    ResetLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStats {
    pub initial_cost: f64,
    pub steps: Vec<Step>,
    pub resets: usize,
    pub failure: Option<FailureReason>,
}

impl GreedyStats {
    pub fn final_cost(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.initial_cost, |s| s.cost_after)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GreedyOutcome {
    Success(SynthesisResult, GreedyStats),
    Failure(GreedyStats),
}

impl GreedyOutcome {
    pub fn result(self) -> Option<SynthesisResult> {
        match self {
            GreedyOutcome::Success(r, _) => Some(r),
            GreedyOutcome::Failure(_) => None,
        }
    }

    pub fn stats(&self) -> &GreedyStats {
        match self {
            GreedyOutcome::Success(_, s) | GreedyOutcome::Failure(s) => s,
        }
    }
}

/// Working state: the operator, its transpose, and (when the cost needs it)
/// the inverse and its transpose, kept in sync under every operation.
struct State {
    uses_inverse: bool,
    is_prod: bool,
    w: BitMatrix,
    wt: BitMatrix,
    inv: BitMatrix,
    inv_t: BitMatrix,
    log2: Vec<f64>,
}

#[inline(always)]
fn xor_weight(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

impl State {
    fn new(a: &BitMatrix, kind: CostKind) -> Result<Self> {
        let inv = a.invert()?;
        let n = a.rows();
        Ok(State {
            uses_inverse: kind.uses_inverse(),
            is_prod: kind.is_prod(),
            wt: a.transpose(),
            w: a.clone(),
            inv_t: inv.transpose(),
            inv,
            log2: (0..=n + 1).map(|w| (w as f64).log2()).collect(),
        })
    }

    fn apply(&mut self, side: Side, src: usize, tgt: usize) {
        match side {
            Side::Row => {
                self.w.row_add(src, tgt);
                self.wt.col_add(src, tgt);
                self.inv.col_add(tgt, src);
                self.inv_t.row_add(tgt, src);
            }
            Side::Col => {
                self.w.col_add(src, tgt);
                self.wt.row_add(src, tgt);
                self.inv.row_add(tgt, src);
                self.inv_t.col_add(tgt, src);
            }
        }
    }

    /// Per-row terms for the product cost: change of `log2(weight)` when a
    /// row gains (`up`) or loses (`down`) one entry.
    fn prod_terms(&self, m: &BitMatrix) -> (Vec<f64>, Vec<f64>) {
        let lg = &self.log2;
        (0..m.rows())
            .map(|r| {
                let w = m.row_weight(r);
                (
                    lg[w + 1] - lg[w],
                    if w > 1 {
                        lg[w - 1] - lg[w]
                    } else {
                        f64::INFINITY
                    },
                )
            })
            .unzip()
    }

    /// Cost change of adding row `x` into row `y` (of weight `y_weight`).
    #[inline(always)]
    fn row_add_delta(&self, x: &[u64], y: &[u64], y_weight: usize) -> f64 {
        let after = xor_weight(x, y);
        if self.is_prod {
            self.log2[after] - self.log2[y_weight]
        } else {
            after as f64 - y_weight as f64
        }
    }

    /// Cost change of adding column `src` into column `tgt`, both given as
    /// rows of the transpose.
    #[inline(always)]
    fn col_add_delta(&self, x: &[u64], y: &[u64], src: usize, tgt: usize, terms: &Terms) -> f64 {
        if self.is_prod {
            // rows with a one in column src toggle their entry in column tgt
            let mut both = 0.0;
            for (k, (a, b)) in x.iter().zip(y).enumerate() {
                let mut word = a & b;
                while word != 0 {
                    both += terms.toggle[k * 64 + word.trailing_zeros() as usize];
                    word &= word - 1;
                }
            }
            terms.col_up[src] + both
        } else {
            xor_weight(x, y) as f64 - terms.col_weight[tgt] as f64
        }
    }

    /// Rows that the cost change of an operation on `side` reads, for wire
    /// `i`: one row of the matrix taking a row addition and one of the
    /// transpose taking a column addition.
    #[inline(always)]
    fn rows_of(&self, side: Side, i: usize) -> (&[u64], &[u64]) {
        match side {
            Side::Row => (self.w.row(i), self.inv_t.row(i)),
            Side::Col => (self.inv.row(i), self.wt.row(i)),
        }
    }

    /// Cost change of an operation given [`Self::rows_of`] for both wires.
    #[inline(always)]
    fn delta_from(
        &self,
        side: Side,
        src: usize,
        tgt: usize,
        s: (&[u64], &[u64]),
        t: (&[u64], &[u64]),
        at: &AllTerms,
    ) -> f64 {
        match side {
            Side::Row => {
                let d = self.row_add_delta(s.0, t.0, at.w.row_weight[tgt]);
                // the inverse gets column tgt added into column src
                if self.uses_inverse {
                    d + self.col_add_delta(t.1, s.1, tgt, src, &at.inv)
                } else {
                    d
                }
            }
            Side::Col => {
                // the inverse gets row tgt added into row src
                let d = if self.uses_inverse {
                    self.row_add_delta(t.0, s.0, at.inv.row_weight[src])
                } else {
                    0.0
                };
                d + self.col_add_delta(s.1, t.1, src, tgt, &at.w)
            }
        }
    }

    #[cfg(test)]
    fn delta(&self, side: Side, src: usize, tgt: usize, at: &AllTerms) -> f64 {
        self.delta_from(
            side,
            src,
            tgt,
            self.rows_of(side, src),
            self.rows_of(side, tgt),
            at,
        )
    }

    fn terms(&self) -> AllTerms {
        let build = |m: &BitMatrix, mt: &BitMatrix| -> Terms {
            let row_weight = (0..m.rows()).map(|r| m.row_weight(r)).collect();
            let col_weight = (0..mt.rows()).map(|c| mt.row_weight(c)).collect();
            if !self.is_prod {
                return Terms {
                    row_weight,
                    col_weight,
                    ..Terms::default()
                };
            }
            let (up, down) = self.prod_terms(m);
            let col_up = (0..mt.rows())
                .map(|c| mt.row_ones(c).map(|r| up[r]).sum())
                .collect();
            let toggle = down.iter().zip(&up).map(|(d, u)| d - u).collect();
            Terms {
                row_weight,
                col_weight,
                col_up,
                toggle,
            }
        };
        AllTerms {
            w: build(&self.w, &self.wt),
            inv: if self.uses_inverse {
                build(&self.inv, &self.inv_t)
            } else {
                Terms::default()
            },
        }
    }
}

#[derive(Default)]
struct Terms {
    row_weight: Vec<usize>,
    col_weight: Vec<usize>,
    /// Sum of `up` over the rows of each column.
    col_up: Vec<f64>,
    /// Per row, `down - up`: the change when an existing entry is cleared
    /// instead of a new one being set.
    toggle: Vec<f64>,
}

struct AllTerms {
    w: Terms,
    inv: Terms,
}

/// Greedy synthesis of `a`. A run that gets stuck is a [`GreedyOutcome::Failure`],
/// not an error.
pub fn greedy_synth(a: &BitMatrix, cfg: &GreedyConfig) -> Result<GreedyOutcome> {
    if cfg.use_lu {
        return lu_greedy_synth(a, cfg);
    }
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let max_resets = cfg.max_resets.unwrap_or(20 * n).max(1);
    let mut st = State::new(a, cfg.cost)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats = GreedyStats {
        initial_cost: cost(a, cfg.cost)?,
        steps: Vec::new(),
        resets: 0,
        failure: None,
    };
    let mut current = stats.initial_cost;
    let mut row_busy = vec![false; n];
    let mut col_busy = vec![false; n];
    let mut row_gates = Vec::new();
    let mut col_gates = Vec::new();

    while st.w.count_ones() != n {
        let terms = st.terms();
        let mut best: Option<(f64, Side, usize, usize)> = None;
        let mut ties = 0u32;
        for (side, busy) in [(Side::Row, &row_busy), (Side::Col, &col_busy)] {
            let free: Vec<usize> = (0..n).filter(|&i| !busy[i]).collect();
            for &src in &free {
                let s_rows = st.rows_of(side, src);
                for &tgt in free.iter().filter(|&&j| j != src) {
                    let d = st.delta_from(side, src, tgt, s_rows, st.rows_of(side, tgt), &terms);
                    if d >= -EPS {
                        continue;
                    }
                    match best {
                        Some((bd, ..)) if d > bd + EPS => {}
                        Some((bd, ..)) if d >= bd - EPS => {
                            ties += 1;
                            if rng.gen_range(0..ties) == 0 {
                                best = Some((d, side, src, tgt));
                            }
                        }
                        _ => {
                            ties = 1;
                            best = Some((d, side, src, tgt));
                        }
                    }
                }
            }
        }
        match best {
            Some((d, side, src, tgt)) => {
                st.apply(side, src, tgt);
                let busy = if side == Side::Row {
                    &mut row_busy
                } else {
                    &mut col_busy
                };
                busy[src] = true;
                busy[tgt] = true;
                match side {
                    Side::Row => row_gates.push((src, tgt)),
                    // W·(I + e_src e_tgt^T) is CNOT(control tgt, target src)
                    Side::Col => col_gates.push((tgt, src)),
                }
                current += d;
                stats.steps.push(Step {
                    side,
                    src,
                    tgt,
                    cost_after: current,
                    layer: stats.resets,
                });
            }
            None => {
                if !row_busy.contains(&true) && !col_busy.contains(&true) {
                    stats.failure = Some(FailureReason::LocalMinimum);
                    return Ok(GreedyOutcome::Failure(stats));
                }
                row_busy.iter_mut().for_each(|b| *b = false);
                col_busy.iter_mut().for_each(|b| *b = false);
                stats.resets += 1;
                if stats.resets > max_resets {
                    stats.failure = Some(FailureReason::ResetLimit);
                    return Ok(GreedyOutcome::Failure(stats));
                }
            }
        }
    }
    // A = R_1⋯R_a · F · C_b⋯C_1: column gates act first, then F, then the
    // row gates in reverse, which from_row_reduction moves past F.
    let tail = SynthesisResult::from_row_reduction(&row_gates, &st.w, cfg.method_name());
    let mut circuit = Circuit::from_cnots(n, col_gates);
    circuit.extend(&tail.circuit);
    Ok(GreedyOutcome::Success(
        SynthesisResult::new(circuit, tail.out_permutation, cfg.method_name()),
        stats,
    ))
}

/// Greedy synthesis of the triangular factors of `A = P·L·U`: the circuit
/// for `U` runs first, then the one for `L`, and `P` joins the output
/// permutation.
pub fn lu_greedy_synth(a: &BitMatrix, cfg: &GreedyConfig) -> Result<GreedyOutcome> {
    let (p, l, u) = a.lu_decompose(cfg.lu_strategy)?;
    let inner = GreedyConfig {
        use_lu: false,
        ..cfg.clone()
    };
    let (ru, su) = match greedy_synth(&u, &inner)? {
        GreedyOutcome::Success(r, s) => (r, s),
        GreedyOutcome::Failure(s) => return Ok(GreedyOutcome::Failure(s)),
    };
    let (rl, sl) = match greedy_synth(&l, &inner)? {
        GreedyOutcome::Success(r, s) => (r, s),
        GreedyOutcome::Failure(s) => return Ok(GreedyOutcome::Failure(s)),
    };
    let both = ru.then(&rl, cfg.method_name());
    let perm = p.compose(&both.out_permutation);
    let mut steps = su.steps;
    steps.extend(sl.steps);
    let stats = GreedyStats {
        initial_cost: su.initial_cost + sl.initial_cost,
        steps,
        resets: su.resets + sl.resets,
        failure: None,
    };
    Ok(GreedyOutcome::Success(
        SynthesisResult::new(both.circuit, perm, cfg.method_name()),
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_operator_of_depth, random_worst_operator};

    #[test]
    fn cost_examples() {
        let i = BitMatrix::identity(5);
        assert_eq!(cost(&i, CostKind::HSum).unwrap(), 5.0);
        assert_eq!(cost(&i, CostKind::HProd).unwrap(), 0.0);
        assert_eq!(cost(&i, CostKind::HSumInv).unwrap(), 10.0);
        assert_eq!(cost(&i, CostKind::HProdInv).unwrap(), 0.0);
        assert_eq!(
            cost(&BitMatrix::zeros(2, 2), CostKind::HSumInv),
            Err(Error::Singular)
        );
        let a = BitMatrix::from_rows(&["11", "01"]);
        assert_eq!(cost(&a, CostKind::HProd).unwrap(), 1.0);
        assert_eq!(cost(&a, CostKind::HSumInv).unwrap(), 6.0);
    }

    #[test]
    fn cost_names_parse() {
        for k in CostKind::ALL {
            assert_eq!(k.name().parse::<CostKind>().unwrap(), k);
        }
        assert!("h_max".parse::<CostKind>().is_err());
    }

    /// Every incremental delta equals the recomputed cost difference.
    #[test]
    fn incremental_deltas_match_recomputation() {
        for kind in CostKind::ALL {
            for seed in 0..3 {
                let a = random_worst_operator(9, seed);
                let st = State::new(&a, kind).unwrap();
                let terms = st.terms();
                let base = cost(&a, kind).unwrap();
                for side in [Side::Row, Side::Col] {
                    for src in 0..9 {
                        for tgt in (0..9).filter(|&t| t != src) {
                            let mut b = a.clone();
                            match side {
                                Side::Row => b.row_add(src, tgt),
                                Side::Col => b.col_add(src, tgt),
                            }
                            let want = cost(&b, kind).unwrap() - base;
                            let got = st.delta(side, src, tgt, &terms);
                            assert!(
                                (want - got).abs() < 1e-9,
                                "{kind} {side:?} {src}->{tgt}: {got} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn state_tracks_inverse() {
        let a = random_worst_operator(12, 4);
        let mut st = State::new(&a, CostKind::HSumInv).unwrap();
        for (k, (s, t)) in [(0, 1), (5, 3), (11, 0), (2, 7)].into_iter().enumerate() {
            st.apply(if k % 2 == 0 { Side::Row } else { Side::Col }, s, t);
            assert!(st.w.mul(&st.inv).is_identity());
            assert_eq!(st.wt, st.w.transpose());
            assert_eq!(st.inv_t, st.inv.transpose());
        }
    }

    #[test]
    fn trivial_inputs() {
        for kind in CostKind::ALL {
            let cfg = GreedyConfig::new(kind, 1);
            let r = greedy_synth(&BitMatrix::identity(4), &cfg)
                .unwrap()
                .result()
                .unwrap();
            assert!(r.circuit.is_empty());
            let mut e = BitMatrix::identity(4);
            e.row_add(2, 0);
            let r = greedy_synth(&e, &cfg).unwrap().result().unwrap();
            assert_eq!((r.cnot_count, r.depth), (1, 1));
            assert!(r.implements(&e));
        }
        let cfg = GreedyConfig::new(CostKind::HSum, 0);
        assert_eq!(
            greedy_synth(&BitMatrix::zeros(3, 3), &cfg),
            Err(Error::Singular)
        );
    }

    fn check_trace(stats: &GreedyStats, n: usize) {
        let mut prev = stats.initial_cost;
        let mut layer = usize::MAX;
        let mut row_busy = vec![false; n];
        let mut col_busy = vec![false; n];
        for s in &stats.steps {
            assert!(s.cost_after < prev, "cost must strictly decrease");
            prev = s.cost_after;
            if s.layer != layer {
                layer = s.layer;
                row_busy.fill(false);
                col_busy.fill(false);
            }
            let busy = if s.side == Side::Row {
                &mut row_busy
            } else {
                &mut col_busy
            };
            assert!(!busy[s.src] && !busy[s.tgt], "wire reused inside a layer");
            busy[s.src] = true;
            busy[s.tgt] = true;
        }
    }

    #[test]
    fn shallow_operators_succeed_and_respect_invariants() {
        for kind in CostKind::ALL {
            for seed in 0..5 {
                let a = random_operator_of_depth(16, 4, seed);
                let cfg = GreedyConfig::new(kind, seed);
                let out = greedy_synth(&a, &cfg).unwrap();
                check_trace(out.stats(), 16);
                let r = out.result().expect("shallow operator should be solved");
                assert!(r.implements(&a));
                assert_eq!(r.method, format!("greedy:{kind}"));
            }
        }
    }

    #[test]
    fn product_cost_never_targets_finished_rows() {
        for seed in 0..5 {
            let a = random_operator_of_depth(14, 6, seed);
            let out = greedy_synth(&a, &GreedyConfig::new(CostKind::HProd, seed)).unwrap();
            let mut w = a.clone();
            for s in &out.stats().steps {
                if s.side == Side::Row {
                    assert!(
                        w.row_weight(s.tgt) > 1,
                        "row {} already had weight 1",
                        s.tgt
                    );
                    w.row_add(s.src, s.tgt);
                } else {
                    w.col_add(s.src, s.tgt);
                }
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = random_operator_of_depth(20, 8, 3);
        let cfg = GreedyConfig::new(CostKind::HSumInv, 99);
        assert_eq!(
            greedy_synth(&a, &cfg).unwrap(),
            greedy_synth(&a, &cfg).unwrap()
        );
    }

    #[test]
    fn failures_are_values() {
        let a = random_worst_operator(40, 1);
        let mut cfg = GreedyConfig::new(CostKind::HSum, 0);
        cfg.max_resets = Some(1);
        match greedy_synth(&a, &cfg).unwrap() {
            GreedyOutcome::Failure(s) => {
                assert!(s.failure.is_some());
                check_trace(&s, 40);
            }
            GreedyOutcome::Success(r, _) => assert!(r.implements(&a)),
        }
    }

    #[test]
    fn lu_variant() {
        let cfg = GreedyConfig::new(CostKind::HSumInv, 5).with_lu();
        let r = greedy_synth(&BitMatrix::identity(6), &cfg)
            .unwrap()
            .result()
            .unwrap();
        assert!(r.circuit.is_empty());
        assert_eq!(r.method, "lu+greedy:H_sum");
        for seed in 0..5 {
            let a = random_worst_operator(30, seed);
            if let Some(r) = greedy_synth(&a, &cfg).unwrap().result() {
                assert!(r.implements(&a));
            }
            let a = random_operator_of_depth(30, 6, seed);
            let r = greedy_synth(&a, &cfg)
                .unwrap()
                .result()
                .expect("shallow operator");
            assert!(r.implements(&a));
        }
        // upper-triangular input with plain LU: same as greedy on it
        let mut u = BitMatrix::identity(8);
        for (s, t) in [(3, 1), (7, 2), (5, 0), (6, 4)] {
            u.row_add(s, t);
        }
        assert!(u.is_upper_unitriangular());
        let mut plain = GreedyConfig::new(CostKind::HSum, 2).with_lu();
        plain.lu_strategy = LuStrategy::Plain;
        let lu = greedy_synth(&u, &plain).unwrap().result().unwrap();
        let direct = greedy_synth(&u, &GreedyConfig::new(CostKind::HSum, 2))
            .unwrap()
            .result()
            .unwrap();
        assert_eq!(lu.circuit, direct.circuit);
        assert!(lu.out_permutation.is_identity());
    }
}
