//! Re-synthesis of the CNOT chunks of a larger circuit. Other gates are kept
//! as barriers; output permutations of the chunks are pushed forward by
//! relabeling the wires of everything that follows.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::ancilla::ParityTable;
use crate::circuit::{Circuit, Segment, SynthesisResult};
use crate::error::{Error, Result};
use crate::gf2::{parse_matrix_lines, Permutation};
use crate::portfolio::{Method, Portfolio};
use crate::qc::QcCircuit;

/// Parity tables known for one chunk: its output only has to satisfy
/// `B·a_in = a_out`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkTables {
    pub a_in: ParityTable,
    pub a_out: ParityTable,
}

/// Sidecar format: `chunk <index>` followed by the input and output tables
/// in the matrix text format, or `chunk <index> fresh` followed by the
/// output table only (input `[I; 0]`). Chunks are numbered from 0 in
/// circuit order; `#` lines are comments.
pub fn parse_sidecar(text: &str) -> Result<HashMap<usize, ChunkTables>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim_start().starts_with('#'));
    let mut out = HashMap::new();
    while let Some((ln, line)) = lines.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            line: ln,
            msg: msg.to_string(),
        };
        let index: usize = match toks.as_slice() {
            ["chunk", i] | ["chunk", i, "fresh"] => {
                i.parse().map_err(|_| bad("bad chunk index"))?
            }
            _ => return Err(bad("expected `chunk <index> [fresh]`")),
        };
        let fresh = toks.len() == 3;
        let first = parse_matrix_lines(&mut lines)?;
        let (a_in, a_out) = if fresh {
            (
                ParityTable::fresh(first.cols(), first.rows()),
                ParityTable::new(first)?,
            )
        } else {
            (
                ParityTable::new(first)?,
                ParityTable::new(parse_matrix_lines(&mut lines)?)?,
            )
        };
        if a_in.wires() != a_out.wires() || a_in.vars() != a_out.vars() {
            return Err(bad("input and output tables differ in shape"));
        }
        if out.insert(index, ChunkTables { a_in, a_out }).is_some() {
            return Err(bad("duplicate chunk index"));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub depth: usize,
    pub cnots: usize,
    pub t_count: usize,
    pub t_depth: usize,
}

impl Metrics {
    pub fn of(c: &Circuit) -> Self {
        Metrics {
            depth: c.depth(),
            cnots: c.cnot_count(),
            t_count: c.t_count(),
            t_depth: c.t_depth(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResynthOutput {
    pub circuit: Circuit,
    /// Logical wire `v` ends on physical wire `out_permutation.apply(v)`.
    pub out_permutation: Permutation,
    /// One output segment per input segment (chunks may be empty).
    pub segments: Vec<Segment>,
    pub before: Metrics,
    pub after: Metrics,
    pub chunks: usize,
    /// Chunks on which a method reached the selected metrics.
    pub wins: BTreeMap<String, usize>,
    /// Chunks on which a method was the only one to do so.
    pub sole_wins: BTreeMap<String, usize>,
}

fn candidates(
    chunk: &Circuit,
    tables: Option<&ChunkTables>,
    portfolio: &Portfolio,
) -> Result<Vec<SynthesisResult>> {
    let n = chunk.n_wires();
    let mut out = vec![SynthesisResult::new(
        chunk.clone(),
        Permutation::identity(n),
        "original",
    )];
    let a = chunk.simulate()?;
    let use_tables = tables.filter(|_| {
        portfolio.contains(Method::AncillaBlock) || portfolio.contains(Method::AncillaDirect)
    });
    match use_tables {
        None => {
            for m in portfolio.square_methods() {
                if let Some(r) = m.run(&a, portfolio.seed)? {
                    assert!(r.implements(&a), "method {m} failed verification");
                    out.push(r);
                }
            }
        }
        Some(t) => {
            if t.a_in.wires() != n {
                return Err(Error::ShapeMismatch(format!(
                    "tables for {} wires, chunk has {n}",
                    t.a_in.wires()
                )));
            }
            if portfolio.contains(Method::AncillaDirect) {
                if let Ok(mut r) = portfolio.synthesize(&a) {
                    r.method = Method::AncillaDirect.to_string();
                    out.push(r);
                }
            }
            if portfolio.contains(Method::AncillaBlock) {
                let r = portfolio.ancilla_block(&t.a_in, &t.a_out)?;
                let image = r.operator().mul(t.a_in.matrix());
                assert!(
                    image == *t.a_out.matrix(),
                    "block method failed verification"
                );
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// Replaces each chunk by the candidate (original chunk included) giving the
/// smallest total depth, then CNOT count, among those that raise neither and
/// keep the T-depth.
pub fn resynthesize(
    c: &Circuit,
    portfolio: &Portfolio,
    tables: &HashMap<usize, ChunkTables>,
) -> Result<ResynthOutput> {
    let n = c.n_wires();
    let segments = c.split_cnot_chunks();
    let chunk_list: Vec<&Circuit> = segments
        .iter()
        .filter_map(|s| match s {
            Segment::Chunk(ch) => Some(ch),
            Segment::Barrier(_) => None,
        })
        .collect();
    if let Some(bad) = tables.keys().find(|&&i| i >= chunk_list.len()) {
        return Err(Error::ShapeMismatch(format!(
            "tables given for missing chunk {bad}"
        )));
    }
    let all_candidates: Vec<Vec<SynthesisResult>> = chunk_list
        .par_iter()
        .enumerate()
        .map(|(i, ch)| candidates(ch, tables.get(&i), portfolio))
        .collect::<Result<_>>()?;

    let before = Metrics::of(c);
    let mut current = before;
    let mut phys: Vec<usize> = (0..n).collect();
    let mut prefix = Circuit::new(n);
    let mut out_segments = Vec::with_capacity(segments.len());
    let mut wins = BTreeMap::new();
    let mut sole_wins = BTreeMap::new();
    let mut chunk_idx = 0;
    for (si, seg) in segments.iter().enumerate() {
        let chunk = match seg {
            Segment::Barrier(g) => {
                let g = g.relabeled(|w| phys[w]);
                prefix.push(g.clone());
                out_segments.push(Segment::Barrier(g));
                continue;
            }
            Segment::Chunk(_) => &all_candidates[chunk_idx],
        };
        chunk_idx += 1;
        let rest = &segments[si + 1..];
        let evaluated: Vec<(Metrics, Circuit, Vec<usize>)> = chunk
            .iter()
            .map(|cand| {
                let back = cand.out_permutation.inverse();
                let next: Vec<usize> = (0..n).map(|v| phys[back.apply(v)]).collect();
                let body = cand.circuit.relabeled(n, |w| phys[w]);
                let mut total = prefix.clone();
                total.extend(&body);
                total.extend(&Circuit::join_segments(n, rest).relabeled(n, |w| next[w]));
                (Metrics::of(&total), body, next)
            })
            .collect();
        let feasible = |m: &Metrics| {
            m.depth <= current.depth && m.cnots <= current.cnots && m.t_depth == current.t_depth
        };
        let chosen = (0..evaluated.len())
            .filter(|&i| feasible(&evaluated[i].0))
            .min_by_key(|&i| (evaluated[i].0.depth, evaluated[i].0.cnots, i))
            .expect("the original chunk is always feasible");
        let key = |m: &Metrics| (m.depth, m.cnots);
        let best = key(&evaluated[chosen].0);
        let tied: Vec<&str> = chunk
            .iter()
            .zip(&evaluated)
            .filter(|(_, e)| feasible(&e.0) && key(&e.0) == best)
            .map(|(c, _)| c.method.as_str())
            .collect();
        for m in &tied {
            *wins.entry(m.to_string()).or_insert(0) += 1;
        }
        if let [only] = tied.as_slice() {
            *sole_wins.entry(only.to_string()).or_insert(0) += 1;
        }
        let (metrics, body, next) = evaluated.into_iter().nth(chosen).expect("index in range");
        current = metrics;
        prefix.extend(&body);
        out_segments.push(Segment::Chunk(body));
        phys = next;
    }
    let after = Metrics::of(&prefix);
    debug_assert_eq!(after, current);
    Ok(ResynthOutput {
        circuit: prefix,
        out_permutation: Permutation::from_image(phys).expect("bijection"),
        segments: out_segments,
        before,
        after,
        chunks: chunk_list.len(),
        wins,
        sole_wins,
    })
}

/// `.qc` front end: the residual permutation is written as an `out-perm:`
/// trailer line listing, for each wire in declaration order, the wire that
/// carries its value at the end.
pub fn resynthesize_qc(
    qc: &QcCircuit,
    portfolio: &Portfolio,
    tables: &HashMap<usize, ChunkTables>,
) -> Result<(QcCircuit, ResynthOutput)> {
    let out = resynthesize(&qc.circuit, portfolio, tables)?;
    let mut result = qc.clone();
    result.circuit = out.circuit.clone();
    result.push_out_perm(&out.out_permutation);
    Ok((result, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::gf2::BitMatrix;

    /// Chunk by chunk: `Φ_after·A = S·Φ_before`, barriers relabeled by the
    /// current map.
    fn check_equivalent(original: &Circuit, out: &ResynthOutput) {
        let n = original.n_wires();
        let mut phys = Permutation::identity(n);
        let mut segs = out.segments.iter();
        let mut last_phys = None;
        for seg in original.split_cnot_chunks() {
            match (seg, segs.next().unwrap()) {
                (Segment::Barrier(g), Segment::Barrier(h)) => {
                    assert_eq!(g.relabeled(|w| phys.apply(w)), *h);
                }
                (Segment::Chunk(a), Segment::Chunk(s)) => {
                    let a = a.simulate().unwrap();
                    let s = s.simulate().unwrap();
                    // recover the map after this chunk: Φ' = S·Φ·A^{-1}
                    let next = s.mul(&phys.to_matrix()).mul(&a.invert().unwrap());
                    phys = next.as_permutation().expect("chunk output is a relabeling");
                    last_phys = Some(phys.clone());
                }
                _ => panic!("segment structure changed"),
            }
        }
        if let Some(p) = last_phys {
            assert_eq!(p, out.out_permutation);
        }
    }

    fn sample_circuit() -> Circuit {
        let mut c = Circuit::new(4);
        for (a, b) in [
            (0, 1),
            (1, 2),
            (0, 1),
            (2, 3),
            (1, 2),
            (0, 3),
            (3, 1),
            (2, 0),
        ] {
            c.push_cnot(a, b);
        }
        c.push(Gate::other("T", vec![1]));
        for (a, b) in [(1, 0), (0, 1), (1, 0), (2, 3), (3, 2)] {
            c.push_cnot(a, b);
        }
        c.push(Gate::other("T*", vec![0]));
        c.push(Gate::other("H", vec![3]));
        c.push_cnot(0, 3);
        c
    }

    #[test]
    fn cnot_free_circuit_unchanged() {
        let mut c = Circuit::new(2);
        c.push(Gate::other("T", vec![0]));
        c.push(Gate::other("H", vec![1]));
        let out = resynthesize(&c, &Portfolio::full(0), &HashMap::new()).unwrap();
        assert_eq!(out.circuit, c);
        assert!(out.out_permutation.is_identity());
        assert_eq!(out.chunks, 0);
    }

    #[test]
    fn identity_chunk_vanishes() {
        let whole = Circuit::from_cnots(3, [(0, 1), (1, 2), (0, 1), (1, 2), (0, 2)]);
        assert!(whole.simulate().unwrap().is_identity());
        let out = resynthesize(
            &whole,
            &Portfolio::parse("dacsynth", 0).unwrap(),
            &HashMap::new(),
        )
        .unwrap();
        assert!(out.circuit.is_empty());
        assert!(out.after.depth < out.before.depth);
    }

    #[test]
    fn metrics_never_get_worse() {
        let c = sample_circuit();
        let out = resynthesize(&c, &Portfolio::full(3), &HashMap::new()).unwrap();
        assert_eq!(out.before.t_count, out.after.t_count);
        assert_eq!(out.before.t_depth, out.after.t_depth);
        assert!(out.after.depth <= out.before.depth);
        assert!(out.after.cnots <= out.before.cnots);
        assert!(out.after.depth < out.before.depth);
        check_equivalent(&c, &out);
        assert!(out.wins.values().sum::<usize>() >= out.chunks);
    }

    #[test]
    fn swap_chunk_becomes_relabeling() {
        let mut c = Circuit::from_cnots(2, [(0, 1), (1, 0), (0, 1)]);
        c.push(Gate::other("T", vec![0]));
        let out = resynthesize(
            &c,
            &Portfolio::parse("gaussian", 0).unwrap(),
            &HashMap::new(),
        )
        .unwrap();
        assert_eq!(out.circuit.cnot_count(), 0);
        assert_eq!(out.circuit.gates(), &[Gate::other("T", vec![1])]);
        assert_eq!(out.out_permutation.image(), &[1, 0]);
        let qc = QcCircuit::new(vec!["a".into(), "b".into()], c);
        let (res, _) = resynthesize_qc(
            &qc,
            &Portfolio::parse("gaussian", 0).unwrap(),
            &HashMap::new(),
        )
        .unwrap();
        assert!(res.write().ends_with("END\n# out-perm: b a\n"));
    }

    #[test]
    fn sidecar_parsing() {
        let text = "# tables\nchunk 0 fresh\n3 1\n1\n1\n0\n\nchunk 2\n2 2\n10\n01\n2 2\n11\n01\n";
        let t = parse_sidecar(text).unwrap();
        assert_eq!(t[&0].a_in, ParityTable::fresh(1, 3));
        assert_eq!(
            t[&0].a_out.matrix(),
            &BitMatrix::from_rows(&["1", "1", "0"])
        );
        assert_eq!(t[&2].a_out.matrix(), &BitMatrix::from_rows(&["11", "01"]));
        assert!(parse_sidecar("chunk x\n").is_err());
        assert!(parse_sidecar("chunk 0 fresh\n2 1\n0\n0\n").is_err());
    }

    #[test]
    fn ancilla_chunk_uses_tables() {
        // wire 2 is an ancilla that must end up holding x0 + x1
        let c = Circuit::from_cnots(
            3,
            [
                (0, 2),
                (1, 0),
                (1, 2),
                (0, 1),
                (1, 0),
                (0, 1),
                (1, 0),
                (0, 2),
                (1, 2),
            ],
        );
        let a_in = ParityTable::fresh(2, 3);
        let a_out = ParityTable::new(c.simulate().unwrap().mul(a_in.matrix())).unwrap();
        let tables = HashMap::from([(
            0,
            ChunkTables {
                a_in: a_in.clone(),
                a_out: a_out.clone(),
            },
        )]);
        let p = Portfolio::parse("dacsynth,ancilla-block,ancilla-direct", 0).unwrap();
        let out = resynthesize(&c, &p, &tables).unwrap();
        let s = out
            .out_permutation
            .to_matrix()
            .transpose()
            .mul(&out.circuit.simulate().unwrap());
        assert_eq!(s.mul(a_in.matrix()), *a_out.matrix());
        assert!(out.after.depth <= out.before.depth);
        assert!(out
            .wins
            .keys()
            .all(|k| ["original", "ancilla-block", "ancilla-direct"].contains(&k.as_str())));
    }
}
