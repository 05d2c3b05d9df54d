//! CNOT circuits, depth metrics and simulation to GF(2) operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, Permutation};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Cnot {
        control: usize,
        target: usize,
    },
    /// Any other gate. Only its wire footprint is ever looked at.
    Other {
        name: String,
        wires: Vec<usize>,
    },
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control equals target");
        Gate::Cnot { control, target }
    }

    pub fn other(name: impl Into<String>, wires: Vec<usize>) -> Self {
        Gate::Other {
            name: name.into(),
            wires,
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// T or T-dagger.
    pub fn is_t(&self) -> bool {
        matches!(self, Gate::Other { name, .. } if name == "T" || name == "T*")
    }

    pub fn name(&self) -> &str {
        match self {
            Gate::Cnot { .. } => "cnot",
            Gate::Other { name, .. } => name,
        }
    }

    pub fn wires(&self) -> impl Iterator<Item = usize> + '_ {
        let (pair, rest): ([Option<usize>; 2], &[usize]) = match self {
            Gate::Cnot { control, target } => ([Some(*control), Some(*target)], &[]),
            Gate::Other { wires, .. } => ([None, None], wires.as_slice()),
        };
        pair.into_iter().flatten().chain(rest.iter().copied())
    }

    /// Same gate with every wire `w` replaced by `map(w)`.
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::Cnot { control, target } => Gate::Cnot {
                control: map(*control),
                target: map(*target),
            },
            Gate::Other { name, wires } => Gate::Other {
                name: name.clone(),
                wires: wires.iter().map(|&w| map(w)).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    n_wires: usize,
    gates: Vec<Gate>,
}

/// A piece of a circuit produced by [`Circuit::split_cnot_chunks`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Chunk(Circuit),
    Barrier(Gate),
}

impl Circuit {
    pub fn new(n_wires: usize) -> Self {
        Circuit {
            n_wires,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n_wires: usize, gates: Vec<Gate>) -> Self {
        let mut c = Circuit::new(n_wires);
        for g in gates {
            c.push(g);
        }
        c
    }

    pub fn from_cnots(n_wires: usize, cnots: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Circuit::from_gates(
            n_wires,
            cnots.into_iter().map(|(c, t)| Gate::cnot(c, t)).collect(),
        )
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) {
        assert!(
            g.wires().all(|w| w < self.n_wires),
            "gate {g:?} outside {} wires",
            self.n_wires
        );
        self.gates.push(g);
    }

    pub fn push_cnot(&mut self, control: usize, target: usize) {
        self.push(Gate::cnot(control, target));
    }

    pub fn extend(&mut self, other: &Circuit) {
        assert!(other.n_wires <= self.n_wires);
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cnot()).count()
    }

    pub fn is_cnot_only(&self) -> bool {
        self.gates.iter().all(Gate::is_cnot)
    }

    /// Circuit depth; alias for [`Circuit::depth_slices`].
    pub fn depth(&self) -> usize {
        self.depth_slices()
    }

    /// Groups gates into slices of pairwise wire-disjoint gates. Each gate is
    /// pulled left past every slice it does not touch and lands right after
    /// the first slice that shares a wire with it.
    pub fn slices(&self) -> Vec<Vec<usize>> {
        let mut slices: Vec<Vec<usize>> = Vec::new();
        // index of the latest slice occupying each wire, +1 (0 = none)
        let mut last = vec![0usize; self.n_wires];
        for (gi, g) in self.gates.iter().enumerate() {
            let s = g.wires().map(|w| last[w]).max().unwrap_or(0);
            if s == slices.len() {
                slices.push(Vec::new());
            }
            slices[s].push(gi);
            for w in g.wires() {
                last[w] = s + 1;
            }
        }
        slices
    }

    pub fn depth_slices(&self) -> usize {
        self.slices().len()
    }

    /// Longest chain in the dependency DAG, where each gate depends on the
    /// latest earlier gate on each of its wires.
    pub fn depth_dag(&self) -> usize {
        self.longest_path(|_| 1)
    }

    /// Longest path through the dependency DAG counting only T / T* gates.
    pub fn t_depth(&self) -> usize {
        self.longest_path(|g| usize::from(g.is_t()))
    }

    pub fn t_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_t()).count()
    }

    fn longest_path(&self, weight: impl Fn(&Gate) -> usize) -> usize {
        let m = self.gates.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut indeg = vec![0usize; m];
        let mut latest: Vec<Option<usize>> = vec![None; self.n_wires];
        for (gi, g) in self.gates.iter().enumerate() {
            let mut preds: Vec<usize> = g.wires().filter_map(|w| latest[w]).collect();
            preds.sort_unstable();
            preds.dedup();
            for p in preds {
                succ[p].push(gi);
                indeg[gi] += 1;
            }
            for w in g.wires() {
                latest[w] = Some(gi);
            }
        }
        // Kahn's algorithm
        let mut dist: Vec<usize> = self.gates.iter().map(&weight).collect();
        let mut stack: Vec<usize> = (0..m).filter(|&i| indeg[i] == 0).collect();
        let mut best = 0;
        while let Some(u) = stack.pop() {
            best = best.max(dist[u]);
            for &v in &succ[u] {
                dist[v] = dist[v].max(dist[u] + weight(&self.gates[v]));
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    stack.push(v);
                }
            }
        }
        best
    }

    /// Operator computed by a CNOT-only circuit: starting from the identity,
    /// each CNOT(c, t) adds row `c` into row `t`.
    pub fn simulate(&self) -> Result<BitMatrix> {
        let mut m = BitMatrix::identity(self.n_wires);
        for g in &self.gates {
            match g {
                Gate::Cnot { control, target } => m.row_add(*control, *target),
                Gate::Other { name, .. } => return Err(Error::NonLinearGate(name.clone())),
            }
        }
        Ok(m)
    }

    /// Inverse of a CNOT-only circuit (gate order reversed).
    pub fn inverse(&self) -> Result<Circuit> {
        if let Some(g) = self.gates.iter().find(|g| !g.is_cnot()) {
            return Err(Error::NonLinearGate(g.name().to_string()));
        }
        Ok(Circuit {
            n_wires: self.n_wires,
            gates: self.gates.iter().rev().cloned().collect(),
        })
    }

    pub fn relabeled(&self, n_wires: usize, map: impl Fn(usize) -> usize) -> Circuit {
        Circuit::from_gates(
            n_wires,
            self.gates.iter().map(|g| g.relabeled(&map)).collect(),
        )
    }

    /// Maximal runs of consecutive CNOTs, separated by the other gates.
    pub fn split_cnot_chunks(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut run = Circuit::new(self.n_wires);
        for g in &self.gates {
            if g.is_cnot() {
                run.gates.push(g.clone());
            } else {
                if !run.is_empty() {
                    out.push(Segment::Chunk(std::mem::replace(
                        &mut run,
                        Circuit::new(self.n_wires),
                    )));
                }
                out.push(Segment::Barrier(g.clone()));
            }
        }
        if !run.is_empty() {
            out.push(Segment::Chunk(run));
        }
        out
    }

    pub fn join_segments(n_wires: usize, segments: &[Segment]) -> Circuit {
        let mut c = Circuit::new(n_wires);
        for s in segments {
            match s {
                Segment::Chunk(chunk) => c.extend(chunk),
                Segment::Barrier(g) => c.push(g.clone()),
            }
        }
        c
    }

    /// Appends uniformly random CNOTs until the depth reaches `target_depth`.
    pub fn random(n: usize, target_depth: usize, seed: u64) -> Circuit {
        assert!(n >= 2, "random circuits need at least two wires");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Circuit::new(n);
        let mut front = vec![0usize; n];
        let mut depth = 0;
        while depth < target_depth {
            let (control, target) = random_pair(&mut rng, n);
            let level = front[control].max(front[target]) + 1;
            front[control] = level;
            front[target] = level;
            depth = depth.max(level);
            c.gates.push(Gate::Cnot { control, target });
        }
        c
    }

    /// Explicit CNOT realization of a wire permutation: two rounds of disjoint
    /// swaps, three CNOTs each, so the depth is at most 6.
    pub fn permutation_network(p: &Permutation) -> Circuit {
        let n = p.len();
        let mut rounds: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = p.apply(start);
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = p.apply(x);
            }
            let m = cycle.len();
            if m == 1 {
                continue;
            }
            // shifting by one along the cycle = reflection i -> 1-i after i -> -i
            for (round, offset) in [(0, 0), (1, 1)] {
                for i in 0..m {
                    let j = (offset + m - i) % m;
                    if i < j {
                        rounds[round].push((cycle[i], cycle[j]));
                    }
                }
            }
        }
        let mut c = Circuit::new(n);
        for round in &rounds {
            for &(a, b) in round {
                c.push_cnot(a, b);
                c.push_cnot(b, a);
                c.push_cnot(a, b);
            }
        }
        c
    }
}

fn random_pair(rng: &mut impl Rng, n: usize) -> (usize, usize) {
    let control = rng.gen_range(0..n);
    let mut target = rng.gen_range(0..n - 1);
    if target >= control {
        target += 1;
    }
    (control, target)
}

/// Operator of `n*n` uniformly random CNOTs; empirically a worst-case instance.
pub fn random_worst_operator(n: usize, seed: u64) -> BitMatrix {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = BitMatrix::identity(n);
    for _ in 0..n * n {
        let (c, t) = random_pair(&mut rng, n);
        m.row_add(c, t);
    }
    m
}

/// Operator sampled from a random circuit of the given depth.
pub fn random_operator_of_depth(n: usize, depth: usize, seed: u64) -> BitMatrix {
    Circuit::random(n, depth, seed)
        .simulate()
        .expect("random circuits are CNOT-only")
}

/// Output of a synthesis method: a CNOT circuit followed by a wire relabeling.
///
/// The synthesized operator is `out_permutation · simulate(circuit)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisResult {
    pub circuit: Circuit,
    pub out_permutation: Permutation,
    pub method: String,
    pub depth: usize,
    pub cnot_count: usize,
}

impl SynthesisResult {
    pub fn new(circuit: Circuit, out_permutation: Permutation, method: impl Into<String>) -> Self {
        assert!(circuit.is_cnot_only());
        assert_eq!(circuit.n_wires(), out_permutation.len());
        SynthesisResult {
            depth: circuit.depth(),
            cnot_count: circuit.cnot_count(),
            circuit,
            out_permutation,
            method: method.into(),
        }
    }

    /// Builds the result from a row reduction: `gates` (control, target) were
    /// applied as row additions to the target operator, in order, leaving the
    /// permutation matrix `reduced`.
    pub fn from_row_reduction(
        gates: &[(usize, usize)],
        reduced: &BitMatrix,
        method: impl Into<String>,
    ) -> Self {
        let perm = reduced
            .as_permutation()
            .expect("row reduction must end on a permutation matrix");
        let back = perm.inverse();
        let circuit = Circuit::from_cnots(
            reduced.rows(),
            gates
                .iter()
                .rev()
                .map(|&(c, t)| (back.apply(c), back.apply(t))),
        );
        SynthesisResult::new(circuit, perm, method)
    }

    /// Result realizing `second · first`.
    pub fn then(&self, second: &SynthesisResult, method: impl Into<String>) -> Self {
        let back = self.out_permutation.inverse();
        let mut circuit = self.circuit.clone();
        circuit.extend(
            &second
                .circuit
                .relabeled(circuit.n_wires(), |w| back.apply(w)),
        );
        let perm = second.out_permutation.compose(&self.out_permutation);
        SynthesisResult::new(circuit, perm, method)
    }

    /// The operator this result implements.
    pub fn operator(&self) -> BitMatrix {
        let s = self.circuit.simulate().expect("CNOT-only");
        self.out_permutation.permute_rows(&s)
    }

    pub fn implements(&self, target: &BitMatrix) -> bool {
        self.operator() == *target
    }
}
