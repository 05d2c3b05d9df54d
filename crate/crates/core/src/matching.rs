//! Matchings: maximum-weight matching on general graphs (Edmonds' blossom
//! algorithm, primal-dual, O(V^3)), maximum bipartite matching, and the
//! decomposition of a bipartite graph of maximum degree `Δ` into `Δ`
//! matchings.

use std::collections::BTreeMap;

use crate::gf2::BitMatrix;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedGraph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize, i64)>,
}

impl WeightedGraph {
    pub fn new(n_vertices: usize) -> Self {
        WeightedGraph {
            n_vertices,
            edges: Vec::new(),
        }
    }

    /// Adds an undirected edge; parallel edges count with their largest weight.
    pub fn add_edge(&mut self, u: usize, v: usize, w: i64) {
        assert!(u != v && u < self.n_vertices && v < self.n_vertices);
        self.edges.push((u, v, w));
    }

    pub fn weight_of(&self, m: &MatchingSet) -> i64 {
        m.pairs
            .iter()
            .map(|&(a, b)| {
                self.edges
                    .iter()
                    .filter(|e| (e.0 == a && e.1 == b) || (e.0 == b && e.1 == a))
                    .map(|e| e.2)
                    .max()
                    .expect("matched pair is not an edge")
            })
            .sum()
    }
}

/// Vertex-disjoint set of pairs, each stored as `(min, max)` for general
/// graphs and `(left, right)` for bipartite graphs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchingSet {
    pub pairs: Vec<(usize, usize)>,
}

impl MatchingSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Biadjacency matrix: rows are left vertices, columns right vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub adjacency: BitMatrix,
}

impl BipartiteGraph {
    pub fn new(adjacency: BitMatrix) -> Self {
        BipartiteGraph { adjacency }
    }

    pub fn left_count(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn right_count(&self) -> usize {
        self.adjacency.cols()
    }

    pub fn max_degree(&self) -> usize {
        let a = &self.adjacency;
        let rows = (0..a.rows()).map(|i| a.row_weight(i)).max().unwrap_or(0);
        let cols = (0..a.cols()).map(|j| a.col_weight(j)).max().unwrap_or(0);
        rows.max(cols)
    }
}

/// Maximum-weight matching. Edges of non-positive weight are ignored.
pub fn max_weight_matching(g: &WeightedGraph) -> MatchingSet {
    let mut best: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for &(u, v, w) in &g.edges {
        if w > 0 && u != v {
            let e = best.entry((u.min(v), u.max(v))).or_insert(w);
            *e = (*e).max(w);
        }
    }
    let edges: Vec<(usize, usize, i64)> = best.into_iter().map(|((u, v), w)| (u, v, w)).collect();
    if edges.is_empty() {
        return MatchingSet::default();
    }
    let n = g.n_vertices;
    // doubling keeps every dual update integral
    let edges: Vec<(usize, usize, i64)> =
        edges.into_iter().map(|(u, v, w)| (u, v, 2 * w)).collect();
    let mate = Blossom::new(n, edges.clone()).solve();
    let mut pairs = Vec::new();
    for (v, &p) in mate.iter().enumerate() {
        if p != NONE {
            let e = edges[p / 2];
            let w = if p % 2 == 0 { e.0 } else { e.1 };
            if v < w {
                pairs.push((v, w));
            }
        }
    }
    pairs.sort_unstable();
    MatchingSet { pairs }
}

const NONE: usize = usize::MAX;

/// Primal-dual blossom state. Vertex `v` owns endpoints `2k` / `2k+1` of
/// edge `k`; blossoms are numbered `n..2n`.
struct Blossom {
    n: usize,
    edges: Vec<(usize, usize, i64)>,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<i8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl Blossom {
    fn new(n: usize, edges: Vec<(usize, usize, i64)>) -> Self {
        let m = edges.len();
        let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        let mut endpoint = Vec::with_capacity(2 * m);
        let mut neighbend = vec![Vec::new(); n];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut dualvar = vec![maxweight; n];
        dualvar.extend(std::iter::repeat_n(0, n));
        let mut blossombase: Vec<usize> = (0..n).collect();
        blossombase.extend(std::iter::repeat_n(NONE, n));
        Blossom {
            n,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; n],
            label: vec![0; 2 * n],
            labelend: vec![NONE; 2 * n],
            inblossom: (0..n).collect(),
            blossomparent: vec![NONE; 2 * n],
            blossomchilds: vec![Vec::new(); 2 * n],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * n],
            bestedge: vec![NONE; 2 * n],
            blossombestedges: vec![None; 2 * n],
            unusedblossoms: (n..2 * n).collect(),
            dualvar,
            allowedge: vec![false; m],
            queue: Vec::new(),
        }
    }

    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.n {
                out.push(t);
            } else {
                stack.extend(self.blossomchilds[t].iter().rev());
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: i8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let leaves = self.leaves(b);
            self.queue.extend(leaves);
        } else if t == 2 {
            let base = self.blossombase[b];
            let mb = self.mate[base];
            debug_assert!(mb != NONE);
            self.assign_label(self.endpoint[mb], 1, mb ^ 1);
        }
    }

    /// Traces back from `v` and `w`; returns the base of a new blossom, or
    /// `NONE` if an augmenting path was found.
    fn scan_blossom(&mut self, mut v: usize, mut w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], 1);
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                debug_assert_eq!(self.label[b], 2);
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom pool exhausted");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        debug_assert_eq!(self.label[bb], 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        for leaf in self.leaves_of_path(&path) {
            if self.label[self.inblossom[leaf]] == 2 {
                self.queue.push(leaf);
            }
            self.inblossom[leaf] = b;
        }
        self.blossomchilds[b] = path.clone();
        self.blossomendps[b] = endps;

        let mut bestedgeto = vec![NONE; 2 * self.n];
        for &sub in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[sub].take() {
                Some(list) => vec![list],
                None => self
                    .leaves(sub)
                    .into_iter()
                    .map(|lv| self.neighbend[lv].iter().map(|p| p / 2).collect())
                    .collect(),
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.bestedge[sub] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for &k in &list {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
        self.blossombestedges[b] = Some(list);
    }

    fn leaves_of_path(&self, path: &[usize]) -> Vec<usize> {
        path.iter().flat_map(|&s| self.leaves(s)).collect()
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.n {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for leaf in self.leaves(s) {
                    self.inblossom[leaf] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len() as isize;
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = childs.iter().position(|&c| c == entrychild).unwrap() as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 == 1 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
            let mut p = self.labelend[b];
            while j != 0 {
                let q = self.endpoint[p ^ 1];
                self.label[q] = 0;
                let e = self.blossomendps[b][at(j - endptrick as isize)];
                let r = self.endpoint[e ^ endptrick ^ 1];
                self.label[r] = 0;
                self.assign_label(q, 2, p);
                self.allowedge[e / 2] = true;
                j += jstep;
                p = self.blossomendps[b][at(j - endptrick as isize)] ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = childs[at(j)];
            let q = self.endpoint[p ^ 1];
            self.label[q] = 2;
            self.label[bv] = 2;
            self.labelend[q] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[at(j)] != entrychild {
                let bv = childs[at(j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let leaves = self.leaves(bv);
                if let Some(&v) = leaves.iter().find(|&&v| self.label[v] != 0) {
                    debug_assert_eq!(self.label[v], 2);
                    self.label[v] = 0;
                    let m = self.endpoint[self.mate[self.blossombase[bv]]];
                    self.label[m] = 0;
                    let le = self.labelend[v];
                    self.assign_label(v, 2, le);
                }
                j += jstep;
            }
        }
        self.label[b] = -1;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.n {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len() as isize;
        let i = self.blossomchilds[b].iter().position(|&c| c == t).unwrap();
        let mut j = i as isize;
        let (jstep, endptrick): (isize, usize) = if i & 1 == 1 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            let p = self.blossomendps[b][at(j - endptrick as isize)] ^ endptrick;
            if t >= self.n {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            if t >= self.n {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], 1);
                if bs >= self.n {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], 2);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                if bt >= self.n {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn solve(mut self) -> Vec<usize> {
        let n = self.n;
        for _ in 0..n {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|e| *e = NONE);
            for b in n..2 * n {
                self.blossombestedges[b] = None;
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while let Some(v) = self.queue.pop() {
                    if augmented {
                        break;
                    }
                    debug_assert_eq!(self.label[self.inblossom[v]], 1);
                    let nb = self.neighbend[v].clone();
                    for p in nb {
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                }
                if augmented {
                    break;
                }

                // no augmenting path with tight edges: adjust the duals
                let mut deltatype = 1;
                let mut delta = *self.dualvar[..n].iter().min().unwrap();
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                for v in 0..n {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * n {
                    if self.blossomparent[b] == NONE
                        && self.label[b] == 1
                        && self.bestedge[b] != NONE
                    {
                        let kslack = self.slack(self.bestedge[b]);
                        debug_assert_eq!(kslack % 2, 0);
                        let d = kslack / 2;
                        if d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && self.dualvar[b] < delta
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }
                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(deltablossom, false),
                }
            }
            if !augmented {
                break;
            }
            for b in n..2 * n {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] != NONE
                    && self.label[b] == 1
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
        self.mate
    }
}

/// Maximum-cardinality bipartite matching (augmenting paths, left vertices
/// in index order).
pub fn max_bipartite_matching(g: &BipartiteGraph) -> MatchingSet {
    let a = &g.adjacency;
    let mut match_right = vec![NONE; a.cols()];
    for u in 0..a.rows() {
        let mut seen = vec![false; a.cols()];
        augment_from(a, u, &mut seen, &mut match_right);
    }
    let mut pairs: Vec<(usize, usize)> = match_right
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != NONE)
        .map(|(r, &l)| (l, r))
        .collect();
    pairs.sort_unstable();
    MatchingSet { pairs }
}

fn augment_from(a: &BitMatrix, u: usize, seen: &mut [bool], match_right: &mut [usize]) -> bool {
    for v in a.row_ones(u).collect::<Vec<_>>() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if match_right[v] == NONE || augment_from(a, match_right[v], seen, match_right) {
            match_right[v] = u;
            return true;
        }
    }
    false
}

/// Splits the edges into exactly `Δ` matchings (König's edge-coloring
/// theorem), by recoloring alternating paths.
pub fn edge_color_bipartite(g: &BipartiteGraph) -> Vec<MatchingSet> {
    let a = &g.adjacency;
    let delta = g.max_degree();
    if delta == 0 {
        return Vec::new();
    }
    let (nl, nr) = (a.rows(), a.cols());
    // at_left[u][c] = right neighbour through colour c
    let mut at_left = vec![vec![NONE; delta]; nl];
    let mut at_right = vec![vec![NONE; delta]; nr];
    for u in 0..nl {
        for v in a.row_ones(u).collect::<Vec<_>>() {
            let ca = (0..delta)
                .find(|&c| at_left[u][c] == NONE)
                .expect("degree bound");
            let cb = (0..delta)
                .find(|&c| at_right[v][c] == NONE)
                .expect("degree bound");
            if at_right[v][ca] != NONE {
                // swap colours ca/cb along the path leaving v through ca
                let mut path = Vec::new();
                let mut right = v;
                loop {
                    let l = at_right[right][ca];
                    if l == NONE {
                        break;
                    }
                    path.push((l, right, ca));
                    let r2 = at_left[l][cb];
                    if r2 == NONE {
                        break;
                    }
                    path.push((l, r2, cb));
                    right = r2;
                }
                for &(l, r, c) in &path {
                    at_left[l][c] = NONE;
                    at_right[r][c] = NONE;
                }
                for &(l, r, c) in &path {
                    let c2 = if c == ca { cb } else { ca };
                    at_left[l][c2] = r;
                    at_right[r][c2] = l;
                }
            }
            debug_assert_eq!(at_right[v][ca], NONE);
            at_left[u][ca] = v;
            at_right[v][ca] = u;
        }
    }
    (0..delta)
        .map(|c| MatchingSet {
            pairs: (0..nl)
                .filter(|&u| at_left[u][c] != NONE)
                .map(|u| (u, at_left[u][c]))
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive optimum: the lowest free vertex is either left unmatched
    /// or matched to one of its neighbours.
    fn brute_force_weight(g: &WeightedGraph) -> i64 {
        fn go(g: &WeightedGraph, used: &mut Vec<bool>) -> i64 {
            let Some(u) = (0..g.n_vertices).find(|&v| !used[v]) else {
                return 0;
            };
            used[u] = true;
            let mut best = go(g, used);
            for &(a, b, w) in &g.edges {
                let v = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if !used[v] {
                    used[v] = true;
                    best = best.max(w + go(g, used));
                    used[v] = false;
                }
            }
            used[u] = false;
            best
        }
        go(g, &mut vec![false; g.n_vertices])
    }

    fn brute_force_bipartite(a: &BitMatrix) -> usize {
        // try every injective assignment of rows, by recursion
        fn go(a: &BitMatrix, row: usize, used: &mut Vec<bool>) -> usize {
            if row == a.rows() {
                return 0;
            }
            let mut best = go(a, row + 1, used);
            for c in 0..a.cols() {
                if a.get(row, c) && !used[c] {
                    used[c] = true;
                    best = best.max(1 + go(a, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        go(a, 0, &mut vec![false; a.cols()])
    }

    fn check_matching(pairs: &[(usize, usize)]) {
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in pairs {
            assert!(
                seen.insert(a) && seen.insert(b),
                "vertex reused in {pairs:?}"
            );
        }
    }

    #[test]
    fn weighted_examples() {
        assert!(max_weight_matching(&WeightedGraph::new(0)).is_empty());
        let mut g = WeightedGraph::new(3);
        g.add_edge(0, 1, 5);
        g.add_edge(1, 2, 5);
        let m = max_weight_matching(&g);
        assert_eq!(m.len(), 1);
        assert_eq!(g.weight_of(&m), 5);
        let mut g = WeightedGraph::new(4);
        g.add_edge(0, 1, -3);
        g.add_edge(2, 3, 0);
        assert!(max_weight_matching(&g).is_empty());
    }

    #[test]
    fn weighted_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let n = rng.gen_range(1..=11);
            let mut g = WeightedGraph::new(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.4) {
                        g.add_edge(u, v, rng.gen_range(-3..20));
                    }
                }
            }
            let m = max_weight_matching(&g);
            check_matching(&m.pairs);
            assert_eq!(g.weight_of(&m), brute_force_weight(&g), "graph {g:?}");
        }
    }

    #[test]
    fn weighted_odd_cycles_need_blossoms() {
        // triangle plus pendant edges: optimum uses the pendants
        let mut g = WeightedGraph::new(6);
        for (u, v, w) in [
            (0, 1, 6),
            (1, 2, 6),
            (0, 2, 6),
            (0, 3, 5),
            (1, 4, 5),
            (2, 5, 5),
        ] {
            g.add_edge(u, v, w);
        }
        assert_eq!(g.weight_of(&max_weight_matching(&g)), 15);
        // dense graph with equal weights: perfect matching
        let mut g = WeightedGraph::new(8);
        for u in 0..8 {
            for v in u + 1..8 {
                g.add_edge(u, v, 1 + ((u * 7 + v * 3) % 5) as i64);
            }
        }
        let m = max_weight_matching(&g);
        assert_eq!(g.weight_of(&m), brute_force_weight(&g));
    }

    #[test]
    fn bipartite_examples() {
        let g = BipartiteGraph::new(BitMatrix::zeros(3, 4));
        assert!(max_bipartite_matching(&g).is_empty());
        let g = BipartiteGraph::new(BitMatrix::identity(5));
        assert_eq!(max_bipartite_matching(&g).len(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = BitMatrix::from_fn(6, 6, |_, _| rng.gen_bool(0.3));
            let m = max_bipartite_matching(&BipartiteGraph::new(a.clone()));
            check_matching(
                &m.pairs
                    .iter()
                    .map(|&(l, r)| (l, r + 100))
                    .collect::<Vec<_>>(),
            );
            assert!(m.pairs.iter().all(|&(l, r)| a.get(l, r)));
            assert_eq!(m.len(), brute_force_bipartite(&a));
        }
    }

    fn check_coloring(a: &BitMatrix, colors: &[MatchingSet]) {
        let delta = (0..a.rows())
            .map(|i| (0..a.cols()).filter(|&j| a.get(i, j)).count())
            .chain((0..a.cols()).map(|j| (0..a.rows()).filter(|&i| a.get(i, j)).count()))
            .max()
            .unwrap_or(0);
        assert_eq!(colors.len(), delta);
        let mut covered = BitMatrix::zeros(a.rows(), a.cols());
        for c in colors {
            check_matching(
                &c.pairs
                    .iter()
                    .map(|&(l, r)| (l, r + 1000))
                    .collect::<Vec<_>>(),
            );
            for &(l, r) in &c.pairs {
                assert!(a.get(l, r) && !covered.get(l, r));
                covered.set(l, r, true);
            }
        }
        assert_eq!(&covered, a);
    }

    #[test]
    fn edge_coloring_examples() {
        let colors = edge_color_bipartite(&BipartiteGraph::new(BitMatrix::identity(4)));
        assert_eq!(colors.len(), 1);
        assert_eq!(colors[0].len(), 4);
        let ones = BitMatrix::from_fn(3, 3, |_, _| true);
        let colors = edge_color_bipartite(&BipartiteGraph::new(ones.clone()));
        assert_eq!(colors.len(), 3);
        assert!(colors.iter().all(|c| c.len() == 3));
        check_coloring(&ones, &colors);
        assert!(edge_color_bipartite(&BipartiteGraph::new(BitMatrix::zeros(2, 2))).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let (r, c) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
            let p = rng.gen_range(0.05..0.9);
            let a = BitMatrix::from_fn(r, c, |_, _| rng.gen_bool(p));
            check_coloring(&a, &edge_color_bipartite(&BipartiteGraph::new(a.clone())));
        }
    }
}
