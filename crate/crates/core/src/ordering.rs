//! Fill-reducing symmetric orderings.
//!
//! Nested dissection with level-structure separators: each connected piece
//! is split by the middle BFS level rooted at a pseudo-peripheral node, the
//! two halves are ordered recursively and the separator goes last.

use crate::sparse::{SparseMat, Triplets};

/// Pieces at or below this size keep their incoming order.
pub const ND_LEAF: usize = 64;

const NONE: usize = usize::MAX;

struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    fn from_pattern(a: &SparseMat) -> Self {
        let n = a.nrows();
        let mut t = Triplets::with_capacity(n, n, 2 * a.nnz());
        for (i, j, _) in a.iter() {
            if i != j {
                t.push(i, j, 1.0);
                t.push(j, i, 1.0);
            }
        }
        let sym = t.to_csr().expect("indices come from a square matrix");
        Self {
            ptr: sym.row_offsets().to_vec(),
            adj: sym.col_indices().to_vec(),
        }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }
}

struct Dissector<'g> {
    g: &'g Graph,
    /// Which piece a node currently belongs to (`NONE` once ordered).
    owner: Vec<usize>,
    level: Vec<usize>,
    next_id: usize,
    order: Vec<usize>,
}

impl Dissector<'_> {
    fn fresh_id(&mut self, nodes: &[usize]) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        for &v in nodes {
            self.owner[v] = id;
        }
        id
    }

    /// BFS levels from `root` inside piece `id`.
    fn levels(&mut self, root: usize, id: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![root]];
        self.level[root] = 0;
        let mut seen = vec![root];
        loop {
            let mut next = Vec::new();
            for &v in out.last().expect("nonempty") {
                for &w in self.g.neighbors(v) {
                    if self.owner[w] == id && self.level[w] == NONE {
                        self.level[w] = out.len();
                        next.push(w);
                        seen.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            out.push(next);
        }
        for v in seen {
            self.level[v] = NONE;
        }
        out
    }

    fn degree_in(&self, v: usize, id: usize) -> usize {
        self.g.neighbors(v).iter().filter(|&&w| self.owner[w] == id).count()
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= ND_LEAF {
            self.order.extend(&nodes);
            for v in nodes {
                self.owner[v] = NONE;
            }
            return;
        }
        let id = self.fresh_id(&nodes);
        let mut levels = self.levels(nodes[0], id);
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            let first = levels.concat();
            self.fresh_id(&first);
            let mut comps = vec![first];
            for &v in &nodes {
                if self.owner[v] == id {
                    let c = self.levels(v, id).concat();
                    self.fresh_id(&c);
                    comps.push(c);
                }
            }
            for c in comps {
                self.dissect(c);
            }
            return;
        }
        // pseudo-peripheral root
        for _ in 0..8 {
            let last = levels.last().expect("nonempty");
            let cand = *last
                .iter()
                .min_by_key(|&&v| self.degree_in(v, id))
                .expect("nonempty level");
            let trial = self.levels(cand, id);
            if trial.len() <= levels.len() {
                break;
            }
            levels = trial;
        }
        if levels.len() < 3 {
            self.order.extend(&nodes);
            for v in nodes {
                self.owner[v] = NONE;
            }
            return;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut k = 1;
        for (i, lv) in levels.iter().enumerate() {
            if acc + lv.len() > half {
                k = i;
                break;
            }
            acc += lv.len();
        }
        let k = k.clamp(1, levels.len() - 2);
        let sep = levels[k].clone();
        for &v in &sep {
            self.owner[v] = NONE;
        }
        let left: Vec<usize> = levels[..k].concat();
        let right: Vec<usize> = levels[k + 1..].concat();
        self.dissect(left);
        self.dissect(right);
        self.order.extend(sep);
    }
}

/// Nested-dissection permutation of the symmetric pattern of `a`:
/// position `k` of the result holds the original index eliminated `k`-th.
pub fn nested_dissection(a: &SparseMat) -> Vec<usize> {
    let n = a.nrows();
    let g = Graph::from_pattern(a);
    let mut d = Dissector {
        g: &g,
        owner: vec![NONE; n],
        level: vec![NONE; n],
        next_id: 0,
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect());
    debug_assert_eq!(d.order.len(), n);
    d.order
}

/// `P A Pᵀ` with `(P A Pᵀ)[i][j] = A[perm[i]][perm[j]]`.
pub fn permute_symmetric(a: &SparseMat, perm: &[usize]) -> SparseMat {
    let n = a.nrows();
    let mut inv = vec![0usize; n];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    let mut t = Triplets::with_capacity(n, n, a.nnz());
    for (i, j, v) in a.iter() {
        t.push(inv[i], inv[j], v);
    }
    t.to_csr().expect("permutation keeps indices in range")
}
