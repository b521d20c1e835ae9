//! Induced subgraph matching by VF2-style backtracking. Templates are tiny
//! (at most a few dozen nodes), so no refinement beyond degree and
//! adjacency-consistency pruning is done.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::Graph;

struct Adjacency {
    lists: Vec<Vec<usize>>,
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let mut bits = vec![false; n * n];
        for &(u, v) in g.edges() {
            bits[u * n + v] = true;
            bits[v * n + u] = true;
        }
        Self {
            lists: g.adjacency_lists(),
            n,
            bits,
        }
    }

    fn adjacent(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.n + v]
    }
}

/// Pattern nodes in BFS order from the highest-degree node, with the
/// earliest already-ordered neighbour of each (none for component roots).
fn match_order(pattern: &Adjacency) -> Vec<(usize, Option<usize>)> {
    let mut seen = vec![false; pattern.n];
    let mut order = Vec::with_capacity(pattern.n);
    loop {
        let root = (0..pattern.n)
            .filter(|&v| !seen[v])
            .max_by_key(|&v| (pattern.lists[v].len(), core::cmp::Reverse(v)));
        let Some(root) = root else { break };
        seen[root] = true;
        order.push((root, None));
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in &pattern.lists[u] {
                if !seen[w] {
                    seen[w] = true;
                    order.push((w, Some(u)));
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

struct Search<'a> {
    pattern: &'a Adjacency,
    target: &'a Adjacency,
    order: Vec<(usize, Option<usize>)>,
    forbidden: &'a [bool],
    map: Vec<usize>,
    used: Vec<bool>,
    limit: usize,
    found: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn feasible(&self, depth: usize, p: usize, t: usize) -> bool {
        if self.used[t] || self.forbidden.get(t).copied().unwrap_or(false) {
            return false;
        }
        if self.target.lists[t].len() < self.pattern.lists[p].len() {
            return false;
        }
        self.order[..depth]
            .iter()
            .all(|&(q, _)| self.pattern.adjacent(p, q) == self.target.adjacent(t, self.map[q]))
    }

    fn run(&mut self, depth: usize) {
        if self.found.len() >= self.limit {
            return;
        }
        if depth == self.order.len() {
            self.found.push(self.map.clone());
            return;
        }
        let (p, parent) = self.order[depth];
        let candidates: Vec<usize> = match parent {
            Some(q) => self.target.lists[self.map[q]].clone(),
            None => (0..self.target.n).collect(),
        };
        for t in candidates {
            if self.feasible(depth, p, t) {
                self.map[p] = t;
                self.used[t] = true;
                self.run(depth + 1);
                self.used[t] = false;
                if self.found.len() >= self.limit {
                    return;
                }
            }
        }
    }
}

/// Induced embeddings of `pattern` in `target` avoiding `forbidden` target
/// nodes, as maps from pattern node to target node. Stops after `limit`.
pub fn find_embeddings(pattern: &Graph, target: &Graph, forbidden: &[bool], limit: usize) -> Vec<Vec<usize>> {
    if pattern.node_count() > target.node_count() || pattern.edge_count() > target.edge_count() {
        return Vec::new();
    }
    let p = Adjacency::new(pattern);
    let t = Adjacency::new(target);
    let mut search = Search {
        order: match_order(&p),
        pattern: &p,
        target: &t,
        forbidden,
        map: vec![usize::MAX; pattern.node_count()],
        used: vec![false; target.node_count()],
        limit,
        found: Vec::new(),
    };
    search.run(0);
    search.found
}

pub fn is_isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let mut da = a.degrees();
    let mut db = b.degrees();
    da.sort_unstable();
    db.sort_unstable();
    da == db && !find_embeddings(a, b, &[], 1).is_empty()
}
