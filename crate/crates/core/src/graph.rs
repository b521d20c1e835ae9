//! Undirected, unweighted graphs with node features.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Matrix, SparseMatrix};
use crate::math;
use crate::{Error, Result};

/// An undirected graph. Edges are stored once, as `(u, v)` with `u < v`,
/// in sorted order; self-loops and duplicates are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    features: Matrix,
}

impl Graph {
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Matrix,
    ) -> Result<Self> {
        if features.rows() != node_count {
            return Err(Error::InvalidGraph(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                node_count
            )));
        }
        let mut canon = BTreeSet::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= node_count {
                    return Err(Error::NodeOutOfRange {
                        index: x,
                        node_count,
                    });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            if !canon.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge {u}-{v}")));
            }
        }
        Ok(Self {
            node_count,
            edges: canon.into_iter().collect(),
            features,
        })
    }

    /// Graph whose every node carries the same scalar feature.
    pub fn with_constant_features(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        value: f64,
    ) -> Result<Self> {
        Self::new(node_count, edges, Matrix::filled(node_count, 1, value))
    }

    pub fn empty(feature_dim: usize) -> Self {
        Self {
            node_count: 0,
            edges: Vec::new(),
            features: Matrix::zeros(0, feature_dim),
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Same nodes and features, keeping only edges for which `keep` holds.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, (usize, usize)) -> bool) -> Graph {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(k, e)| keep(*k, **e))
            .map(|(_, e)| *e)
            .collect();
        Graph {
            node_count: self.node_count,
            edges,
            features: self.features.clone(),
        }
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.node_count {
            return Err(Error::LengthMismatch {
                left: perm.len(),
                right: self.node_count,
            });
        }
        let mut features = Matrix::zeros(self.node_count, self.feature_dim());
        for (i, &p) in perm.iter().enumerate() {
            features.row_mut(p).copy_from_slice(self.features.row(i));
        }
        Graph::new(
            self.node_count,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
            features,
        )
    }
}

/// `D̃^{-1/2}(A + I)D̃^{-1/2}` as a dense matrix.
pub fn normalized_adjacency(g: &Graph) -> Matrix {
    normalized_adjacency_sparse(g).to_dense()
}

/// Sparse form of [`normalized_adjacency`].
pub fn normalized_adjacency_sparse(g: &Graph) -> SparseMatrix {
    let n = g.node_count();
    let deg: Vec<f64> = g.degrees().iter().map(|&d| d as f64 + 1.0).collect();
    let mut triplets = Vec::with_capacity(n + 2 * g.edge_count());
    for i in 0..n {
        triplets.push((i, i, 1.0 / deg[i]));
    }
    for &(u, v) in g.edges() {
        let w = 1.0 / math::sqrt(deg[u] * deg[v]);
        triplets.push((u, v, w));
        triplets.push((v, u, w));
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// `A + I` as a sparse matrix (GIN aggregation with ε = 0).
pub fn adjacency_with_self_loops(g: &Graph) -> SparseMatrix {
    let n = g.node_count();
    let mut triplets = Vec::with_capacity(n + 2 * g.edge_count());
    for i in 0..n {
        triplets.push((i, i, 1.0));
    }
    for &(u, v) in g.edges() {
        triplets.push((u, v, 1.0));
        triplets.push((v, u, 1.0));
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// A subgraph together with the source-graph index of each of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub graph: Graph,
    pub source_nodes: Vec<usize>,
}

/// Subgraph induced by `nodes`, relabeled densely in ascending order of the
/// original indices.
pub fn induced_subgraph(g: &Graph, nodes: &[usize]) -> Result<Subgraph> {
    let mut sorted: Vec<usize> = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&bad) = sorted.iter().find(|&&x| x >= g.node_count()) {
        return Err(Error::NodeOutOfRange {
            index: bad,
            node_count: g.node_count(),
        });
    }
    let mut remap = vec![usize::MAX; g.node_count()];
    for (new, &old) in sorted.iter().enumerate() {
        remap[old] = new;
    }
    let edges = g
        .edges()
        .iter()
        .filter(|(u, v)| remap[*u] != usize::MAX && remap[*v] != usize::MAX)
        .map(|&(u, v)| (remap[u], remap[v]));
    let mut features = Matrix::zeros(sorted.len(), g.feature_dim());
    for (new, &old) in sorted.iter().enumerate() {
        features.row_mut(new).copy_from_slice(g.features().row(old));
    }
    Ok(Subgraph {
        graph: Graph::new(sorted.len(), edges, features)?,
        source_nodes: sorted,
    })
}

/// Connected components with at least one edge, ordered by smallest node
/// index. Degree-0 nodes are dropped.
pub fn connected_components(g: &Graph) -> Vec<Subgraph> {
    let adj = g.adjacency_lists();
    let mut seen = vec![false; g.node_count()];
    let mut out = Vec::new();
    for start in 0..g.node_count() {
        if seen[start] || adj[start].is_empty() {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            members.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        out.push(induced_subgraph(g, &members).expect("members are in range"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// A graph with its class label, split, and synthetic ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub label: u8,
    pub split: Split,
    /// Names of the motifs planted in the graph (empty for external data).
    pub motif_tags: Vec<String>,
    /// Node sets of the planted motifs, aligned with `motif_tags`.
    pub motif_nodes: Vec<Vec<usize>>,
}

impl LabeledGraph {
    pub fn validate(&self) -> Result<()> {
        if self.label > 1 {
            return Err(Error::InvalidGraph(format!("label {} not in {{0,1}}", self.label)));
        }
        if !self.motif_nodes.is_empty() && self.motif_nodes.len() != self.motif_tags.len() {
            return Err(Error::LengthMismatch {
                left: self.motif_nodes.len(),
                right: self.motif_tags.len(),
            });
        }
        for set in &self.motif_nodes {
            if let Some(&bad) = set.iter().find(|&&x| x >= self.graph.node_count()) {
                return Err(Error::NodeOutOfRange {
                    index: bad,
                    node_count: self.graph.node_count(),
                });
            }
        }
        Ok(())
    }

    /// Edges lying entirely inside one planted motif.
    pub fn ground_truth_edges(&self) -> BTreeSet<(usize, usize)> {
        let mut owner = vec![usize::MAX; self.graph.node_count()];
        for (k, set) in self.motif_nodes.iter().enumerate() {
            for &n in set {
                owner[n] = k;
            }
        }
        self.graph
            .edges()
            .iter()
            .filter(|(u, v)| owner[*u] != usize::MAX && owner[*u] == owner[*v])
            .copied()
            .collect()
    }
}
