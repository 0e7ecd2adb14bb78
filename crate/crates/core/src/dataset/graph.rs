use super::DatasetError;

/// A simple directed graph over dense node ids `0..node_count`.
///
/// An edge `u -> v` means `u` depends on (points to) `v`: `u` is a parent of
/// `v` and `v` is a child of `u`. Self-loops and duplicate edges are rejected
/// at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Builds a graph, listing every offending edge if any are invalid.
    pub fn from_edges(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self, DatasetError> {
        if node_count == 0 {
            return Err(DatasetError::EmptyGraph);
        }
        let mut out_adj = vec![Vec::new(); node_count];
        let mut in_adj = vec![Vec::new(); node_count];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut self_loops = Vec::new();
        let mut duplicates = Vec::new();
        for &(u, v) in &edges {
            for id in [u, v] {
                if id >= node_count {
                    return Err(DatasetError::NodeOutOfRange { id, node_count });
                }
            }
            if u == v {
                self_loops.push(u.to_string());
                continue;
            }
            if !seen.insert((u, v)) {
                duplicates.push((u.to_string(), v.to_string()));
                continue;
            }
            out_adj[u].push(v);
            in_adj[v].push(u);
        }
        if !self_loops.is_empty() {
            return Err(DatasetError::SelfLoops(self_loops));
        }
        if !duplicates.is_empty() {
            return Err(DatasetError::DuplicateEdges(duplicates));
        }
        Ok(Self {
            node_count,
            edges,
            out_adj,
            in_adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_adj[u].contains(&v)
    }

    /// A copy of this graph without the listed edges.
    pub fn without_edges(&self, drop: &[(usize, usize)]) -> Self {
        let drop: std::collections::HashSet<_> = drop.iter().copied().collect();
        let edges = self.edges.iter().copied().filter(|e| !drop.contains(e)).collect();
        Self::from_edges(self.node_count, edges).expect("subset of a valid edge set is valid")
    }
}
