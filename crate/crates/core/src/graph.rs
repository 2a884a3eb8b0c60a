//! Partially directed graphs, frozen adjacency snapshots and separating sets.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {node} out of range for {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("graph invariant violated: {0}")]
    Invariant(String),
}

/// Orders a node pair as `(min, max)`.
#[inline]
pub fn canonical(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Graph with undirected (`i -- j`) and directed (`i -> j`) edges.
///
/// Stored as an `n x n` mark matrix: `mark(i, j) && mark(j, i)` is an
/// undirected edge, `mark(i, j)` alone is `i -> j`. A pair therefore can
/// never be undirected and directed at once, nor directed both ways.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MixedGraph {
    n: usize,
    marks: Vec<bool>,
}

impl MixedGraph {
    /// Graph over `n` nodes with no edges.
    pub fn empty(n: usize) -> Self {
        MixedGraph {
            n,
            marks: vec![false; n * n],
        }
    }

    /// Complete undirected graph over `n >= 2` nodes.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                g.marks[i * n + j] = i != j;
            }
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    fn mark(&self, i: usize, j: usize) -> bool {
        self.marks[i * self.n + j]
    }

    #[inline]
    fn set_mark(&mut self, i: usize, j: usize, v: bool) {
        self.marks[i * self.n + j] = v;
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), GraphError> {
        for node in [i, j] {
            if node >= self.n {
                return Err(GraphError::NodeOutOfRange { node, n_nodes: self.n });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        Ok(())
    }

    /// Any edge between `i` and `j`.
    #[inline]
    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) || self.mark(j, i)
    }

    #[inline]
    pub fn has_undirected(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) && self.mark(j, i)
    }

    #[inline]
    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.mark(from, to) && !self.mark(to, from)
    }

    /// Sorted list of every node adjacent to `i`, ignoring direction.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.is_adjacent(i, j)).collect()
    }

    pub fn undirected_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_undirected(i, j)).collect()
    }

    pub fn parents(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_directed(j, i)).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_directed(i, j)).collect()
    }

    /// Inserts `i -- j`, replacing any existing edge on the pair.
    pub fn add_undirected(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        self.check_pair(i, j)?;
        self.set_mark(i, j, true);
        self.set_mark(j, i, true);
        Ok(())
    }

    /// Inserts `from -> to`, replacing any existing edge on the pair.
    pub fn add_directed(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        self.check_pair(from, to)?;
        self.set_mark(from, to, true);
        self.set_mark(to, from, false);
        Ok(())
    }

    /// Removes `i -- j`. Returns `false` (a no-op) when it is absent.
    pub fn remove_undirected(&mut self, i: usize, j: usize) -> bool {
        if i >= self.n || j >= self.n || !self.has_undirected(i, j) {
            return false;
        }
        self.set_mark(i, j, false);
        self.set_mark(j, i, false);
        true
    }

    /// Turns `from -- to` into `from -> to`. Returns `false` (a no-op) when
    /// the undirected edge is absent.
    pub fn orient(&mut self, from: usize, to: usize) -> bool {
        if from >= self.n || to >= self.n || !self.has_undirected(from, to) {
            return false;
        }
        self.set_mark(to, from, false);
        true
    }

    /// Directs an adjacent pair as `from -> to` whatever its current mark.
    /// Returns `false` when the pair is not adjacent.
    pub fn set_direction(&mut self, from: usize, to: usize) -> bool {
        if from >= self.n || to >= self.n || from == to || !self.is_adjacent(from, to) {
            return false;
        }
        self.set_mark(from, to, true);
        self.set_mark(to, from, false);
        true
    }

    /// Canonical `(i, j)`, `i < j`, of every undirected edge, sorted.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_undirected(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `(from, to)` of every directed edge, sorted.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.has_directed(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Canonical pairs of all adjacencies, ignoring direction.
    pub fn skeleton_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.is_adjacent(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.skeleton_edges().len()
    }

    /// Copy with every edge made undirected.
    pub fn to_skeleton(&self) -> MixedGraph {
        let mut g = MixedGraph::empty(self.n);
        for (i, j) in self.skeleton_edges() {
            g.set_mark(i, j, true);
            g.set_mark(j, i, true);
        }
        g
    }

    /// Walks the whole mark matrix checking structural invariants.
    pub fn audit(&self) -> Result<(), GraphError> {
        if self.marks.len() != self.n * self.n {
            return Err(GraphError::Invariant("mark matrix has wrong size".into()));
        }
        if let Some(i) = (0..self.n).find(|&i| self.mark(i, i)) {
            return Err(GraphError::SelfLoop(i));
        }
        Ok(())
    }

    /// Whether the directed edges alone contain a cycle.
    pub fn has_directed_cycle(&self) -> bool {
        // Kahn's algorithm over directed edges only.
        let mut indegree: Vec<usize> = (0..self.n).map(|i| self.parents(i).len()).collect();
        let mut ready: Vec<usize> = (0..self.n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for c in self.children(v) {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        seen != self.n
    }
}

/// Per-node sorted neighbor lists frozen at the start of a depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencySnapshot {
    lists: Vec<Vec<usize>>,
}

impl AdjacencySnapshot {
    pub fn capture(g: &MixedGraph) -> Self {
        AdjacencySnapshot {
            lists: (0..g.n_nodes()).map(|i| g.neighbors(i)).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.lists.len()
    }

    /// `a(V_i)`, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    /// `|a(V_i) \ {V_j}|`.
    pub fn len_excluding(&self, i: usize, j: usize) -> usize {
        let list = &self.lists[i];
        list.len() - usize::from(list.binary_search(&j).is_ok())
    }

    /// Element at `pos` of `a(V_i) \ {V_j}` in ascending order.
    #[inline]
    pub fn nth_excluding(&self, i: usize, j: usize, pos: usize) -> usize {
        let list = &self.lists[i];
        match list.binary_search(&j) {
            Ok(at) if pos >= at => list[pos + 1],
            _ => list[pos],
        }
    }
}

/// Captures the adjacency of `g` for the coming depth.
pub fn snapshot_adjacency(g: &MixedGraph) -> AdjacencySnapshot {
    AdjacencySnapshot::capture(g)
}

/// Separating sets keyed by canonical pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepSetStore {
    sets: BTreeMap<(usize, usize), Vec<usize>>,
}

impl SepSetStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize, mut set: Vec<usize>) {
        set.sort_unstable();
        self.sets.insert(canonical(i, j), set);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[usize]> {
        self.sets.get(&canonical(i, j)).map(Vec::as_slice)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.sets.contains_key(&canonical(i, j))
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<usize>)> {
        self.sets.iter()
    }
}
