//! Text serialization of learned graphs.
//!
//! The edge list is one record per line, `A -- B` for undirected and
//! `A -> B` for directed edges, ordered by the canonical `(min, max)` node
//! index pair. Output depends only on the graph, so identical graphs give
//! identical bytes.

use std::fmt::Write as _;

use crate::graph::{canonical, MixedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Undirected,
    Directed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

/// Node names plus edge records, ready for printing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

impl OutputGraph {
    pub fn new(graph: &MixedGraph, names: &[String]) -> Self {
        assert_eq!(graph.n_nodes(), names.len(), "one name per node");
        let mut edges: Vec<EdgeRecord> = graph
            .undirected_edges()
            .into_iter()
            .map(|(from, to)| EdgeRecord {
                from,
                to,
                kind: EdgeKind::Undirected,
            })
            .chain(graph.directed_edges().into_iter().map(|(from, to)| EdgeRecord {
                from,
                to,
                kind: EdgeKind::Directed,
            }))
            .collect();
        edges.sort_by_key(|e| canonical(e.from, e.to));
        OutputGraph {
            nodes: names.to_vec(),
            edges,
        }
    }

    pub fn to_edgelist(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let arrow = match e.kind {
                EdgeKind::Undirected => "--",
                EdgeKind::Directed => "->",
            };
            let _ = writeln!(out, "{} {arrow} {}", self.nodes[e.from], self.nodes[e.to]);
        }
        out
    }

    /// Graphviz `digraph`; undirected edges carry `dir=none`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cpdag {\n");
        for name in &self.nodes {
            let _ = writeln!(out, "  {};", quote(name));
        }
        for e in &self.edges {
            let attrs = match e.kind {
                EdgeKind::Undirected => " [dir=none]",
                EdgeKind::Directed => "",
            };
            let _ = writeln!(
                out,
                "  {} -> {}{attrs};",
                quote(&self.nodes[e.from]),
                quote(&self.nodes[e.to])
            );
        }
        out.push_str("}\n");
        out
    }
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Reads an edge list back into a graph over `names`.
pub fn parse_edgelist(text: &str, names: &[String]) -> Result<MixedGraph, String> {
    let lookup = |n: &str| {
        names
            .iter()
            .position(|x| x == n)
            .ok_or_else(|| format!("unknown node {n:?}"))
    };
    let mut g = MixedGraph::empty(names.len());
    for (idx, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[..] {
            [] => continue,
            [a, "--", b] => g.add_undirected(lookup(a)?, lookup(b)?),
            [a, "->", b] => g.add_directed(lookup(a)?, lookup(b)?),
            _ => return Err(format!("line {}: malformed edge record", idx + 1)),
        }
        .map_err(|e| format!("line {}: {e}", idx + 1))?;
    }
    Ok(g)
}
