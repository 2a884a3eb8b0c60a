//! Edge orientation: colliders from separating sets, then Meek closure.

use crate::data::Dataset;
use crate::graph::{MixedGraph, SepSetStore};
use crate::skeleton::{learn_skeleton_with, LearnConfig, LearnError, Skeleton, SkeletonOptions};

/// Completed partially directed graph: directed edges are compelled,
/// undirected edges are reversible.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cpdag {
    graph: MixedGraph,
}

impl Cpdag {
    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> MixedGraph {
        self.graph
    }
}

/// Unshielded triples `(i, k, j)`, `i < j`, whose middle node `k` is missing
/// from `SepSet(i, j)`, in ascending `(i, k, j)` order.
///
/// Pairs without a recorded separating set are skipped with a warning.
pub fn find_v_structures(skeleton: &MixedGraph, seps: &SepSetStore) -> Vec<(usize, usize, usize)> {
    let n = skeleton.n_nodes();
    let mut out = Vec::new();
    for i in 0..n {
        for k in skeleton.neighbors(i) {
            for j in skeleton.neighbors(k) {
                if j <= i || skeleton.is_adjacent(i, j) {
                    continue;
                }
                match seps.get(i, j) {
                    Some(set) => {
                        if !set.contains(&k) {
                            out.push((i, k, j));
                        }
                    }
                    None => log::warn!("no separating set recorded for ({i}, {j}); triple through {k} skipped"),
                }
            }
        }
    }
    out
}

/// Orients `i -> k <- j` for every collider of [`find_v_structures`].
/// Conflicting demands on one edge resolve to the last triple in order.
pub fn orient_v_structures(skeleton: &MixedGraph, seps: &SepSetStore) -> MixedGraph {
    let mut g = skeleton.clone();
    for (i, k, j) in find_v_structures(skeleton, seps) {
        g.set_direction(i, k);
        g.set_direction(j, k);
    }
    g
}

fn any_node(n: usize, mut pred: impl FnMut(usize) -> bool) -> bool {
    (0..n).any(&mut pred)
}

/// Whether one of Meek's rules compels `a -> b` for the undirected `a -- b`.
fn compelled(g: &MixedGraph, a: usize, b: usize) -> bool {
    let n = g.n_nodes();
    // R1: c -> a, c and b nonadjacent.
    if any_node(n, |c| c != b && g.has_directed(c, a) && !g.is_adjacent(c, b)) {
        return true;
    }
    // R2: a -> c -> b.
    if any_node(n, |c| g.has_directed(a, c) && g.has_directed(c, b)) {
        return true;
    }
    // R3: a -- c -> b and a -- d -> b, c and d nonadjacent.
    let fork: Vec<usize> = (0..n)
        .filter(|&c| g.has_undirected(a, c) && g.has_directed(c, b))
        .collect();
    for (x, &c) in fork.iter().enumerate() {
        if fork[x + 1..].iter().any(|&d| !g.is_adjacent(c, d)) {
            return true;
        }
    }
    // R4: a -- c -> d -> b, a adjacent to d, c and b nonadjacent.
    any_node(n, |c| {
        c != b
            && g.has_undirected(a, c)
            && !g.is_adjacent(c, b)
            && any_node(n, |d| {
                g.has_directed(c, d) && g.has_directed(d, b) && g.is_adjacent(a, d)
            })
    })
}

/// Applies Meek rules R1-R4 until nothing changes.
pub fn apply_meek_rules(g: &MixedGraph) -> Cpdag {
    let mut g = g.clone();
    loop {
        let mut changed = false;
        for (i, j) in g.undirected_edges() {
            if !g.has_undirected(i, j) {
                continue;
            }
            if compelled(&g, i, j) {
                g.orient(i, j);
                changed = true;
            } else if compelled(&g, j, i) {
                g.orient(j, i);
                changed = true;
            }
        }
        if !changed {
            return Cpdag { graph: g };
        }
    }
}

/// CPDAG of the Markov equivalence class of `dag` (every edge directed):
/// its colliders, closed under Meek's rules.
pub fn cpdag_of_dag(dag: &MixedGraph) -> Cpdag {
    let n = dag.n_nodes();
    let mut g = dag.to_skeleton();
    for k in 0..n {
        let parents = dag.parents(k);
        for (x, &i) in parents.iter().enumerate() {
            for &j in &parents[x + 1..] {
                if !dag.is_adjacent(i, j) {
                    g.set_direction(i, k);
                    g.set_direction(j, k);
                }
            }
        }
    }
    apply_meek_rules(&g)
}

/// Output of the full pipeline.
#[derive(Debug, Clone)]
pub struct PcResult {
    pub cpdag: Cpdag,
    pub skeleton: Skeleton,
}

/// Skeleton search, collider orientation and Meek closure.
pub fn pc_stable(ds: &Dataset, cfg: &LearnConfig) -> Result<PcResult, LearnError> {
    pc_stable_with(ds, cfg, &SkeletonOptions::default())
}

pub fn pc_stable_with(ds: &Dataset, cfg: &LearnConfig, opts: &SkeletonOptions) -> Result<PcResult, LearnError> {
    let skeleton = learn_skeleton_with(ds, cfg, opts)?;
    let oriented = orient_v_structures(&skeleton.graph, &skeleton.sepsets);
    let cpdag = apply_meek_rules(&oriented);
    Ok(PcResult { cpdag, skeleton })
}
