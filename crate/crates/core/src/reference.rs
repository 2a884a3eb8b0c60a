//! Single-threaded, textbook PC-stable skeleton search.
//!
//! Kept as an oracle for the parallel learner: it materializes every
//! conditioning set with a recursive enumerator, walks edges in canonical
//! order and stops at the first accepted test. It is not a production path.

use crate::data::Dataset;
use crate::graph::{MixedGraph, SepSetStore};
use crate::skeleton::LearnError;
use crate::stats::{CiConfig, CiWorkspace};

/// All `size`-subsets of `items`, in lexicographic order.
pub fn enumerate_subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for k in start..items.len() {
            cur.push(items[k]);
            rec(items, size, k + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= items.len() {
        rec(items, size, 0, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// Result of [`sequential_skeleton`].
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub graph: MixedGraph,
    pub sepsets: SepSetStore,
    /// Graph at the end of every depth.
    pub depth_graphs: Vec<MixedGraph>,
    /// CI tests executed at every depth.
    pub tests_per_depth: Vec<u64>,
}

/// Sequential skeleton search.
pub fn sequential_skeleton(ds: &Dataset, ci: &CiConfig, max_depth: Option<usize>) -> Result<ReferenceRun, LearnError> {
    ci.validate()?;
    let n = ds.n_vars();
    let mut g = MixedGraph::complete(n)?;
    let mut seps = SepSetStore::new();
    let mut history = Vec::new();
    let mut tests_per_depth = Vec::new();
    let mut ws = CiWorkspace::new();

    let mut depth = 0;
    loop {
        if max_depth.is_some_and(|m| depth > m) {
            break;
        }
        let adj: Vec<Vec<usize>> = (0..n).map(|i| g.neighbors(i)).collect();
        let edges = g.undirected_edges();
        let any_testable = edges.iter().any(|&(i, j)| adj[i].len() > depth || adj[j].len() > depth);
        if !any_testable {
            break;
        }
        let mut removals = Vec::new();
        let before = ws.tests_run();
        for (i, j) in edges {
            let from_i: Vec<usize> = adj[i].iter().copied().filter(|&k| k != j).collect();
            let from_j: Vec<usize> = adj[j].iter().copied().filter(|&k| k != i).collect();
            let mut candidates = enumerate_subsets(&from_i, depth);
            // Depth 0 has a single marginal test, not one per endpoint.
            if depth > 0 {
                candidates.extend(enumerate_subsets(&from_j, depth));
            }
            for set in candidates {
                if ws.ci_test(ds, i, j, &set, ci)?.independent {
                    removals.push((i, j, set));
                    break;
                }
            }
        }
        for (i, j, set) in removals {
            g.remove_undirected(i, j);
            seps.insert(i, j, set);
        }
        history.push(g.clone());
        tests_per_depth.push(ws.tests_run() - before);
        depth += 1;
    }
    Ok(ReferenceRun {
        graph: g,
        sepsets: seps,
        depth_graphs: history,
        tests_per_depth,
    })
}
