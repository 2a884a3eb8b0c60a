//! Skeleton discovery with CI-level parallelism.
//!
//! Depth 0 runs one marginal test per edge, split statically across workers.
//! Every later depth fills a LIFO work pool with one [`EdgeTask`] per edge
//! that has a conditioning set of the current size. Workers pop a task, run
//! the next `group_size` tests of that edge and either retire it or push it
//! back with its progress. Conditioning sets are unranked on demand from the
//! adjacency snapshot taken at depth start, and all removals are committed by
//! the coordinator once the pool drains. Results are therefore independent
//! of thread count, group size and scheduling.

use std::collections::HashSet;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;

use thiserror::Error;

use crate::combinatorics::{binomial, unrank_into, CombinatoricsError, Rank};
use crate::data::Dataset;
use crate::graph::{AdjacencySnapshot, GraphError, MixedGraph, SepSetStore};
use crate::rng::SplitMix64;
use crate::stats::{CiConfig, CiWorkspace, ConditioningSequence, StatsError, DEFAULT_TABLE_CELL_CAP};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Combinatorics(#[from] CombinatoricsError),
    #[error("work pool contract violated: {0}")]
    PoolContract(String),
    #[error("worker thread panicked during depth {0}")]
    WorkerPanicked(usize),
}

/// Parameters of a structure-learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Significance level of every CI test.
    pub alpha: f64,
    /// Consecutive tests a worker runs on one edge before re-queuing it.
    pub group_size: usize,
    pub threads: usize,
    /// Largest conditioning-set size to try; `None` runs to completion.
    pub max_depth: Option<usize>,
    pub table_cell_cap: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            alpha: 0.05,
            group_size: 1,
            threads: thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            max_depth: None,
            table_cell_cap: DEFAULT_TABLE_CELL_CAP,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LearnError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.group_size == 0 {
            return Err(LearnError::Config("group size must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(LearnError::Config("thread count must be at least 1".into()));
        }
        if self.table_cell_cap == 0 {
            return Err(LearnError::Config("table cell cap must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn ci_config(&self) -> CiConfig {
        CiConfig {
            alpha: self.alpha,
            table_cell_cap: self.table_cell_cap,
        }
    }
}

/// One edge in the work pool together with its test progress.
///
/// Ranks `[0, first_range)` address `d`-subsets of `a(V_i) \ {V_j}`, ranks
/// `[first_range, total)` those of `a(V_j) \ {V_i}`, with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeTask {
    pub edge: (usize, usize),
    pub progress: Rank,
    pub total: Rank,
    first_range: Rank,
}

impl EdgeTask {
    pub fn new(edge: (usize, usize), snap: &AdjacencySnapshot, depth: usize) -> Result<Self, CombinatoricsError> {
        let (i, j) = crate::graph::canonical(edge.0, edge.1);
        let first_range = binomial(snap.len_excluding(i, j), depth)?;
        let second_range = binomial(snap.len_excluding(j, i), depth)?;
        let total = first_range
            .checked_add(second_range)
            .ok_or(CombinatoricsError::Overflow {
                p: snap.n_nodes(),
                q: depth,
            })?;
        Ok(EdgeTask {
            edge: (i, j),
            progress: 0,
            total,
            first_range,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.progress >= self.total
    }

    /// Number of ranks drawn from the first endpoint's neighborhood.
    pub fn first_range(&self) -> Rank {
        self.first_range
    }
}

/// Writes conditioning set `rank` of `task` at `depth` into `out`.
pub fn nth_conditioning_set(
    task: &EdgeTask,
    snap: &AdjacencySnapshot,
    depth: usize,
    rank: Rank,
    out: &mut Vec<usize>,
) -> Result<(), CombinatoricsError> {
    if rank >= task.total {
        return Err(CombinatoricsError::RankOutOfRange {
            p: snap.n_nodes(),
            q: depth,
            rank,
            count: task.total,
        });
    }
    let (i, j) = task.edge;
    let (from, other, local) = if rank < task.first_range {
        (i, j, rank)
    } else {
        (j, i, rank - task.first_range)
    };
    unrank_into(snap.len_excluding(from, other), depth, local, out)?;
    for pos in out.iter_mut() {
        *pos = snap.nth_excluding(from, other, *pos);
    }
    Ok(())
}

/// The conditioning-set sequence of one task, viewed through a snapshot.
pub struct EdgeSets<'a> {
    pub task: &'a EdgeTask,
    pub snap: &'a AdjacencySnapshot,
    pub depth: usize,
}

impl ConditioningSequence for EdgeSets<'_> {
    fn total(&self) -> Rank {
        self.task.total
    }

    fn fill(&self, rank: Rank, out: &mut Vec<usize>) -> Result<(), CombinatoricsError> {
        nth_conditioning_set(self.task, self.snap, self.depth, rank, out)
    }
}

#[derive(Debug, Default)]
struct PoolState {
    stack: Vec<EdgeTask>,
    in_flight: usize,
    created: u64,
    retired: u64,
    aborted: bool,
    members: HashSet<(usize, usize)>,
}

/// Depth-scoped stack of edge tasks shared by the worker team.
///
/// Tasks handed out by [`WorkPool::pop`] or [`WorkPool::wait_pop`] are
/// checked out until returned through [`WorkPool::requeue`] or
/// [`WorkPool::retire`].
#[derive(Debug, Default)]
pub struct WorkPool {
    state: Mutex<PoolState>,
    wake: Condvar,
}

impl WorkPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tasks(tasks: impl IntoIterator<Item = EdgeTask>) -> Result<Self, LearnError> {
        let pool = Self::new();
        for t in tasks {
            pool.push(t)?;
        }
        Ok(pool)
    }

    fn lock(&self) -> MutexGuard<'_, PoolState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn insert(state: &mut PoolState, task: EdgeTask) -> Result<(), LearnError> {
        if task.is_finished() {
            return Err(LearnError::PoolContract(format!(
                "edge {:?} has no untested conditioning set",
                task.edge
            )));
        }
        if cfg!(debug_assertions) && !state.members.insert(task.edge) {
            return Err(LearnError::PoolContract(format!("edge {:?} already pooled", task.edge)));
        }
        state.stack.push(task);
        Ok(())
    }

    /// Adds a new task.
    pub fn push(&self, task: EdgeTask) -> Result<(), LearnError> {
        let mut state = self.lock();
        Self::insert(&mut state, task)?;
        state.created += 1;
        drop(state);
        self.wake.notify_one();
        Ok(())
    }

    /// Most recently pushed task, or `None` when the stack is empty.
    pub fn pop(&self) -> Option<EdgeTask> {
        let mut state = self.lock();
        Self::take(&mut state)
    }

    fn take(state: &mut PoolState) -> Option<EdgeTask> {
        let task = state.stack.pop()?;
        state.in_flight += 1;
        if cfg!(debug_assertions) {
            state.members.remove(&task.edge);
        }
        Some(task)
    }

    /// Blocks until a task is available. Returns `None` once the stack is
    /// empty and nothing is checked out, or after [`WorkPool::abort`].
    pub fn wait_pop(&self) -> Option<EdgeTask> {
        let mut state = self.lock();
        loop {
            if state.aborted {
                return None;
            }
            if let Some(task) = Self::take(&mut state) {
                return Some(task);
            }
            if state.in_flight == 0 {
                return None;
            }
            state = self.wake.wait(state).unwrap_or_else(|p| p.into_inner());
        }
    }

    /// Returns a checked-out task with updated progress.
    pub fn requeue(&self, task: EdgeTask) -> Result<(), LearnError> {
        let mut state = self.lock();
        Self::insert(&mut state, task)?;
        state.in_flight = state.in_flight.saturating_sub(1);
        drop(state);
        self.wake.notify_one();
        Ok(())
    }

    /// Marks a checked-out task as done.
    pub fn retire(&self) {
        let mut state = self.lock();
        state.in_flight = state.in_flight.saturating_sub(1);
        state.retired += 1;
        let drained = state.in_flight == 0 && state.stack.is_empty();
        drop(state);
        if drained {
            self.wake.notify_all();
        }
    }

    /// Stops every waiting worker.
    pub fn abort(&self) {
        self.lock().aborted = true;
        self.wake.notify_all();
    }

    pub fn len(&self) -> usize {
        self.lock().stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(created, retired)` task counts.
    pub fn audit_counts(&self) -> (u64, u64) {
        let state = self.lock();
        (state.created, state.retired)
    }
}

/// Counters for one depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DepthStats {
    pub depth: usize,
    /// Edges with at least one conditioning set this depth.
    pub edges_tested: usize,
    pub ci_tests: u64,
    pub removed: usize,
    pub edges_remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LearnStats {
    pub depths: Vec<DepthStats>,
}

impl LearnStats {
    pub fn total_ci_tests(&self) -> u64 {
        self.depths.iter().map(|d| d.ci_tests).sum()
    }
}

/// Hooks for tests and diagnostics.
#[derive(Debug, Clone, Default)]
pub struct SkeletonOptions {
    /// Shuffle the initial pool order of each depth with this seed.
    pub pool_shuffle_seed: Option<u64>,
    /// Keep a copy of the graph as it stands at the end of every depth.
    pub record_depth_graphs: bool,
}

/// Output of [`learn_skeleton`].
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub graph: MixedGraph,
    pub sepsets: SepSetStore,
    pub stats: LearnStats,
    /// End-of-depth graphs, when requested.
    pub depth_graphs: Vec<MixedGraph>,
}

type Removal = ((usize, usize), Vec<usize>);

fn commit(g: &mut MixedGraph, seps: &mut SepSetStore, mut removals: Vec<Removal>) -> usize {
    removals.sort_unstable_by_key(|r| r.0);
    let mut removed = 0;
    for ((i, j), set) in removals {
        if g.remove_undirected(i, j) {
            seps.insert(i, j, set);
            removed += 1;
        }
    }
    removed
}

fn join_workers<T>(
    handles: Vec<thread::ScopedJoinHandle<'_, Result<T, LearnError>>>,
    depth: usize,
) -> Result<Vec<T>, LearnError> {
    let mut out = Vec::with_capacity(handles.len());
    let mut first_err = None;
    for h in handles {
        match h.join() {
            Ok(Ok(v)) => out.push(v),
            Ok(Err(e)) => {
                first_err.get_or_insert(e);
            }
            Err(_) => {
                first_err.get_or_insert(LearnError::WorkerPanicked(depth));
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Runs every marginal test `I(V_i, V_j | {})` over the undirected edges of
/// `g`, splitting the edge list statically across `cfg.threads` workers.
pub fn depth_zero_pass(
    ds: &Dataset,
    g: &mut MixedGraph,
    cfg: &LearnConfig,
    seps: &mut SepSetStore,
) -> Result<DepthStats, LearnError> {
    cfg.validate()?;
    let ci = cfg.ci_config();
    let edges = g.undirected_edges();
    let run = |chunk: &[(usize, usize)]| -> Result<(Vec<Removal>, u64), LearnError> {
        let mut ws = CiWorkspace::new();
        let mut removals = Vec::new();
        for &(i, j) in chunk {
            if ws.ci_test(ds, i, j, &[], &ci)?.independent {
                removals.push(((i, j), Vec::new()));
            }
        }
        Ok((removals, ws.tests_run()))
    };

    let workers = cfg.threads.min(edges.len()).max(1);
    let results = if workers == 1 {
        vec![run(&edges)?]
    } else {
        let chunk = edges.len().div_ceil(workers);
        thread::scope(|s| {
            let handles = edges.chunks(chunk).map(|c| s.spawn(move || run(c))).collect();
            join_workers(handles, 0)
        })?
    };

    let mut removals = Vec::new();
    let mut tests = 0;
    for (r, t) in results {
        removals.extend(r);
        tests += t;
    }
    let removed = commit(g, seps, removals);
    Ok(DepthStats {
        depth: 0,
        edges_tested: edges.len(),
        ci_tests: tests,
        removed,
        edges_remaining: g.edge_count(),
    })
}

fn drain_pool(
    ds: &Dataset,
    cfg: &LearnConfig,
    snap: &AdjacencySnapshot,
    depth: usize,
    pool: &WorkPool,
) -> Result<(Vec<Removal>, u64), LearnError> {
    let ci = cfg.ci_config();
    let mut ws = CiWorkspace::new();
    let mut removals = Vec::new();
    while let Some(mut task) = pool.wait_pop() {
        let sets = EdgeSets {
            task: &task,
            snap,
            depth,
        };
        let outcome = ws.run_group(ds, task.edge.0, task.edge.1, &sets, task.progress, cfg.group_size, &ci);
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                pool.abort();
                return Err(e.into());
            }
        };
        if let Some(set) = outcome.sepset {
            removals.push((task.edge, set));
            pool.retire();
        } else if outcome.new_progress >= task.total {
            pool.retire();
        } else {
            task.progress = outcome.new_progress;
            if let Err(e) = pool.requeue(task) {
                pool.abort();
                return Err(e);
            }
        }
    }
    Ok((removals, ws.tests_run()))
}

fn pool_depth(
    ds: &Dataset,
    g: &mut MixedGraph,
    cfg: &LearnConfig,
    seps: &mut SepSetStore,
    depth: usize,
    shuffle_seed: Option<u64>,
) -> Result<Option<DepthStats>, LearnError> {
    let snap = AdjacencySnapshot::capture(g);
    let mut tasks = Vec::new();
    for edge in g.undirected_edges() {
        let task = EdgeTask::new(edge, &snap, depth)?;
        if task.total > 0 {
            tasks.push(task);
        }
    }
    if tasks.is_empty() {
        return Ok(None);
    }
    if let Some(seed) = shuffle_seed {
        SplitMix64::new(seed ^ (depth as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)).shuffle(&mut tasks);
    }
    let edges_tested = tasks.len();
    let workers = cfg.threads.min(edges_tested);
    let pool = WorkPool::from_tasks(tasks)?;

    let results = if workers == 1 {
        vec![drain_pool(ds, cfg, &snap, depth, &pool)?]
    } else {
        let (pool, snap) = (&pool, &snap);
        thread::scope(|s| {
            let handles = (0..workers)
                .map(|_| s.spawn(move || drain_pool(ds, cfg, snap, depth, pool)))
                .collect();
            join_workers(handles, depth)
        })?
    };

    let mut removals = Vec::new();
    let mut tests = 0;
    for (r, t) in results {
        removals.extend(r);
        tests += t;
    }
    let (created, retired) = pool.audit_counts();
    if created != retired {
        return Err(LearnError::PoolContract(format!(
            "depth {depth}: {created} tasks created but {retired} retired"
        )));
    }
    let removed = commit(g, seps, removals);
    Ok(Some(DepthStats {
        depth,
        edges_tested,
        ci_tests: tests,
        removed,
        edges_remaining: g.edge_count(),
    }))
}

/// Learns the undirected skeleton and separating sets.
pub fn learn_skeleton(ds: &Dataset, cfg: &LearnConfig) -> Result<Skeleton, LearnError> {
    learn_skeleton_with(ds, cfg, &SkeletonOptions::default())
}

pub fn learn_skeleton_with(ds: &Dataset, cfg: &LearnConfig, opts: &SkeletonOptions) -> Result<Skeleton, LearnError> {
    cfg.validate()?;
    let mut graph = MixedGraph::complete(ds.n_vars())?;
    let mut sepsets = SepSetStore::new();
    let mut stats = LearnStats::default();
    let mut depth_graphs = Vec::new();

    stats.depths.push(depth_zero_pass(ds, &mut graph, cfg, &mut sepsets)?);
    if opts.record_depth_graphs {
        depth_graphs.push(graph.clone());
    }

    let mut depth = 1;
    while cfg.max_depth.is_none_or(|max| depth <= max) {
        match pool_depth(ds, &mut graph, cfg, &mut sepsets, depth, opts.pool_shuffle_seed)? {
            Some(d) => stats.depths.push(d),
            None => break,
        }
        if opts.record_depth_graphs {
            depth_graphs.push(graph.clone());
        }
        depth += 1;
    }
    debug_assert!(graph.audit().is_ok());

    Ok(Skeleton {
        graph,
        sepsets,
        stats,
        depth_graphs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::snapshot_adjacency;

    fn star_snapshot(center: usize, others: &[usize], n: usize) -> AdjacencySnapshot {
        let mut g = MixedGraph::empty(n);
        for &o in others {
            g.add_undirected(center, o).unwrap();
        }
        snapshot_adjacency(&g)
    }

    #[test]
    fn unranks_through_neighborhood() {
        // a(V_0) \ {V_1} = {2, 5, 9}
        let snap = star_snapshot(0, &[1, 2, 5, 9], 10);
        let task = EdgeTask::new((0, 1), &snap, 2).unwrap();
        assert_eq!(task.total, 3);
        let mut out = Vec::new();
        nth_conditioning_set(&task, &snap, 2, 1, &mut out).unwrap();
        assert_eq!(out, vec![2, 9]);
    }

    #[test]
    fn second_endpoint_range() {
        // p1 = 2, p2 = 10 at depth 2 -> 1 + 45 sets
        let n = 16;
        let mut g = MixedGraph::empty(n);
        g.add_undirected(0, 1).unwrap();
        for k in [2, 3] {
            g.add_undirected(0, k).unwrap();
        }
        for k in 4..14 {
            g.add_undirected(1, k).unwrap();
        }
        let snap = snapshot_adjacency(&g);
        let task = EdgeTask::new((0, 1), &snap, 2).unwrap();
        assert_eq!(task.first_range(), 1);
        assert_eq!(task.total, 46);
        let mut out = Vec::new();
        nth_conditioning_set(&task, &snap, 2, 0, &mut out).unwrap();
        assert_eq!(out, vec![2, 3]);
        nth_conditioning_set(&task, &snap, 2, 45, &mut out).unwrap();
        assert_eq!(out, vec![12, 13]);
        assert!(nth_conditioning_set(&task, &snap, 2, 46, &mut out).is_err());
    }

    #[test]
    fn canonicalizes_task_edge() {
        let snap = snapshot_adjacency(&MixedGraph::complete(4).unwrap());
        let task = EdgeTask::new((3, 1), &snap, 1).unwrap();
        assert_eq!(task.edge, (1, 3));
        assert_eq!(task.total, 4);
    }

    fn task(edge: (usize, usize), progress: Rank, total: Rank) -> EdgeTask {
        EdgeTask {
            edge,
            progress,
            total,
            first_range: total,
        }
    }

    #[test]
    fn pool_is_a_stack() {
        let pool = WorkPool::new();
        pool.push(task((0, 1), 0, 3)).unwrap();
        pool.push(task((0, 2), 0, 3)).unwrap();
        assert_eq!(pool.pop().unwrap().edge, (0, 2));
        assert_eq!(pool.pop().unwrap().edge, (0, 1));
        assert_eq!(pool.pop(), None);
    }

    #[test]
    fn pool_rejects_completed_task() {
        let pool = WorkPool::new();
        assert!(matches!(
            pool.push(task((0, 1), 3, 3)),
            Err(LearnError::PoolContract(_))
        ));
    }

    #[test]
    fn wait_pop_ends_when_drained() {
        let pool = WorkPool::from_tasks([task((0, 1), 0, 2)]).unwrap();
        let mut t = pool.wait_pop().unwrap();
        t.progress = 1;
        pool.requeue(t).unwrap();
        let t = pool.wait_pop().unwrap();
        assert_eq!(t.progress, 1);
        pool.retire();
        assert_eq!(pool.wait_pop(), None);
        assert_eq!(pool.audit_counts(), (1, 1));
    }

    #[cfg(debug_assertions)]
    #[test]
    fn pool_rejects_duplicates() {
        let pool = WorkPool::new();
        pool.push(task((0, 1), 0, 3)).unwrap();
        assert!(pool.push(task((0, 1), 1, 3)).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = LearnConfig::default();
        ok.validate().unwrap();
        for bad in [
            LearnConfig {
                alpha: 1.5,
                ..ok.clone()
            },
            LearnConfig {
                group_size: 0,
                ..ok.clone()
            },
            LearnConfig {
                threads: 0,
                ..ok.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(LearnError::Config(_))));
        }
    }
}
