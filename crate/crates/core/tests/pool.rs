use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;

use bnpc_core::graph::{AdjacencySnapshot, MixedGraph};
use bnpc_core::rng::SplitMix64;
use bnpc_core::skeleton::{EdgeTask, WorkPool};

fn tasks(n: usize, depth: usize) -> (AdjacencySnapshot, Vec<EdgeTask>) {
    let g = MixedGraph::complete(n).unwrap();
    let snap = AdjacencySnapshot::capture(&g);
    let tasks = g
        .undirected_edges()
        .into_iter()
        .map(|e| EdgeTask::new(e, &snap, depth).unwrap())
        .collect();
    (snap, tasks)
}

#[test]
fn every_rank_processed_exactly_once_under_contention() {
    let (_, all) = tasks(16, 2);
    let expected_units: u64 = all.iter().map(|t| t.total).sum();
    let pool = WorkPool::from_tasks(all.clone()).unwrap();
    let processed = Mutex::new(Vec::new());
    let units = AtomicU64::new(0);

    thread::scope(|s| {
        for w in 0..8u64 {
            let (pool, processed, units) = (&pool, &processed, &units);
            s.spawn(move || {
                let mut rng = SplitMix64::new(w);
                let mut local = Vec::new();
                while let Some(mut task) = pool.wait_pop() {
                    let step = 1 + rng.below(7);
                    let end = (task.progress + step).min(task.total);
                    local.push((task.edge, task.progress, end));
                    units.fetch_add(end - task.progress, Ordering::Relaxed);
                    if rng.below(4) == 0 {
                        thread::yield_now();
                    }
                    if end >= task.total {
                        pool.retire();
                    } else {
                        task.progress = end;
                        pool.requeue(task).unwrap();
                    }
                }
                processed.lock().unwrap().extend(local);
            });
        }
    });

    assert!(pool.is_empty());
    let (created, retired) = pool.audit_counts();
    assert_eq!(created, all.len() as u64);
    assert_eq!(created, retired);
    assert_eq!(units.load(Ordering::Relaxed), expected_units);

    // The visits of each edge tile [0, total) without gaps or overlaps.
    let mut visits = processed.into_inner().unwrap();
    visits.sort_unstable();
    for t in &all {
        let mut cursor = 0;
        for &(_, start, end) in visits.iter().filter(|v| v.0 == t.edge) {
            assert_eq!(start, cursor, "edge {:?}", t.edge);
            cursor = end;
        }
        assert_eq!(cursor, t.total);
    }
}

#[test]
fn early_retirement_drains_pool() {
    let (_, all) = tasks(12, 1);
    let n = all.len();
    let pool = WorkPool::from_tasks(all).unwrap();
    let retired_early = AtomicU64::new(0);
    thread::scope(|s| {
        for w in 0..8u64 {
            let (pool, retired_early) = (&pool, &retired_early);
            s.spawn(move || {
                let mut rng = SplitMix64::new(100 + w);
                while let Some(mut task) = pool.wait_pop() {
                    task.progress += 1;
                    if rng.below(3) == 0 {
                        retired_early.fetch_add(1, Ordering::Relaxed);
                        pool.retire();
                    } else if task.is_finished() {
                        pool.retire();
                    } else {
                        pool.requeue(task).unwrap();
                    }
                }
            });
        }
    });
    assert_eq!(pool.audit_counts(), (n as u64, n as u64));
    assert!(retired_early.load(Ordering::Relaxed) > 0);
}

#[test]
fn abort_releases_waiters() {
    let (_, all) = tasks(5, 1);
    let pool = WorkPool::from_tasks(all).unwrap();
    // One task stays checked out for the whole test.
    let _held = pool.wait_pop().unwrap();
    thread::scope(|s| {
        let waiters: Vec<_> = (0..4)
            .map(|_| {
                s.spawn(|| {
                    let mut got = 0;
                    // Tasks stay checked out, so the pool never drains.
                    while pool.wait_pop().is_some() {
                        got += 1;
                    }
                    got
                })
            })
            .collect();
        while !pool.is_empty() {
            thread::yield_now();
        }
        pool.abort();
        let total: usize = waiters.into_iter().map(|h| h.join().unwrap()).sum();
        assert_eq!(total, 9);
    });
}
