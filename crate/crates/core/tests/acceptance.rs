//! Acceptance suite: one PASS/FAIL line per criterion on standard output,
//! then a single assertion over all of them.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use bnpc_core::orient::{cpdag_of_dag, find_v_structures, pc_stable, pc_stable_with};
use bnpc_core::output::OutputGraph;
use bnpc_core::perfmodel::{estimate_speedups, SpeedupParams};
use bnpc_core::reference::sequential_skeleton;
use bnpc_core::skeleton::{learn_skeleton, learn_skeleton_with, LearnConfig, SkeletonOptions};
use bnpc_core::stats::{chi2_sf, g2_statistic, CiConfig, ContingencyTable};
use bnpc_core::synth::{forward_sample, parse_bn_spec, COLLIDER_CHAIN, COLLIDER_CHAIN_SAMPLES, COLLIDER_CHAIN_SEED};
use bnpc_core::{apply_meek_rules, orient_v_structures, Dataset};
use common::{chi2_sf_quadrature, frozen_g2_tables, random_dataset, rel_err, unrank_matches_enumeration};

// Criterion 1
const MODEL_TOL: f64 = 0.01;
const MODEL_PRODUCT_TOL: f64 = 0.1;
const MODEL_BUDGET: Duration = Duration::from_secs(1);
// Criterion 2
const DETERMINISM_DATASETS: u64 = 10;
const DETERMINISM_SAMPLES: usize = 5_000;
const DETERMINISM_BUDGET: Duration = Duration::from_secs(120);
// Criterion 3
const RECOVERY_BUDGET: Duration = Duration::from_secs(5);
// Criterion 4
const G2_REL_TOL: f64 = 1e-9;
const CHI2_DOF2_TOL: f64 = 1e-10;
const CHI2_QUADRATURE_TOL: f64 = 1e-8;
const UNRANK_MAX_P: usize = 12;
const KERNEL_BUDGET: Duration = Duration::from_secs(30);
// Criterion 5
const ORDER_DATASETS: u64 = 5;
const ORDER_BUDGET: Duration = Duration::from_secs(60);
// Criteria 6 and 7
const LARGE_NODES: usize = 150;
const LARGE_SAMPLES: usize = 5_000;
const LARGE_SEED: u64 = 150_150;
const SPEEDUP_THREADS: usize = 8;
const SPEEDUP_MAX_RATIO: f64 = 0.5;
const SPEEDUP_BUDGET: Duration = Duration::from_secs(300);
const GS_EXCESS_LIMIT: f64 = 1.15;
const GS_BUDGET: Duration = Duration::from_secs(300);

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn run(id: u32, name: &'static str, budget: Duration, check: impl FnOnce() -> Result<String, String>) -> Outcome {
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if elapsed > budget {
        passed = false;
        detail = format!("{detail}; over budget {budget:?}");
    }
    let outcome = Outcome {
        id,
        name,
        passed,
        detail,
        elapsed,
    };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "[{}] criterion {}: {} ({:.2}s) {}",
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.id,
        outcome.name,
        outcome.elapsed.as_secs_f64(),
        outcome.detail
    );
    let _ = out.flush();
    outcome
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cfg(threads: usize, group_size: usize) -> LearnConfig {
    LearnConfig {
        threads,
        group_size,
        ..LearnConfig::default()
    }
}

fn analytical_model() -> Result<String, String> {
    let r = estimate_speedups(&SpeedupParams {
        threads: 4,
        depth: 2,
        edges_in_depth: 1200,
        deletion_ratio: 0.6,
        mean_degree: 10,
        cache_line_bytes: 64,
        dram_to_cache_ratio: 8.0,
    })
    .map_err(|e| e.to_string())?;
    let checks = [
        ("s_ci", r.s_ci, 3.87, MODEL_TOL),
        ("s_grouping", r.s_grouping, 1.43, MODEL_TOL),
        ("s_cache", r.s_cache, 5.57, MODEL_TOL),
        ("s_overall", r.s_overall, 30.8, MODEL_PRODUCT_TOL),
    ];
    let summary = checks
        .iter()
        .map(|(n, got, _, _)| format!("{n}={got:.4}"))
        .collect::<Vec<_>>()
        .join(" ");
    for (name, got, want, tol) in checks {
        ensure((got - want).abs() <= tol, || {
            format!("{name}={got} expected {want}±{tol}")
        })?;
    }
    Ok(summary)
}

fn cpdag_text(ds: &Dataset, graph: &bnpc_core::MixedGraph) -> String {
    OutputGraph::new(graph, ds.var_names()).to_edgelist()
}

fn determinism_suite() -> Result<String, String> {
    let mut runs = 0;
    for k in 0..DETERMINISM_DATASETS {
        let n_nodes = 20 + (k as usize * 30) / (DETERMINISM_DATASETS as usize - 1);
        let ds = random_dataset(n_nodes, 3, DETERMINISM_SAMPLES, 1_000 + k);
        let reference = sequential_skeleton(&ds, &CiConfig::new(0.05).unwrap(), None).map_err(|e| e.to_string())?;
        let oracle = apply_meek_rules(&orient_v_structures(&reference.graph, &reference.sepsets));
        let want = cpdag_text(&ds, oracle.graph());
        for threads in [1, 2, 8] {
            for gs in [1, 4, 8] {
                let res = pc_stable(&ds, &cfg(threads, gs)).map_err(|e| e.to_string())?;
                let got = cpdag_text(&ds, res.cpdag.graph());
                ensure(got == want, || {
                    format!("dataset {k} ({n_nodes} nodes) threads={threads} gs={gs} differs from the reference")
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} runs on {DETERMINISM_DATASETS} datasets match the sequential reference"
    ))
}

fn fixture_recovery() -> Result<String, String> {
    let spec = parse_bn_spec(COLLIDER_CHAIN).map_err(|e| e.to_string())?;
    let ds = forward_sample(&spec, COLLIDER_CHAIN_SAMPLES, COLLIDER_CHAIN_SEED).map_err(|e| e.to_string())?;
    let truth = spec.dag();
    let res = pc_stable(&ds, &LearnConfig::default()).map_err(|e| e.to_string())?;

    let skeleton = res.skeleton.graph.skeleton_edges();
    ensure(skeleton == truth.skeleton_edges(), || {
        format!("skeleton {skeleton:?} vs {:?}", truth.skeleton_edges())
    })?;

    let mut true_vs = Vec::new();
    for k in 0..truth.n_nodes() {
        let ps = truth.parents(k);
        for (a, &i) in ps.iter().enumerate() {
            for &j in &ps[a + 1..] {
                if !truth.is_adjacent(i, j) {
                    true_vs.push((i.min(j), k, i.max(j)));
                }
            }
        }
    }
    true_vs.sort_unstable();
    let vs = find_v_structures(&res.skeleton.graph, &res.skeleton.sepsets);
    ensure(vs == true_vs, || format!("v-structures {vs:?} vs {true_vs:?}"))?;

    let oracle = cpdag_of_dag(&truth);
    ensure(res.cpdag.graph() == oracle.graph(), || {
        format!(
            "CPDAG\n{}differs from\n{}",
            cpdag_text(&ds, res.cpdag.graph()),
            cpdag_text(&ds, oracle.graph())
        )
    })?;
    Ok(format!(
        "{} edges, {} v-structure(s), CPDAG exact",
        skeleton.len(),
        vs.len()
    ))
}

fn kernel_oracles() -> Result<String, String> {
    let tables = frozen_g2_tables();
    ensure(tables.len() == 100, || format!("{} frozen tables", tables.len()))?;
    let mut worst_g2 = 0.0f64;
    for t in &tables {
        let (cx, cy, cz) = t.dims;
        let table = ContingencyTable::from_counts(cx, cy, cz, t.counts.clone()).map_err(|e| e.to_string())?;
        let (g2, _) = g2_statistic(&table);
        let err = if t.g2 > 1e-6 {
            rel_err(g2, t.g2)
        } else {
            (g2 - t.g2).abs()
        };
        worst_g2 = worst_g2.max(err);
    }
    ensure(worst_g2 <= G2_REL_TOL, || format!("G2 relative error {worst_g2:e}"))?;

    let mut worst_dof2 = 0.0f64;
    for step in 0..=400 {
        let x = step as f64 * 0.25;
        let want = (-x / 2.0).exp();
        worst_dof2 = worst_dof2.max(rel_err(chi2_sf(x, 2), want));
    }
    ensure(worst_dof2 <= CHI2_DOF2_TOL, || {
        format!("dof=2 relative error {worst_dof2:e}")
    })?;

    let mut worst_quad = 0.0f64;
    for k in 1..=20u64 {
        for x in [0.05, 0.3, 1.0, 2.0, 3.5, 5.0, 8.0, 12.0, 18.0, 25.0, 40.0, 60.0] {
            worst_quad = worst_quad.max(rel_err(chi2_sf(x, k), chi2_sf_quadrature(x, k)));
        }
    }
    ensure(worst_quad <= CHI2_QUADRATURE_TOL, || {
        format!("quadrature relative error {worst_quad:e}")
    })?;

    for p in 0..=UNRANK_MAX_P {
        unrank_matches_enumeration(p)?;
    }
    Ok(format!(
        "G2 rel {worst_g2:.1e}, dof2 rel {worst_dof2:.1e}, quadrature rel {worst_quad:.1e}, unrank p<={UNRANK_MAX_P}"
    ))
}

fn order_independence() -> Result<String, String> {
    let mut depths = 0;
    for k in 0..ORDER_DATASETS {
        let ds = random_dataset(30, 3, 5_000, 2_000 + k);
        let base = learn_skeleton_with(
            &ds,
            &cfg(4, 1),
            &SkeletonOptions {
                pool_shuffle_seed: None,
                record_depth_graphs: true,
            },
        )
        .map_err(|e| e.to_string())?;
        for s in 0..3u64 {
            for gs in [1, 4] {
                let shuffled = learn_skeleton_with(
                    &ds,
                    &cfg(4, gs),
                    &SkeletonOptions {
                        pool_shuffle_seed: Some(k * 1_000 + s),
                        record_depth_graphs: true,
                    },
                )
                .map_err(|e| e.to_string())?;
                ensure(shuffled.depth_graphs == base.depth_graphs, || {
                    format!("dataset {k} shuffle {s} gs={gs}: end-of-depth graphs differ")
                })?;
            }
        }
        depths += base.depth_graphs.len();
    }
    Ok(format!(
        "{ORDER_DATASETS} datasets, {depths} depths, 6 shuffled orders each"
    ))
}

fn large_dataset() -> Dataset {
    random_dataset(LARGE_NODES, 3, LARGE_SAMPLES, LARGE_SEED)
}

fn parallel_speedup(ds: &Dataset) -> Result<String, String> {
    let time = |threads: usize| -> Result<(Duration, String), String> {
        let start = Instant::now();
        let res = pc_stable_with(ds, &cfg(threads, 1), &SkeletonOptions::default()).map_err(|e| e.to_string())?;
        Ok((start.elapsed(), cpdag_text(ds, res.cpdag.graph())))
    };
    let (t1, g1) = time(1)?;
    let (t8, g8) = time(SPEEDUP_THREADS)?;
    ensure(g1 == g8, || "outputs differ between thread counts".into())?;
    let ratio = t8.as_secs_f64() / t1.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let detail = format!(
        "1 thread {:.2}s, {SPEEDUP_THREADS} threads {:.2}s, ratio {ratio:.3} (limit {SPEEDUP_MAX_RATIO}), {cores} hardware thread(s) available",
        t1.as_secs_f64(),
        t8.as_secs_f64()
    );
    if ratio <= SPEEDUP_MAX_RATIO {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn group_size_tradeoff(ds: &Dataset) -> Result<String, String> {
    let mut counts = Vec::new();
    for gs in [1, 2, 4, 8] {
        let sk = learn_skeleton(ds, &cfg(SPEEDUP_THREADS, gs)).map_err(|e| e.to_string())?;
        counts.push(sk.stats.total_ci_tests());
    }
    let detail = format!("CI tests for gs 1/2/4/8: {counts:?}");
    ensure(counts.windows(2).all(|w| w[0] <= w[1]), || {
        format!("{detail} not nondecreasing")
    })?;
    let excess = counts[3] as f64 / counts[0] as f64;
    ensure(excess < GS_EXCESS_LIMIT, || {
        format!("{detail}; gs=8/gs=1 = {excess:.4}")
    })?;
    Ok(format!("{detail}; gs=8/gs=1 = {excess:.4}"))
}

#[test]
fn acceptance() {
    let mut outcomes = vec![
        run(1, "analytical speedup model", MODEL_BUDGET, analytical_model),
        run(
            2,
            "determinism across threads and group sizes",
            DETERMINISM_BUDGET,
            determinism_suite,
        ),
        run(
            3,
            "ground-truth recovery on the five-node fixture",
            RECOVERY_BUDGET,
            fixture_recovery,
        ),
        run(4, "statistical kernel oracles", KERNEL_BUDGET, kernel_oracles),
        run(5, "pool order independence", ORDER_BUDGET, order_independence),
    ];
    let ds = large_dataset();
    outcomes.push(run(6, "parallel speedup smoke check", SPEEDUP_BUDGET, || {
        parallel_speedup(&ds)
    }));
    outcomes.push(run(7, "group size trade-off direction", GS_BUDGET, || {
        group_size_tradeoff(&ds)
    }));

    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    let _ = writeln!(
        std::io::stdout().lock(),
        "acceptance: {}/{} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
