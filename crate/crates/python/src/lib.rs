//! Python bindings for `bnpc-core`.
//!
//! Variables are addressed by index everywhere except in learned graphs,
//! which report edges by variable name. Every core error surfaces as
//! `ValueError`, file errors as `OSError`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use bnpc_core::data::{load_dataset, Dataset as CoreDataset, LoadOptions};
use bnpc_core::orient::{cpdag_of_dag, pc_stable, PcResult as CorePcResult};
use bnpc_core::output::OutputGraph;
use bnpc_core::perfmodel::{estimate_speedups as core_estimate_speedups, SpeedupParams};
use bnpc_core::skeleton::{learn_skeleton, LearnConfig as CoreLearnConfig};
use bnpc_core::stats::{chi2_sf as core_chi2_sf, ci_test as core_ci_test, CiConfig, DEFAULT_TABLE_CELL_CAP};
use bnpc_core::synth::{
    forward_sample, load_bn_spec, parse_bn_spec, random_network, BnSpec as CoreBnSpec, RandomNetworkConfig,
};
use bnpc_core::MixedGraph;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn open(path: &str) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyOSError::new_err(format!("cannot open {path}: {e}")))
}

fn single_byte(delimiter: &str) -> PyResult<u8> {
    match delimiter.as_bytes() {
        [b] => Ok(*b),
        _ => Err(PyValueError::new_err("delimiter must be a single ASCII character")),
    }
}

/// Column-major categorical dataset.
#[pyclass(frozen, module = "bnpc")]
pub struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from integer-coded columns (`columns[var][sample]`).
    #[new]
    #[pyo3(signature = (names, cardinalities, columns))]
    fn new(names: Vec<String>, cardinalities: Vec<usize>, columns: Vec<Vec<u32>>) -> PyResult<Self> {
        let inner = CoreDataset::from_columns(names, cardinalities, None, columns).map_err(value_err)?;
        Ok(Dataset { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, has_header = true, delimiter = ","))]
    fn from_csv(path: &str, has_header: bool, delimiter: &str) -> PyResult<Self> {
        let options = LoadOptions {
            has_header,
            delimiter: single_byte(delimiter)?,
        };
        let inner = load_dataset(open(path)?, &options).map_err(|e| value_err(format!("{path}: {e}")))?;
        Ok(Dataset { inner })
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn var_names(&self) -> Vec<String> {
        self.inner.var_names().to_vec()
    }

    #[getter]
    fn cardinalities(&self) -> Vec<usize> {
        self.inner.cardinalities().to_vec()
    }

    /// Category labels of `var`, indexed by code.
    fn labels(&self, var: usize) -> PyResult<Vec<String>> {
        self.column(var)?;
        Ok(self.inner.labels(var).to_vec())
    }

    /// Integer codes of one variable.
    fn column(&self, var: usize) -> PyResult<Vec<u32>> {
        Ok(self.inner.column_values(var).map_err(value_err)?.to_vec())
    }

    #[pyo3(signature = (path, delimiter = ","))]
    fn to_csv(&self, path: &str, delimiter: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyOSError::new_err(format!("cannot create {path}: {e}")))?;
        self.inner
            .write_delimited(BufWriter::new(file), single_byte(delimiter)?)
            .map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.n_samples()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_vars={}, n_samples={})",
            self.inner.n_vars(),
            self.inner.n_samples()
        )
    }
}

fn names_of(edges: Vec<(usize, usize)>, names: &[String]) -> Vec<(String, String)> {
    edges
        .into_iter()
        .map(|(a, b)| (names[a].clone(), names[b].clone()))
        .collect()
}

/// A discrete Bayesian network with conditional probability tables.
#[pyclass(frozen, module = "bnpc")]
pub struct BnSpec {
    inner: CoreBnSpec,
}

#[pymethods]
impl BnSpec {
    /// Parses the line-oriented network format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(BnSpec {
            inner: parse_bn_spec(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let inner = load_bn_spec(open(path)?).map_err(|e| value_err(format!("{path}: {e}")))?;
        Ok(BnSpec { inner })
    }

    /// Random network; nodes are declared in a topological order.
    #[staticmethod]
    #[pyo3(signature = (n_nodes, seed, max_parents = 2, min_cardinality = 2, max_cardinality = 3, dominant_mass = 0.7))]
    fn random(
        n_nodes: usize,
        seed: u64,
        max_parents: usize,
        min_cardinality: usize,
        max_cardinality: usize,
        dominant_mass: f64,
    ) -> PyResult<Self> {
        let cfg = RandomNetworkConfig {
            n_nodes,
            max_parents,
            min_cardinality,
            max_cardinality,
            dominant_mass,
        };
        Ok(BnSpec {
            inner: random_network(&cfg, seed).map_err(value_err)?,
        })
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn cardinalities(&self) -> Vec<usize> {
        self.inner.cardinalities().to_vec()
    }

    /// Seeded forward sample of `n_samples` rows.
    fn sample(&self, py: Python<'_>, n_samples: usize, seed: u64) -> PyResult<Dataset> {
        let inner = py
            .detach(|| forward_sample(&self.inner, n_samples, seed))
            .map_err(value_err)?;
        Ok(Dataset { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// `(parent, child)` name pairs.
    fn dag_edges(&self) -> Vec<(String, String)> {
        names_of(self.inner.dag().directed_edges(), self.inner.names())
    }

    /// Edge list of the CPDAG of this network's equivalence class.
    fn cpdag_edgelist(&self) -> String {
        let cpdag = cpdag_of_dag(&self.inner.dag());
        OutputGraph::new(cpdag.graph(), self.inner.names()).to_edgelist()
    }
}

/// Parameters of a structure-learning run.
#[pyclass(module = "bnpc", get_all, set_all)]
pub struct LearnConfig {
    alpha: f64,
    group_size: usize,
    threads: usize,
    max_depth: Option<usize>,
    table_cell_cap: usize,
}

#[pymethods]
impl LearnConfig {
    /// `threads=None` uses every available hardware thread.
    #[new]
    #[pyo3(signature = (alpha = 0.05, group_size = 1, threads = None, max_depth = None, table_cell_cap = DEFAULT_TABLE_CELL_CAP))]
    fn new(
        alpha: f64,
        group_size: usize,
        threads: Option<usize>,
        max_depth: Option<usize>,
        table_cell_cap: usize,
    ) -> PyResult<Self> {
        let cfg = LearnConfig {
            alpha,
            group_size,
            threads: threads.unwrap_or(CoreLearnConfig::default().threads),
            max_depth,
            table_cell_cap,
        };
        cfg.core().validate().map_err(value_err)?;
        Ok(cfg)
    }

    fn __repr__(&self) -> String {
        format!(
            "LearnConfig(alpha={}, group_size={}, threads={}, max_depth={:?}, table_cell_cap={})",
            self.alpha, self.group_size, self.threads, self.max_depth, self.table_cell_cap
        )
    }
}

impl LearnConfig {
    fn core(&self) -> CoreLearnConfig {
        CoreLearnConfig {
            alpha: self.alpha,
            group_size: self.group_size,
            threads: self.threads,
            max_depth: self.max_depth,
            table_cell_cap: self.table_cell_cap,
        }
    }
}

fn config_or_default(config: Option<&LearnConfig>) -> PyResult<CoreLearnConfig> {
    let cfg = config.map(LearnConfig::core).unwrap_or_default();
    cfg.validate().map_err(value_err)?;
    Ok(cfg)
}

/// Learned graph plus separating sets and per-depth counters.
#[pyclass(frozen, module = "bnpc")]
pub struct LearnResult {
    graph: MixedGraph,
    names: Vec<String>,
    sepsets: BTreeMap<(String, String), Vec<String>>,
    ci_tests_per_depth: Vec<u64>,
    removed_per_depth: Vec<usize>,
}

impl LearnResult {
    fn new(graph: MixedGraph, skeleton: &bnpc_core::Skeleton, names: &[String]) -> Self {
        let sepsets = skeleton
            .sepsets
            .iter()
            .map(|(&(a, b), set)| {
                (
                    (names[a].clone(), names[b].clone()),
                    set.iter().map(|&k| names[k].clone()).collect(),
                )
            })
            .collect();
        LearnResult {
            graph,
            names: names.to_vec(),
            sepsets,
            ci_tests_per_depth: skeleton.stats.depths.iter().map(|d| d.ci_tests).collect(),
            removed_per_depth: skeleton.stats.depths.iter().map(|d| d.removed).collect(),
        }
    }
}

#[pymethods]
impl LearnResult {
    #[getter]
    fn directed_edges(&self) -> Vec<(String, String)> {
        names_of(self.graph.directed_edges(), &self.names)
    }

    #[getter]
    fn undirected_edges(&self) -> Vec<(String, String)> {
        names_of(self.graph.undirected_edges(), &self.names)
    }

    #[getter]
    fn skeleton_edges(&self) -> Vec<(String, String)> {
        names_of(self.graph.skeleton_edges(), &self.names)
    }

    /// Separating set of every removed pair, keyed by the pair's names in
    /// variable order.
    #[getter]
    fn sepsets(&self) -> BTreeMap<(String, String), Vec<String>> {
        self.sepsets.clone()
    }

    #[getter]
    fn ci_tests_per_depth(&self) -> Vec<u64> {
        self.ci_tests_per_depth.clone()
    }

    #[getter]
    fn removed_per_depth(&self) -> Vec<usize> {
        self.removed_per_depth.clone()
    }

    #[getter]
    fn total_ci_tests(&self) -> u64 {
        self.ci_tests_per_depth.iter().sum()
    }

    fn edgelist(&self) -> String {
        OutputGraph::new(&self.graph, &self.names).to_edgelist()
    }

    fn dot(&self) -> String {
        OutputGraph::new(&self.graph, &self.names).to_dot()
    }

    fn __repr__(&self) -> String {
        format!(
            "LearnResult(directed={}, undirected={})",
            self.graph.directed_edges().len(),
            self.graph.undirected_edges().len()
        )
    }
}

/// Skeleton search, collider orientation and Meek closure.
#[pyfunction]
#[pyo3(signature = (dataset, config = None))]
fn learn(py: Python<'_>, dataset: &Dataset, config: Option<&LearnConfig>) -> PyResult<LearnResult> {
    let cfg = config_or_default(config)?;
    let CorePcResult { cpdag, skeleton } = py.detach(|| pc_stable(&dataset.inner, &cfg)).map_err(value_err)?;
    Ok(LearnResult::new(
        cpdag.into_graph(),
        &skeleton,
        dataset.inner.var_names(),
    ))
}

/// Skeleton search only; every edge of the result is undirected.
#[pyfunction]
#[pyo3(signature = (dataset, config = None))]
fn learn_skeleton_only(py: Python<'_>, dataset: &Dataset, config: Option<&LearnConfig>) -> PyResult<LearnResult> {
    let cfg = config_or_default(config)?;
    let skeleton = py.detach(|| learn_skeleton(&dataset.inner, &cfg)).map_err(value_err)?;
    Ok(LearnResult::new(
        skeleton.graph.clone(),
        &skeleton,
        dataset.inner.var_names(),
    ))
}

/// Outcome of one G² conditional-independence test.
#[pyclass(frozen, get_all, module = "bnpc")]
pub struct CiResult {
    g2: f64,
    dof: u64,
    p_value: f64,
    independent: bool,
    table_too_large: bool,
}

#[pymethods]
impl CiResult {
    fn __repr__(&self) -> String {
        format!(
            "CiResult(g2={}, dof={}, p_value={}, independent={})",
            self.g2,
            self.dof,
            self.p_value,
            if self.independent { "True" } else { "False" }
        )
    }
}

/// G² test of variable `x` against `y` given the variables in `cond`.
#[pyfunction]
#[pyo3(signature = (dataset, x, y, cond = Vec::new(), alpha = 0.05))]
fn ci_test(dataset: &Dataset, x: usize, y: usize, cond: Vec<usize>, alpha: f64) -> PyResult<CiResult> {
    let cfg = CiConfig::new(alpha).map_err(value_err)?;
    let r = core_ci_test(&dataset.inner, x, y, &cond, &cfg).map_err(value_err)?;
    Ok(CiResult {
        g2: r.g2,
        dof: r.dof,
        p_value: r.p_value,
        independent: r.independent,
        table_too_large: r.table_too_large,
    })
}

#[pyfunction]
fn chi2_sf(x: f64, dof: u64) -> f64 {
    core_chi2_sf(x, dof)
}

#[pyfunction]
fn binomial(p: usize, q: usize) -> PyResult<u64> {
    bnpc_core::binomial(p, q).map_err(value_err)
}

/// The `rank`-th `q`-subset of `0..p` in lexicographic order.
#[pyfunction]
fn unrank_combination(p: usize, q: usize, rank: u64) -> PyResult<Vec<usize>> {
    Ok(bnpc_core::unrank_combination(p, q, rank)
        .map_err(value_err)?
        .into_indices())
}

/// Analytical speedup estimates as a dict with keys `s_ci`, `s_grouping`,
/// `s_cache` and `s_overall`.
#[pyfunction]
#[pyo3(signature = (threads = 4, depth = 2, edges = 1200, deletion_ratio = 0.6, mean_degree = 10, cache_line_bytes = 64, dram_to_cache_ratio = 8.0))]
fn estimate_speedups(
    threads: usize,
    depth: usize,
    edges: usize,
    deletion_ratio: f64,
    mean_degree: usize,
    cache_line_bytes: usize,
    dram_to_cache_ratio: f64,
) -> PyResult<BTreeMap<&'static str, f64>> {
    let r = core_estimate_speedups(&SpeedupParams {
        threads,
        depth,
        edges_in_depth: edges,
        deletion_ratio,
        mean_degree,
        cache_line_bytes,
        dram_to_cache_ratio,
    })
    .map_err(value_err)?;
    Ok(BTreeMap::from([
        ("s_ci", r.s_ci),
        ("s_grouping", r.s_grouping),
        ("s_cache", r.s_cache),
        ("s_overall", r.s_overall),
    ]))
}

/// Parallel PC-stable structure learning for discrete Bayesian networks.
#[pymodule]
mod bnpc {
    #[pymodule_export]
    use super::{
        binomial, chi2_sf, ci_test, estimate_speedups, learn, learn_skeleton_only, unrank_combination, BnSpec,
        CiResult, Dataset, LearnConfig, LearnResult,
    };
}
