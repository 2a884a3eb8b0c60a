//! Discrete Bayesian networks and seeded forward sampling.
//!
//! # Network file format
//!
//! Line oriented; `#` starts a comment, blank lines are ignored.
//!
//! ```text
//! nodes:
//! <name> <cardinality>          one line per node, in declaration order
//! parents:
//! <child> <- <parent> ...       nodes without a line have no parents
//! cpt <name>:
//! <p_0> <p_1> ... <p_{k-1}>     one row per parent configuration
//! ```
//!
//! CPT rows follow the mixed-radix order of the parent configuration with the
//! first listed parent most significant. Every node needs a `cpt` block, and
//! each row must be nonnegative and sum to 1 within `1e-9`.
//!
//! Sampling draws from [`SplitMix64`]: samples in order, nodes in topological
//! order within a sample, one uniform per node, inverse-CDF over the row.

use std::collections::HashMap;
use std::io::Read;

use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::graph::MixedGraph;
use crate::rng::SplitMix64;

/// Five-node network `X -> Z <- Y, Z -> W, W -> U` with strong CPTs.
pub const COLLIDER_CHAIN: &str = include_str!("../fixtures/collider_chain.bn");

/// Sample count and seed used with [`COLLIDER_CHAIN`] by the recovery tests.
pub const COLLIDER_CHAIN_SAMPLES: usize = 10_000;
pub const COLLIDER_CHAIN_SEED: u64 = 20_220_505;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("parent graph is not acyclic: {0}")]
    Cycle(String),
    #[error("{}CPT of {node}: {message}", line_prefix(*.line))]
    Cpt {
        node: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{}shape mismatch for {node}: {message}", line_prefix(*.line))]
    Shape {
        node: String,
        line: Option<usize>,
        message: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

/// A validated discrete Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct BnSpec {
    names: Vec<String>,
    cardinalities: Vec<usize>,
    parents: Vec<Vec<usize>>,
    cpts: Vec<Vec<Vec<f64>>>,
    topo_order: Vec<usize>,
}

impl BnSpec {
    /// Validates and builds a network. `cpts[v]` holds one row per parent
    /// configuration of `v`.
    pub fn new(
        nodes: Vec<(String, usize)>,
        parents: Vec<Vec<usize>>,
        cpts: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, SpecError> {
        Self::build(nodes, parents, cpts, None)
    }

    fn build(
        nodes: Vec<(String, usize)>,
        parents: Vec<Vec<usize>>,
        cpts: Vec<Vec<Vec<f64>>>,
        row_lines: Option<&[Vec<usize>]>,
    ) -> Result<Self, SpecError> {
        let n = nodes.len();
        let (names, cardinalities): (Vec<String>, Vec<usize>) = nodes.into_iter().unzip();
        if parents.len() != n || cpts.len() != n {
            return Err(SpecError::InvalidArgument(format!(
                "{n} nodes but {} parent lists and {} CPTs",
                parents.len(),
                cpts.len()
            )));
        }
        for (v, &card) in cardinalities.iter().enumerate() {
            if card == 0 {
                return Err(SpecError::Shape {
                    node: names[v].clone(),
                    line: None,
                    message: "cardinality must be at least 1".into(),
                });
            }
        }
        for (v, ps) in parents.iter().enumerate() {
            for (x, &p) in ps.iter().enumerate() {
                if p >= n || p == v || ps[..x].contains(&p) {
                    return Err(SpecError::InvalidArgument(format!(
                        "invalid parent index {p} for {}",
                        names[v]
                    )));
                }
            }
        }
        let line_of = |v: usize, r: usize| row_lines.and_then(|l| l[v].get(r).copied());
        for v in 0..n {
            let expected_rows: usize = parents[v].iter().map(|&p| cardinalities[p]).product();
            if cpts[v].len() != expected_rows {
                return Err(SpecError::Shape {
                    node: names[v].clone(),
                    line: None,
                    message: format!("{} CPT rows, expected {expected_rows}", cpts[v].len()),
                });
            }
            for (r, row) in cpts[v].iter().enumerate() {
                if row.len() != cardinalities[v] {
                    return Err(SpecError::Shape {
                        node: names[v].clone(),
                        line: line_of(v, r),
                        message: format!("row {r} has {} entries, expected {}", row.len(), cardinalities[v]),
                    });
                }
                if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                    return Err(SpecError::Cpt {
                        node: names[v].clone(),
                        line: line_of(v, r),
                        message: format!("row {r} has a negative or non-finite entry"),
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(SpecError::Cpt {
                        node: names[v].clone(),
                        line: line_of(v, r),
                        message: format!("row {r} sums to {sum}"),
                    });
                }
            }
        }
        let topo_order = topological_order(&names, &parents)?;
        Ok(BnSpec {
            names,
            cardinalities,
            parents,
            cpts,
            topo_order,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn cpt(&self, v: usize) -> &[Vec<f64>] {
        &self.cpts[v]
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// The network's DAG with every edge `parent -> child`.
    pub fn dag(&self) -> MixedGraph {
        let mut g = MixedGraph::empty(self.n_nodes());
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                g.add_directed(p, child).expect("validated parent index");
            }
        }
        g
    }

    /// Serializes to the text format read by [`parse_bn_spec`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("nodes:\n");
        for (name, card) in self.names.iter().zip(&self.cardinalities) {
            out.push_str(&format!("{name} {card}\n"));
        }
        out.push_str("\nparents:\n");
        for (v, ps) in self.parents.iter().enumerate() {
            if !ps.is_empty() {
                let list: Vec<&str> = ps.iter().map(|&p| self.names[p].as_str()).collect();
                out.push_str(&format!("{} <- {}\n", self.names[v], list.join(" ")));
            }
        }
        for (v, rows) in self.cpts.iter().enumerate() {
            out.push_str(&format!("\ncpt {}:\n", self.names[v]));
            for row in rows {
                let cells: Vec<String> = row.iter().map(|p| format!("{p:?}")).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

// Kahn's algorithm, always releasing the smallest ready index.
fn topological_order(names: &[String], parents: &[Vec<usize>]) -> Result<Vec<usize>, SpecError> {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != n {
        let stuck: Vec<&str> = (0..n).filter(|&v| pending[v] > 0).map(|v| names[v].as_str()).collect();
        return Err(SpecError::Cycle(format!(
            "nodes on or below a cycle: {}",
            stuck.join(", ")
        )));
    }
    Ok(order)
}

enum Section {
    None,
    Nodes,
    Parents,
    Cpt(usize),
}

/// Parses the network text format described in the module docs.
pub fn parse_bn_spec(text: &str) -> Result<BnSpec, SpecError> {
    let mut nodes: Vec<(String, usize)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut parents: Vec<Option<Vec<usize>>> = Vec::new();
    let mut cpts: Vec<Option<Vec<Vec<f64>>>> = Vec::new();
    let mut row_lines: Vec<Vec<usize>> = Vec::new();
    let mut section = Section::None;

    let syntax = |line: usize, message: String| SpecError::Syntax { line, message };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "nodes:" {
            section = Section::Nodes;
            continue;
        }
        if line == "parents:" {
            section = Section::Parents;
            continue;
        }
        if let Some(name) = line.strip_prefix("cpt ").and_then(|s| s.strip_suffix(':')) {
            let name = name.trim();
            let v = *index
                .get(name)
                .ok_or_else(|| syntax(line_no, format!("cpt for undeclared node {name:?}")))?;
            if cpts[v].is_some() {
                return Err(syntax(line_no, format!("second cpt block for {name:?}")));
            }
            cpts[v] = Some(Vec::new());
            section = Section::Cpt(v);
            continue;
        }
        match section {
            Section::None => {
                return Err(syntax(line_no, "content before any section header".into()));
            }
            Section::Nodes => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                let [name, card] = fields[..] else {
                    return Err(syntax(line_no, "expected `<name> <cardinality>`".into()));
                };
                let card: usize = card
                    .parse()
                    .map_err(|_| syntax(line_no, format!("bad cardinality {card:?}")))?;
                if index.insert(name.to_owned(), nodes.len()).is_some() {
                    return Err(syntax(line_no, format!("duplicate node {name:?}")));
                }
                nodes.push((name.to_owned(), card));
                parents.push(None);
                cpts.push(None);
                row_lines.push(Vec::new());
            }
            Section::Parents => {
                let (child, rest) = line
                    .split_once("<-")
                    .ok_or_else(|| syntax(line_no, "expected `<child> <- <parents>`".into()))?;
                let child = child.trim();
                let c = *index
                    .get(child)
                    .ok_or_else(|| syntax(line_no, format!("undeclared node {child:?}")))?;
                if parents[c].is_some() {
                    return Err(syntax(line_no, format!("second parents line for {child:?}")));
                }
                let mut list = Vec::new();
                for p in rest.split_whitespace() {
                    let pi = *index
                        .get(p)
                        .ok_or_else(|| syntax(line_no, format!("undeclared parent {p:?}")))?;
                    if pi == c || list.contains(&pi) {
                        return Err(syntax(line_no, format!("invalid parent {p:?} for {child:?}")));
                    }
                    list.push(pi);
                }
                parents[c] = Some(list);
            }
            Section::Cpt(v) => {
                let row = line
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| syntax(line_no, format!("bad probability {t:?}")))
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                cpts[v].as_mut().expect("block opened").push(row);
                row_lines[v].push(line_no);
            }
        }
    }

    if nodes.is_empty() {
        return Err(SpecError::InvalidArgument("no nodes declared".into()));
    }
    let mut cpt_rows = Vec::with_capacity(nodes.len());
    for (v, c) in cpts.into_iter().enumerate() {
        cpt_rows.push(c.ok_or_else(|| SpecError::Shape {
            node: nodes[v].0.clone(),
            line: None,
            message: "missing cpt block".into(),
        })?);
    }
    let parents = parents.into_iter().map(Option::unwrap_or_default).collect();
    BnSpec::build(nodes, parents, cpt_rows, Some(&row_lines))
}

/// Reads and parses a network description.
pub fn load_bn_spec<R: Read>(mut source: R) -> Result<BnSpec, SpecError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_bn_spec(&text)
}

/// Draws `n_samples` joint samples. Identical `(spec, n_samples, seed)`
/// always produce identical datasets.
pub fn forward_sample(spec: &BnSpec, n_samples: usize, seed: u64) -> Result<Dataset, SpecError> {
    if n_samples == 0 {
        return Err(SpecError::InvalidArgument("sample count must be at least 1".into()));
    }
    if spec.n_nodes() < 2 {
        return Err(SpecError::InvalidArgument(
            "a dataset needs at least 2 variables".into(),
        ));
    }
    let n = spec.n_nodes();
    let mut rng = SplitMix64::new(seed);
    let mut columns: Vec<Vec<u32>> = vec![Vec::with_capacity(n_samples); n];
    let mut current = vec![0usize; n];
    for _ in 0..n_samples {
        for &v in &spec.topo_order {
            let config = spec.parents[v]
                .iter()
                .fold(0usize, |acc, &p| acc * spec.cardinalities[p] + current[p]);
            let row = &spec.cpts[v][config];
            let value = draw(row, rng.next_f64());
            current[v] = value;
            columns[v].push(value as u32);
        }
    }
    Ok(Dataset::from_columns(
        spec.names.clone(),
        spec.cardinalities.clone(),
        None,
        columns,
    )?)
}

fn draw(row: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (k, &p) in row.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return k;
        }
    }
    // u landed in the rounding gap above the last partial sum.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Shape of a randomly generated network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomNetworkConfig {
    pub n_nodes: usize,
    pub max_parents: usize,
    pub min_cardinality: usize,
    pub max_cardinality: usize,
    /// Probability mass on each CPT row's dominant category.
    pub dominant_mass: f64,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        RandomNetworkConfig {
            n_nodes: 20,
            max_parents: 2,
            min_cardinality: 2,
            max_cardinality: 3,
            dominant_mass: 0.7,
        }
    }
}

/// Random DAG over nodes `N0..` (declaration order is topological) with
/// rows that put `dominant_mass` on one random category each.
pub fn random_network(cfg: &RandomNetworkConfig, seed: u64) -> Result<BnSpec, SpecError> {
    if cfg.n_nodes < 2 || cfg.min_cardinality < 2 || cfg.max_cardinality < cfg.min_cardinality {
        return Err(SpecError::InvalidArgument("invalid random network shape".into()));
    }
    if !(cfg.dominant_mass > 0.0 && cfg.dominant_mass < 1.0) {
        return Err(SpecError::InvalidArgument("dominant mass must lie in (0, 1)".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let n = cfg.n_nodes;
    let span = (cfg.max_cardinality - cfg.min_cardinality + 1) as u64;
    let cards: Vec<usize> = (0..n).map(|_| cfg.min_cardinality + rng.below(span) as usize).collect();
    let mut parents = Vec::with_capacity(n);
    for v in 0..n {
        let k = (rng.below(cfg.max_parents as u64 + 1) as usize).min(v);
        let mut pool: Vec<usize> = (0..v).collect();
        rng.shuffle(&mut pool);
        let mut ps: Vec<usize> = pool.into_iter().take(k).collect();
        ps.sort_unstable();
        parents.push(ps);
    }
    let mut cpts = Vec::with_capacity(n);
    for v in 0..n {
        let rows: usize = parents[v].iter().map(|&p: &usize| cards[p]).product();
        let card = cards[v];
        let mut table = Vec::with_capacity(rows);
        for _ in 0..rows {
            let dominant = rng.below(card as u64) as usize;
            let weights: Vec<f64> = (0..card).map(|_| 0.1 + rng.next_f64()).collect();
            let rest: f64 = weights
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != dominant)
                .map(|(_, w)| w)
                .sum();
            let mut row: Vec<f64> = weights
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    if k == dominant {
                        cfg.dominant_mass
                    } else {
                        (1.0 - cfg.dominant_mass) * w / rest
                    }
                })
                .collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
            table.push(row);
        }
        cpts.push(table);
    }
    let nodes = (0..n).map(|v| (format!("N{v}"), cards[v])).collect();
    BnSpec::new(nodes, parents, cpts)
}
