//! Contingency tables, the G² statistic and conditional-independence tests.
//!
//! Every test owns its table privately, so concurrent workers never share a
//! counter.

use thiserror::Error;

use crate::combinatorics::{CombinatoricsError, Rank};
use crate::data::{Code, Column, DataError, Dataset};

/// Default cap on contingency-table cells (2^24).
pub const DEFAULT_TABLE_CELL_CAP: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contingency table needs {cells} cells, cap is {cap}")]
    TableTooLarge { cells: u128, cap: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Combinatorics(#[from] CombinatoricsError),
}

/// Significance level and table-size cap shared by every test of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiConfig {
    pub alpha: f64,
    pub table_cell_cap: usize,
}

impl CiConfig {
    pub fn new(alpha: f64) -> Result<Self, StatsError> {
        let cfg = CiConfig {
            alpha,
            table_cell_cap: DEFAULT_TABLE_CELL_CAP,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(StatsError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.table_cell_cap == 0 {
            return Err(StatsError::InvalidArgument("table cell cap must be positive".into()));
        }
        Ok(())
    }
}

/// Observed counts `N_xyz` with their marginals.
///
/// Cell `(x, y, z)` lives at `(z * card_x + x) * card_y + y`; `z` is the
/// mixed-radix index of the conditioning configuration, first conditioning
/// variable most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    card_x: usize,
    card_y: usize,
    n_configs: usize,
    counts: Vec<u32>,
    row_marginals: Vec<u64>,
    col_marginals: Vec<u64>,
    slice_totals: Vec<u64>,
}

impl ContingencyTable {
    /// Builds a table from raw counts laid out as described on the type.
    pub fn from_counts(card_x: usize, card_y: usize, n_configs: usize, counts: Vec<u32>) -> Result<Self, StatsError> {
        if card_x == 0 || card_y == 0 || n_configs == 0 {
            return Err(StatsError::InvalidArgument("table dimensions must be positive".into()));
        }
        if counts.len() != card_x * card_y * n_configs {
            return Err(StatsError::InvalidArgument(format!(
                "{} counts for a {card_x}x{card_y}x{n_configs} table",
                counts.len()
            )));
        }
        let mut t = ContingencyTable {
            card_x,
            card_y,
            n_configs,
            counts,
            row_marginals: Vec::new(),
            col_marginals: Vec::new(),
            slice_totals: Vec::new(),
        };
        t.fill_marginals();
        Ok(t)
    }

    fn fill_marginals(&mut self) {
        let (cx, cy, nz) = (self.card_x, self.card_y, self.n_configs);
        self.row_marginals.clear();
        self.row_marginals.resize(nz * cx, 0);
        self.col_marginals.clear();
        self.col_marginals.resize(nz * cy, 0);
        self.slice_totals.clear();
        self.slice_totals.resize(nz, 0);
        for z in 0..nz {
            let slice = &self.counts[z * cx * cy..(z + 1) * cx * cy];
            let mut total = 0u64;
            for x in 0..cx {
                let row = &slice[x * cy..(x + 1) * cy];
                let mut row_sum = 0u64;
                for (y, &n) in row.iter().enumerate() {
                    row_sum += n as u64;
                    self.col_marginals[z * cy + y] += n as u64;
                }
                self.row_marginals[z * cx + x] = row_sum;
                total += row_sum;
            }
            self.slice_totals[z] = total;
        }
    }

    /// `(|V_i|, |V_j|, Z)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.card_x, self.card_y, self.n_configs)
    }

    pub fn count(&self, x: usize, y: usize, z: usize) -> u32 {
        self.counts[(z * self.card_x + x) * self.card_y + y]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `N_{x+z}`.
    pub fn row_marginal(&self, x: usize, z: usize) -> u64 {
        self.row_marginals[z * self.card_x + x]
    }

    /// `N_{+yz}`.
    pub fn col_marginal(&self, y: usize, z: usize) -> u64 {
        self.col_marginals[z * self.card_y + y]
    }

    /// `N_{++z}`.
    pub fn slice_total(&self, z: usize) -> u64 {
        self.slice_totals[z]
    }

    pub fn total(&self) -> u64 {
        self.slice_totals.iter().sum()
    }

    /// `E_xyz = N_{x+z} N_{+yz} / N_{++z}`; zero for an empty slice.
    pub fn expected(&self, x: usize, y: usize, z: usize) -> f64 {
        let nz = self.slice_total(z);
        if nz == 0 {
            return 0.0;
        }
        self.row_marginal(x, z) as f64 * self.col_marginal(y, z) as f64 / nz as f64
    }

    /// Degrees of freedom `(|V_i|-1)(|V_j|-1) * Z`.
    pub fn dof(&self) -> u64 {
        ((self.card_x - 1) * (self.card_y - 1)) as u64 * self.n_configs as u64
    }
}

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTestResult {
    pub g2: f64,
    pub dof: u64,
    pub p_value: f64,
    pub independent: bool,
    /// The table exceeded the cell cap and the test was declared
    /// uninformative.
    pub table_too_large: bool,
}

fn validate_indices(ds: &Dataset, i: usize, j: usize, cond: &[usize]) -> Result<(), StatsError> {
    ds.check_var(i)?;
    ds.check_var(j)?;
    if i == j {
        return Err(StatsError::InvalidArgument(format!("tested pair repeats variable {i}")));
    }
    for (pos, &k) in cond.iter().enumerate() {
        ds.check_var(k)?;
        if k == i || k == j {
            return Err(StatsError::InvalidArgument(format!(
                "conditioning set contains tested variable {k}"
            )));
        }
        if cond[..pos].contains(&k) {
            return Err(StatsError::InvalidArgument(format!(
                "conditioning set repeats variable {k}"
            )));
        }
    }
    Ok(())
}

fn table_cells(ds: &Dataset, i: usize, j: usize, cond: &[usize]) -> u128 {
    cond.iter()
        .fold(ds.cardinality(i) as u128 * ds.cardinality(j) as u128, |acc, &k| {
            acc.saturating_mul(ds.cardinality(k) as u128)
        })
}

fn mul_add<T: Code>(acc: &mut [u32], column: &[T], radix: u32) {
    for (a, &v) in acc.iter_mut().zip(column) {
        *a = *a * radix + v.index() as u32;
    }
}

/// `acc[s] = acc[s] * radix + column[s]` over all samples.
fn accumulate(acc: &mut [u32], column: Column<'_>, radix: usize) {
    let radix = radix as u32;
    match column {
        Column::U8(c) => mul_add(acc, c, radix),
        Column::U16(c) => mul_add(acc, c, radix),
        Column::U32(c) => mul_add(acc, c, radix),
    }
}

/// Reusable per-worker buffers for building tables over one variable pair.
///
/// The pair's joint code `x * |V_j| + y` is materialized once per pair and
/// reused by every test of a group, so each further test only streams its
/// conditioning columns.
#[derive(Debug, Default)]
pub struct CiWorkspace {
    pair: Option<(usize, usize)>,
    pair_codes: Vec<u32>,
    config_codes: Vec<u32>,
    set: Vec<usize>,
    tests_run: u64,
}

impl CiWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of tests executed through this workspace.
    pub fn tests_run(&self) -> u64 {
        self.tests_run
    }

    fn load_pair(&mut self, ds: &Dataset, i: usize, j: usize) {
        if self.pair == Some((i, j)) && self.pair_codes.len() == ds.n_samples() {
            return;
        }
        self.pair_codes.clear();
        self.pair_codes.resize(ds.n_samples(), 0);
        accumulate(&mut self.pair_codes, ds.column(i), 1);
        accumulate(&mut self.pair_codes, ds.column(j), ds.cardinality(j));
        self.pair = Some((i, j));
    }

    /// Builds the table for `(i, j | cond)`.
    pub fn build_contingency(
        &mut self,
        ds: &Dataset,
        i: usize,
        j: usize,
        cond: &[usize],
        table_cell_cap: usize,
    ) -> Result<ContingencyTable, StatsError> {
        validate_indices(ds, i, j, cond)?;
        let cells = table_cells(ds, i, j, cond);
        if cells > table_cell_cap as u128 || cells > u32::MAX as u128 {
            return Err(StatsError::TableTooLarge {
                cells,
                cap: table_cell_cap,
            });
        }
        self.load_pair(ds, i, j);
        let (cx, cy) = (ds.cardinality(i), ds.cardinality(j));
        let plane = cx * cy;
        let mut counts = vec![0u32; cells as usize];
        if cond.is_empty() {
            for &p in &self.pair_codes {
                counts[p as usize] += 1;
            }
        } else {
            self.config_codes.clear();
            self.config_codes.resize(ds.n_samples(), 0);
            for &k in cond {
                accumulate(&mut self.config_codes, ds.column(k), ds.cardinality(k));
            }
            for (&z, &p) in self.config_codes.iter().zip(&self.pair_codes) {
                counts[z as usize * plane + p as usize] += 1;
            }
        }
        let n_configs = cells as usize / plane;
        let mut table = ContingencyTable {
            card_x: cx,
            card_y: cy,
            n_configs,
            counts,
            row_marginals: Vec::new(),
            col_marginals: Vec::new(),
            slice_totals: Vec::new(),
        };
        table.fill_marginals();
        Ok(table)
    }

    /// Runs `I(V_i, V_j | cond)` at the configured significance level.
    pub fn ci_test(
        &mut self,
        ds: &Dataset,
        i: usize,
        j: usize,
        cond: &[usize],
        cfg: &CiConfig,
    ) -> Result<CiTestResult, StatsError> {
        self.tests_run += 1;
        match self.build_contingency(ds, i, j, cond, cfg.table_cell_cap) {
            Ok(table) => Ok(decide(&table, cfg.alpha)),
            Err(StatsError::TableTooLarge { cells, .. }) => {
                let dof = (ds.cardinality(i) as u128 - 1)
                    * (ds.cardinality(j) as u128 - 1)
                    * (cells / (ds.cardinality(i) as u128 * ds.cardinality(j) as u128));
                Ok(CiTestResult {
                    g2: 0.0,
                    dof: dof.min(u64::MAX as u128) as u64,
                    p_value: 1.0,
                    independent: true,
                    table_too_large: true,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Executes up to `group_size` consecutive tests of `sets` starting at
    /// `progress`.
    ///
    /// Every test of the group runs; the edge is removed iff any of them
    /// accepts independence, and the reported separating set is the accepting
    /// one with the lowest rank.
    #[allow(clippy::too_many_arguments)]
    pub fn run_group<S: ConditioningSequence + ?Sized>(
        &mut self,
        ds: &Dataset,
        i: usize,
        j: usize,
        sets: &S,
        progress: Rank,
        group_size: usize,
        cfg: &CiConfig,
    ) -> Result<GroupOutcome, StatsError> {
        if group_size == 0 {
            return Err(StatsError::InvalidArgument("group size must be at least 1".into()));
        }
        let total = sets.total();
        if progress >= total {
            return Err(StatsError::InvalidArgument(format!(
                "progress {progress} has no untested set (total {total})"
            )));
        }
        let end = total.min(progress.saturating_add(group_size as Rank));
        let mut sepset = None;
        let mut set = std::mem::take(&mut self.set);
        for rank in progress..end {
            sets.fill(rank, &mut set)?;
            let result = self.ci_test(ds, i, j, &set, cfg);
            let result = match result {
                Ok(r) => r,
                Err(e) => {
                    self.set = set;
                    return Err(e);
                }
            };
            if result.independent && sepset.is_none() {
                sepset = Some(set.clone());
            }
        }
        self.set = set;
        Ok(GroupOutcome {
            removed: sepset.is_some(),
            sepset,
            new_progress: end,
            tests_run: end - progress,
        })
    }
}

/// The ordered conditioning sets of one edge, addressable by rank.
pub trait ConditioningSequence {
    fn total(&self) -> Rank;
    /// Writes the variable indices of set `rank` into `out`.
    fn fill(&self, rank: Rank, out: &mut Vec<usize>) -> Result<(), CombinatoricsError>;
}

impl ConditioningSequence for [Vec<usize>] {
    fn total(&self) -> Rank {
        self.len() as Rank
    }

    fn fill(&self, rank: Rank, out: &mut Vec<usize>) -> Result<(), CombinatoricsError> {
        let set = self.get(rank as usize).ok_or(CombinatoricsError::RankOutOfRange {
            p: self.len(),
            q: 1,
            rank,
            count: self.len() as Rank,
        })?;
        out.clear();
        out.extend_from_slice(set);
        Ok(())
    }
}

/// Result of one group of tests on one edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupOutcome {
    pub removed: bool,
    pub sepset: Option<Vec<usize>>,
    pub new_progress: Rank,
    pub tests_run: u64,
}

/// Builds the contingency table for `(i, j | cond)`.
pub fn build_contingency(
    ds: &Dataset,
    i: usize,
    j: usize,
    cond: &[usize],
    table_cell_cap: usize,
) -> Result<ContingencyTable, StatsError> {
    CiWorkspace::new().build_contingency(ds, i, j, cond, table_cell_cap)
}

/// Runs a single conditional-independence test.
pub fn ci_test(ds: &Dataset, i: usize, j: usize, cond: &[usize], cfg: &CiConfig) -> Result<CiTestResult, StatsError> {
    cfg.validate()?;
    CiWorkspace::new().ci_test(ds, i, j, cond, cfg)
}

/// Runs one group of tests with a fresh workspace.
pub fn run_group<S: ConditioningSequence + ?Sized>(
    ds: &Dataset,
    i: usize,
    j: usize,
    sets: &S,
    progress: Rank,
    group_size: usize,
    cfg: &CiConfig,
) -> Result<GroupOutcome, StatsError> {
    cfg.validate()?;
    CiWorkspace::new().run_group(ds, i, j, sets, progress, group_size, cfg)
}

fn decide(table: &ContingencyTable, alpha: f64) -> CiTestResult {
    let (g2, dof) = g2_statistic(table);
    if dof == 0 {
        return CiTestResult {
            g2,
            dof,
            p_value: 1.0,
            independent: true,
            table_too_large: false,
        };
    }
    let p_value = chi2_sf(g2, dof);
    CiTestResult {
        g2,
        dof,
        p_value,
        independent: p_value > alpha,
        table_too_large: false,
    }
}

/// `G² = 2 Σ N_xyz ln(N_xyz / E_xyz)` and its degrees of freedom.
///
/// Empty cells and empty slices contribute nothing.
pub fn g2_statistic(table: &ContingencyTable) -> (f64, u64) {
    let (cx, cy, nz) = table.dims();
    let mut sum = 0.0f64;
    for z in 0..nz {
        let total = table.slice_total(z);
        if total == 0 {
            continue;
        }
        let total = total as f64;
        for x in 0..cx {
            let row = table.row_marginal(x, z);
            if row == 0 {
                continue;
            }
            let row = row as f64;
            for y in 0..cy {
                let n = table.count(x, y, z);
                if n == 0 {
                    continue;
                }
                let n = n as f64;
                let col = table.col_marginal(y, z) as f64;
                sum += n * (n * total / (row * col)).ln();
            }
        }
    }
    ((2.0 * sum).max(0.0), table.dof())
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(a)` for `a > 0` (Lanczos approximation).
pub fn ln_gamma(a: f64) -> f64 {
    if a < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let a = a - 1.0;
    let mut series = LANCZOS[0];
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (a + k as f64);
    }
    let t = a + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (a + 0.5) * t.ln() - t + series.ln()
}

const GAMMA_EPS: f64 = 1e-14;
const GAMMA_MIN_ITER: usize = 500;

// Series and continued fraction need O(sqrt(a)) terms near the mode, so the
// fixed cap grows for very large shape parameters.
fn iteration_cap(a: f64) -> usize {
    GAMMA_MIN_ITER + (10.0 * a.sqrt()).ceil() as usize
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    let cap = iteration_cap(a);
    if x < a + 1.0 {
        // P(a, x) = e^{-x} x^a / Γ(a+1) * Σ x^n / ((a+1)...(a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..cap {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        (1.0 - sum * log_prefactor.exp()).clamp(0.0, 1.0)
    } else {
        // Modified Lentz on Q's continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for n in 1..=cap {
            let an = -(n as f64) * (n as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        (log_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}

/// Upper-tail probability `P(χ²_dof ≥ x)`.
pub fn chi2_sf(x: f64, dof: u64) -> f64 {
    if x <= 0.0 || dof == 0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(columns: Vec<Vec<u32>>) -> Dataset {
        let cards = columns
            .iter()
            .map(|c| c.iter().copied().max().unwrap_or(0) as usize + 1)
            .collect();
        let names = (0..columns.len()).map(|i| format!("V{i}")).collect();
        Dataset::from_columns(names, cards, None, columns).unwrap()
    }

    #[test]
    fn constant_pair_single_cell() {
        let ds = dataset(vec![vec![0; 7], vec![0; 7]]);
        let t = build_contingency(&ds, 0, 1, &[], DEFAULT_TABLE_CELL_CAP).unwrap();
        assert_eq!(t.dims(), (1, 1, 1));
        assert_eq!(t.counts(), &[7]);
    }

    #[test]
    fn hand_listed_two_by_two_by_two() {
        // rows (x, y, z)
        let rows = [
            (0, 0, 0),
            (0, 1, 0),
            (1, 1, 0),
            (1, 1, 0),
            (0, 0, 1),
            (1, 0, 1),
            (1, 0, 1),
            (1, 1, 1),
        ];
        let ds = dataset(vec![
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
        ]);
        let t = build_contingency(&ds, 0, 1, &[2], DEFAULT_TABLE_CELL_CAP).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let tally = rows.iter().filter(|r| **r == (x, y, z)).count() as u32;
                    assert_eq!(t.count(x as usize, y as usize, z as usize), tally);
                }
            }
        }
        assert_eq!(t.slice_total(0), 4);
        assert_eq!(t.row_marginal(1, 1), 3);
        assert_eq!(t.col_marginal(0, 1), 3);
    }

    #[test]
    fn mixed_radix_first_conditioning_variable_most_significant() {
        let ds = dataset(vec![vec![0, 0], vec![0, 0], vec![1, 0], vec![0, 2]]);
        let t = build_contingency(&ds, 0, 1, &[2, 3], DEFAULT_TABLE_CELL_CAP).unwrap();
        assert_eq!(t.dims(), (1, 1, 6));
        // sample 0: z = 1 * 3 + 0 = 3; sample 1: z = 0 * 3 + 2 = 2
        assert_eq!(t.count(0, 0, 3), 1);
        assert_eq!(t.count(0, 0, 2), 1);
    }

    #[test]
    fn argument_errors() {
        let ds = dataset(vec![vec![0, 1], vec![1, 0], vec![0, 0]]);
        let cap = DEFAULT_TABLE_CELL_CAP;
        assert!(matches!(
            build_contingency(&ds, 0, 0, &[], cap),
            Err(StatsError::InvalidArgument(_))
        ));
        assert!(matches!(
            build_contingency(&ds, 0, 1, &[1], cap),
            Err(StatsError::InvalidArgument(_))
        ));
        assert!(matches!(
            build_contingency(&ds, 0, 1, &[2, 2], cap),
            Err(StatsError::InvalidArgument(_))
        ));
        assert!(matches!(
            build_contingency(&ds, 0, 5, &[], cap),
            Err(StatsError::Data(_))
        ));
        assert!(matches!(
            build_contingency(&ds, 0, 1, &[2], 3),
            Err(StatsError::TableTooLarge { cells: 4, cap: 3 })
        ));
    }

    #[test]
    fn oversized_table_is_uninformative() {
        let ds = dataset(vec![vec![0, 1], vec![1, 0], vec![0, 1]]);
        let cfg = CiConfig {
            alpha: 0.05,
            table_cell_cap: 4,
        };
        let r = ci_test(&ds, 0, 1, &[2], &cfg).unwrap();
        assert!(r.independent && r.table_too_large);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn g2_zero_when_observed_equals_expected() {
        let t = ContingencyTable::from_counts(2, 2, 1, vec![10, 10, 10, 10]).unwrap();
        let (g2, dof) = g2_statistic(&t);
        assert_eq!(g2, 0.0);
        assert_eq!(dof, 1);
    }

    #[test]
    fn g2_two_by_two_matches_direct_formula() {
        let t = ContingencyTable::from_counts(2, 2, 1, vec![20, 5, 5, 20]).unwrap();
        // E = 12.5 everywhere.
        let direct = 2.0 * (2.0 * 20.0 * (20.0f64 / 12.5).ln() + 2.0 * 5.0 * (5.0f64 / 12.5).ln());
        let (g2, _) = g2_statistic(&t);
        assert!(((g2 - direct) / direct).abs() < 1e-12);
    }

    #[test]
    fn diagonal_table_is_dependent() {
        let t = ContingencyTable::from_counts(2, 2, 1, vec![25, 0, 0, 25]).unwrap();
        let (g2, _) = g2_statistic(&t);
        // 0.999 quantile of chi2(1).
        assert!(g2 > 10.827_566_170_662_733);
        assert!(chi2_sf(g2, 1) < 0.001);
    }

    #[test]
    fn chi2_sf_closed_form_dof_two() {
        for &x in &[0.5, 1.0, 3.0, 10.0] {
            assert!((chi2_sf(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-10);
        }
        for k in 1..30 {
            assert_eq!(chi2_sf(0.0, k), 1.0);
        }
    }

    #[test]
    fn chi2_sf_large_dof_converges() {
        // Median of chi2(k) is close to k(1 - 2/(9k))^3.
        let k = 1_000_000u64;
        let kf = k as f64;
        let median = kf * (1.0 - 2.0 / (9.0 * kf)).powi(3);
        let p = chi2_sf(median, k);
        assert!((p - 0.5).abs() < 1e-3, "p = {p}");
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn copy_is_dependent() {
        let x: Vec<u32> = (0..200).map(|s| (s * 7 % 3) as u32).collect();
        let ds = dataset(vec![x.clone(), x]);
        let r = ci_test(&ds, 0, 1, &[], &CiConfig::new(0.05).unwrap()).unwrap();
        assert!(!r.independent);
    }

    #[test]
    fn constant_variable_gives_zero_dof() {
        let ds = dataset(vec![vec![0, 1, 0, 1], vec![0; 4]]);
        let r = ci_test(&ds, 0, 1, &[], &CiConfig::new(0.05).unwrap()).unwrap();
        assert_eq!(r.dof, 0);
        assert!(r.independent);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn alpha_validation() {
        assert!(CiConfig::new(0.0).is_err());
        assert!(CiConfig::new(1.0).is_err());
        assert!(CiConfig::new(f64::NAN).is_err());
    }

    fn chain_dataset() -> Dataset {
        // v0 drives v1; v2 independent noise; v3 = v0 copy.
        let n = 400;
        let v0: Vec<u32> = (0..n).map(|s| (s % 2) as u32).collect();
        let v1: Vec<u32> = (0..n)
            .map(|s| if s % 5 == 0 { 1 - (s % 2) as u32 } else { (s % 2) as u32 })
            .collect();
        let v2: Vec<u32> = (0..n).map(|s| ((s / 2) % 2) as u32).collect();
        let v3 = v0.clone();
        dataset(vec![v0, v1, v2, v3])
    }

    #[test]
    fn group_of_one_matches_single_test() {
        let ds = chain_dataset();
        let cfg = CiConfig::new(0.05).unwrap();
        let sets: Vec<Vec<usize>> = vec![vec![2], vec![3]];
        for (rank, set) in sets.iter().enumerate() {
            let single = ci_test(&ds, 0, 1, set, &cfg).unwrap();
            let group = run_group(&ds, 0, 1, sets.as_slice(), rank as Rank, 1, &cfg).unwrap();
            assert_eq!(group.removed, single.independent);
            assert_eq!(group.new_progress, rank as Rank + 1);
        }
    }

    #[test]
    fn group_truncates_at_sequence_end() {
        let ds = chain_dataset();
        let cfg = CiConfig::new(0.05).unwrap();
        let sets: Vec<Vec<usize>> = vec![vec![2]; 5];
        let out = run_group(&ds, 0, 1, sets.as_slice(), 0, 8, &cfg).unwrap();
        assert_eq!(out.tests_run, 5);
        assert_eq!(out.new_progress, 5);
    }

    #[test]
    fn group_reports_lowest_accepting_rank() {
        let ds = chain_dataset();
        let cfg = CiConfig::new(0.05).unwrap();
        // conditioning on the copy v3 separates v0 and v1; on v2 it does not
        let sets: Vec<Vec<usize>> = vec![vec![2], vec![3], vec![2, 3]];
        let out = run_group(&ds, 0, 1, sets.as_slice(), 0, 3, &cfg).unwrap();
        assert!(out.removed);
        assert_eq!(out.sepset, Some(vec![3]));
        assert_eq!(out.tests_run, 3);
    }

    #[test]
    fn group_rejects_exhausted_progress() {
        let ds = chain_dataset();
        let cfg = CiConfig::new(0.05).unwrap();
        let sets: Vec<Vec<usize>> = vec![vec![2]];
        assert!(run_group(&ds, 0, 1, sets.as_slice(), 1, 1, &cfg).is_err());
        assert!(run_group(&ds, 0, 1, sets.as_slice(), 0, 0, &cfg).is_err());
    }
}
