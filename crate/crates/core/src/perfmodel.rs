//! Analytical speedup model for one depth of skeleton search.
//!
//! Three factors multiply into the overall estimate:
//!
//! * `s_ci`: balanced CI-level scheduling against edge-level scheduling in
//!   the worst case where all "full" edges land on one thread;
//! * `s_grouping`: skipping the second endpoint's sets once an edge is gone;
//! * `s_cache`: column-major storage turning per-value DRAM misses into one
//!   miss per cache line.
//!
//! The per-test time cancels in every ratio, so no absolute times appear.

use thiserror::Error;

use crate::combinatorics::binomial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate model: depth {depth} exceeds mean degree {mean_degree}, so no edge has a test")]
    Degenerate { depth: usize, mean_degree: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupParams {
    pub threads: usize,
    pub depth: usize,
    pub edges_in_depth: usize,
    /// Fraction of the depth's edges deleted, in `[0, 1]`.
    pub deletion_ratio: f64,
    /// Stands in for both endpoint degrees of every edge.
    pub mean_degree: usize,
    pub cache_line_bytes: usize,
    /// `T_DRAM / T_cache`.
    pub dram_to_cache_ratio: f64,
}

impl SpeedupParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParameter(m.into()));
        if self.threads < 1 {
            return bad("threads must be at least 1");
        }
        if self.edges_in_depth < 1 {
            return bad("edges in depth must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.deletion_ratio) {
            return bad("deletion ratio must lie in [0, 1]");
        }
        if self.cache_line_bytes < 4 {
            return bad("cache line must hold at least one 4-byte value");
        }
        if !self.dram_to_cache_ratio.is_finite() || self.dram_to_cache_ratio < 1.0 {
            return bad("DRAM/cache access-time ratio must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupReport {
    pub s_ci: f64,
    pub s_grouping: f64,
    pub s_cache: f64,
    pub s_overall: f64,
}

pub fn estimate_speedups(p: &SpeedupParams) -> Result<SpeedupReport, ModelError> {
    p.validate()?;
    let per_edge = binomial(p.mean_degree, p.depth)
        .map_err(|_| ModelError::InvalidParameter("binomial count overflows".into()))?;
    if per_edge == 0 {
        return Err(ModelError::Degenerate {
            depth: p.depth,
            mean_degree: p.mean_degree,
        });
    }
    let c = 2.0 * per_edge as f64;
    let t = p.threads as f64;
    let edges = p.edges_in_depth as f64;

    // Edge-level: edges/t full edges on one thread.
    let t_edge = edges / t * c;
    // CI-level: the same work plus one test for each of the other edges,
    // spread evenly.
    let t_pool = (edges / t * c + (t - 1.0) * edges / t) / t;
    let s_ci = t_edge / t_pool;

    let s_grouping = 2.0 / (2.0 - p.deletion_ratio);

    // Times in units of T_cache for the B/4 samples of one cache line.
    let r = p.dram_to_cache_ratio;
    let vars = (p.depth + 2) as f64;
    let per_line = p.cache_line_bytes as f64 / 4.0;
    let t_row_major = r * vars * per_line;
    let t_col_major = r * vars + vars * (per_line - 1.0);
    let s_cache = t_row_major / t_col_major;

    Ok(SpeedupReport {
        s_ci,
        s_grouping,
        s_cache,
        s_overall: s_ci * s_grouping * s_cache,
    })
}

/// Formats `x` with `digits` significant digits, keeping trailing zeros.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.prec$}", prec = digits.saturating_sub(1));
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding may carry into a new leading digit (9.995 -> "10.00").
    let rounded: f64 = s.parse().unwrap_or(x);
    let new_mag = rounded.abs().log10().floor() as i64;
    if new_mag > magnitude && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}
