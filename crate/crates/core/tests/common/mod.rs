//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use bnpc_core::combinatorics::binomial;
use bnpc_core::reference::enumerate_subsets;
use bnpc_core::synth::{forward_sample, random_network, RandomNetworkConfig};
use bnpc_core::Dataset;

/// One frozen table: dimensions, counts, and G² / p-value evaluated at
/// 50 significant digits (`scripts/gen_g2_oracle.py`).
pub struct FrozenTable {
    pub dims: (usize, usize, usize),
    pub counts: Vec<u32>,
    pub g2: f64,
    pub p_value: f64,
}

pub fn frozen_g2_tables() -> Vec<FrozenTable> {
    include_str!("../data/g2_oracle.txt")
        .lines()
        .map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            FrozenTable {
                dims: (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap()),
                g2: f[3].parse().unwrap(),
                p_value: f[4].parse().unwrap(),
                counts: f[5..].iter().map(|c| c.parse().unwrap()).collect(),
            }
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// `ln Γ(k/2)` for integer `k` from factorial identities.
pub fn ln_gamma_half_integer(k: u64) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(|m| (m as f64).ln()).sum()
    } else {
        // Γ(n + 1/2) = (1/2)(3/2)...(n - 1/2) sqrt(pi)
        let n = k / 2;
        (0..n).map(|m| (m as f64 + 0.5).ln()).sum::<f64>() + 0.5 * std::f64::consts::PI.ln()
    }
}

/// Upper tail of chi-square(k) by Simpson quadrature in `u = sqrt(t)`.
pub fn chi2_sf_quadrature(x: f64, k: u64) -> f64 {
    let kf = k as f64;
    let ln_norm = -(kf / 2.0) * std::f64::consts::LN_2 - ln_gamma_half_integer(k);
    // Density of u with t = u^2: 2 u^(k-1) exp(-u^2/2) * norm.
    let f = |u: f64| {
        if u <= 0.0 {
            return if k == 1 { 2.0 * ln_norm.exp() } else { 0.0 };
        }
        (std::f64::consts::LN_2 + (kf - 1.0) * u.ln() - u * u / 2.0 + ln_norm).exp()
    };
    let lo = x.sqrt();
    let hi = lo.max(kf.sqrt()) + 40.0;
    let steps = 400_000usize;
    let h = (hi - lo) / steps as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Checks unranking against the recursive enumerator for every `q <= p`.
pub fn unrank_matches_enumeration(p: usize) -> Result<(), String> {
    let items: Vec<usize> = (0..p).collect();
    for q in 0..=p {
        let all = enumerate_subsets(&items, q);
        if all.len() as u64 != binomial(p, q).map_err(|e| e.to_string())? {
            return Err(format!("C({p},{q}) disagrees with enumeration"));
        }
        for (r, want) in all.iter().enumerate() {
            let got = bnpc_core::unrank_combination(p, q, r as u64).map_err(|e| e.to_string())?;
            if got.indices() != &want[..] {
                return Err(format!("p={p} q={q} r={r}: {:?} vs {want:?}", got.indices()));
            }
        }
        if bnpc_core::unrank_combination(p, q, all.len() as u64).is_ok() {
            return Err(format!("p={p} q={q}: rank past the end accepted"));
        }
    }
    Ok(())
}

/// Dataset sampled from a seeded random network.
pub fn random_dataset(n_nodes: usize, max_parents: usize, samples: usize, seed: u64) -> Dataset {
    let spec = random_network(
        &RandomNetworkConfig {
            n_nodes,
            max_parents,
            ..RandomNetworkConfig::default()
        },
        seed,
    )
    .unwrap();
    forward_sample(&spec, samples, seed ^ 0x00ab_cdef).unwrap()
}
