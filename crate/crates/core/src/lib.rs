//! Parallel PC-stable structure learning for discrete Bayesian networks.
//!
//! The pipeline is [`skeleton::learn_skeleton`] (CI-level parallel skeleton
//! search over a column-major [`data::Dataset`]) followed by
//! [`orient::orient_v_structures`] and [`orient::apply_meek_rules`];
//! [`orient::pc_stable`] runs all three. [`synth`] samples datasets from
//! known networks and [`perfmodel`] estimates the speedups of the scheduling
//! and layout choices analytically.

pub mod combinatorics;
pub mod data;
pub mod graph;
pub mod orient;
pub mod output;
pub mod perfmodel;
pub mod reference;
pub mod rng;
pub mod skeleton;
pub mod stats;
pub mod synth;

pub use combinatorics::{binomial, unrank_combination, Combination, Rank};
pub use data::{load_dataset, Dataset, LoadOptions};
pub use graph::{AdjacencySnapshot, MixedGraph, SepSetStore};
pub use orient::{apply_meek_rules, orient_v_structures, pc_stable, Cpdag, PcResult};
pub use perfmodel::{estimate_speedups, SpeedupParams, SpeedupReport};
pub use skeleton::{learn_skeleton, EdgeTask, LearnConfig, LearnError, Skeleton};
pub use stats::{chi2_sf, ci_test, g2_statistic, CiConfig, CiTestResult, ContingencyTable};
pub use synth::{forward_sample, load_bn_spec, parse_bn_spec, BnSpec};
