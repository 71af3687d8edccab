//! Parallel Monte Carlo over derived seeds.
//!
//! Run `i` uses `derive_seed(config.seed, i)` whatever the thread count, and
//! results are collected in run order, so summaries are reproducible.

use rayon::prelude::*;
use tether_core::assertion::MatcherTable;
use tether_core::signature::Classifier;
use tether_core::sim::{run_metrics, run_seed, summarize_runs, PolicyComparison, PolicySummary, RunMetrics, SimConfig, SimConfigError, SimError};

pub fn run_many(config: &SimConfig, runs: u64, classifier: &Classifier, table: &MatcherTable) -> Result<Vec<RunMetrics>, SimError> {
    config.validate()?;
    (0..runs)
        .into_par_iter()
        .map(|i| run_metrics(config, run_seed(config, i), classifier, table))
        .collect()
}

pub fn summarize_many(config: &SimConfig, runs: u64, classifier: &Classifier, table: &MatcherTable) -> Result<PolicySummary, SimError> {
    Ok(summarize_runs(&run_many(config, runs, classifier, table)?))
}

/// Both policies over the baseline's derived seeds; the configs must describe
/// the same world.
pub fn compare(baseline: &SimConfig, constrained: &SimConfig, runs: u64, classifier: &Classifier, table: &MatcherTable) -> Result<PolicyComparison, SimError> {
    if !baseline.same_world(constrained) {
        return Err(SimConfigError::Mismatched.into());
    }
    let constrained = SimConfig { seed: baseline.seed, ..constrained.clone() };
    let (a, b) = rayon::join(
        || summarize_many(baseline, runs, classifier, table),
        || summarize_many(&constrained, runs, classifier, table),
    );
    Ok(PolicyComparison { baseline: a?, constrained: b? })
}
