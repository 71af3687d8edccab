use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_rational::Ratio;
use serde::Serialize;

use super::config::{SimConfig, SimConfigError};
use super::decisions::derive_seed;
use super::engine::{run_simulation, SimOutput};
use crate::assertion::MatcherTable;
use crate::metrics::{auto_annotations, derive_family_outcomes, iteration_stats, repair_convergence, MetricsError};
use crate::report::ReportStatus;
use crate::signature::{Classifier, FailureSignature, SignatureCounts};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] SimConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Headline figures of one simulated corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub reports: usize,
    pub rc_naive: Ratio<u64>,
    pub rc_strict: Ratio<u64>,
    /// Percentage of reports that are NO_ARTIFACT.
    pub no_artifact_share: Ratio<u64>,
    pub mean_iterations: Option<Ratio<u64>>,
    pub escalations: usize,
    pub workarounds_applied: u32,
    /// Most reports emitted for one family.
    pub max_family_reports: u32,
    pub longest_no_artifact_streak: u32,
    /// Reports carrying each signature.
    pub signature_counts: SignatureCounts,
}

pub fn measure(output: &SimOutput, classifier: &Classifier, table: &MatcherTable) -> Result<RunMetrics, SimError> {
    let corpus = &output.corpus;
    let annotations = auto_annotations(corpus, table)?;
    let outcomes = derive_family_outcomes(corpus, &annotations)?;
    let totals = corpus.totals();
    let no_artifact = corpus.reports().iter().filter(|r| r.status == ReportStatus::NoArtifact).count();
    Ok(RunMetrics {
        seed: 0,
        reports: totals.reports,
        rc_naive: repair_convergence(&outcomes, false)?,
        rc_strict: repair_convergence(&outcomes, true)?,
        no_artifact_share: Ratio::new(no_artifact as u64 * 100, corpus.len() as u64),
        mean_iterations: iteration_stats(&outcomes)?.mean,
        escalations: output.review_queue.len(),
        workarounds_applied: output.traces.iter().map(|t| t.summary.workarounds_applied).sum(),
        max_family_reports: output.traces.iter().map(|t| t.summary.reports).max().unwrap_or(0),
        longest_no_artifact_streak: output
            .traces
            .iter()
            .map(|t| t.summary.longest_no_artifact_streak)
            .max()
            .unwrap_or(0),
        signature_counts: classifier.signature_histogram(corpus),
    })
}

/// Simulates `config` under `seed` and measures the result.
pub fn run_metrics(config: &SimConfig, seed: u64, classifier: &Classifier, table: &MatcherTable) -> Result<RunMetrics, SimError> {
    let config = SimConfig { seed, ..config.clone() };
    let output = run_simulation(&config)?;
    let mut metrics = measure(&output, classifier, table)?;
    metrics.seed = seed;
    Ok(metrics)
}

fn as_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Means over many runs of one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub runs: usize,
    pub mean_rc_naive: f64,
    pub mean_rc_strict: f64,
    pub mean_no_artifact_share: f64,
    /// Over runs where some family converged.
    pub mean_iterations: Option<f64>,
    pub mean_escalations: f64,
    pub runs_with_workaround: usize,
    pub runs_strict_below_naive: usize,
    /// Runs with a workaround but rc_strict == rc_naive; zero by construction.
    pub runs_workaround_unpenalized: usize,
    pub max_family_reports: u32,
    pub longest_no_artifact_streak: u32,
    /// Mean percentage of reports carrying each signature.
    pub mean_signature_share: BTreeMap<FailureSignature, f64>,
}

pub fn summarize_runs(runs: &[RunMetrics]) -> PolicySummary {
    let n = runs.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RunMetrics) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let iterations: Vec<f64> = runs.iter().filter_map(|r| r.mean_iterations.map(as_f64)).collect();
    PolicySummary {
        runs: runs.len(),
        mean_rc_naive: mean(&|r| as_f64(r.rc_naive)),
        mean_rc_strict: mean(&|r| as_f64(r.rc_strict)),
        mean_no_artifact_share: mean(&|r| as_f64(r.no_artifact_share)),
        mean_iterations: (!iterations.is_empty()).then(|| iterations.iter().sum::<f64>() / iterations.len() as f64),
        mean_escalations: mean(&|r| r.escalations as f64),
        runs_with_workaround: runs.iter().filter(|r| r.workarounds_applied > 0).count(),
        runs_strict_below_naive: runs.iter().filter(|r| r.rc_strict < r.rc_naive).count(),
        runs_workaround_unpenalized: runs
            .iter()
            .filter(|r| r.workarounds_applied > 0 && r.rc_strict == r.rc_naive)
            .count(),
        max_family_reports: runs.iter().map(|r| r.max_family_reports).max().unwrap_or(0),
        longest_no_artifact_streak: runs.iter().map(|r| r.longest_no_artifact_streak).max().unwrap_or(0),
        mean_signature_share: FailureSignature::ALL
            .into_iter()
            .map(|sig| (sig, mean(&|r| 100.0 * r.signature_counts.get(sig) as f64 / r.reports.max(1) as f64)))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyComparison {
    pub baseline: PolicySummary,
    pub constrained: PolicySummary,
}

/// Seed of run `index` in a comparison over `base`.
pub fn run_seed(base: &SimConfig, index: u64) -> u64 {
    derive_seed(base.seed, index)
}

/// Runs both configs over the same `runs` derived seeds.
pub fn compare_policies(baseline: &SimConfig, constrained: &SimConfig, runs: u64) -> Result<PolicyComparison, SimError> {
    if !baseline.same_world(constrained) {
        return Err(SimConfigError::Mismatched.into());
    }
    baseline.validate()?;
    constrained.validate()?;
    let classifier = Classifier::default();
    let table = MatcherTable::default();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..runs {
        let seed = run_seed(baseline, i);
        a.push(run_metrics(baseline, seed, &classifier, &table)?);
        b.push(run_metrics(constrained, seed, &classifier, &table)?);
    }
    Ok(PolicyComparison { baseline: summarize_runs(&a), constrained: summarize_runs(&b) })
}
