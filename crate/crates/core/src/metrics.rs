//! Repair convergence, iteration statistics, family outcomes and phase tables.
//!
//! Everything is computed as exact rationals; percentages are `Ratio<u64>`
//! values on a 0–100 scale. Rounding happens only when rendering.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::assertion::{diff_suites, parse_test_script, MatcherTable, ParseError};
use crate::report::{Corpus, ReportStatus};
use crate::signature::{Classifier, CooccurrenceDenominator, SignatureCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConvergenceQuality {
    Clean,
    AssertionWeakened,
    ScopeReduced,
    None,
}

impl ConvergenceQuality {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Clean => "CLEAN",
            Self::AssertionWeakened => "ASSERTION_WEAKENED",
            Self::ScopeReduced => "SCOPE_REDUCED",
            Self::None => "NONE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFamilyOutcome {
    pub family_id: String,
    pub report_count: usize,
    pub max_retry: u32,
    pub converged: bool,
    pub convergence_quality: ConvergenceQuality,
    pub iterations_to_convergence: Option<u32>,
    /// The family's first report is COMPLETED at retry 0.
    pub first_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("family `{0}` did not converge but is annotated with a convergence quality")]
    AnnotatedUnconverged(String),
    #[error("family `{0}` converged but is annotated NONE")]
    NoneForConverged(String),
    #[error("annotation names unknown family `{0}`")]
    UnknownFamily(String),
    #[error("metric undefined for an empty set of families")]
    Empty,
    #[error("report `{0}` has no phase label; label phases first (e.g. with --phase-boundaries)")]
    MissingPhaseLabel(String),
    #[error("report `{report_id}`: {error}")]
    Script { report_id: String, error: ParseError },
}

/// One outcome per family, in order of first appearance.
///
/// A family converged iff its last report is COMPLETED. Converged families
/// without an annotation are CLEAN.
pub fn derive_family_outcomes(
    corpus: &Corpus,
    annotations: &BTreeMap<String, ConvergenceQuality>,
) -> Result<Vec<ScenarioFamilyOutcome>, MetricsError> {
    let families = corpus.family_ids();
    if let Some(unknown) = annotations.keys().find(|k| !families.contains(&k.as_str())) {
        return Err(MetricsError::UnknownFamily(unknown.clone()));
    }
    families
        .into_iter()
        .map(|family_id| {
            let reports: Vec<_> = corpus.family_reports(family_id).collect();
            let last = reports.last().expect("family has reports");
            let first = reports[0];
            let converged = last.status == ReportStatus::Completed;
            let annotation = annotations.get(family_id).copied();
            let convergence_quality = match (converged, annotation) {
                (false, None | Some(ConvergenceQuality::None)) => ConvergenceQuality::None,
                (false, Some(_)) => {
                    return Err(MetricsError::AnnotatedUnconverged(family_id.into()))
                }
                (true, Some(ConvergenceQuality::None)) => {
                    return Err(MetricsError::NoneForConverged(family_id.into()))
                }
                (true, q) => q.unwrap_or(ConvergenceQuality::Clean),
            };
            Ok(ScenarioFamilyOutcome {
                family_id: family_id.into(),
                report_count: reports.len(),
                max_retry: reports.iter().map(|r| r.retry_index).max().unwrap_or(0),
                converged,
                convergence_quality,
                iterations_to_convergence: converged
                    .then(|| {
                        reports
                            .iter()
                            .find(|r| r.status == ReportStatus::Completed)
                            .map(|r| r.retry_index)
                    })
                    .flatten(),
                first_pass: first.status == ReportStatus::Completed && first.retry_index == 0,
            })
        })
        .collect()
}

/// Annotations derived from script pairs carried by reports of converged
/// families: a removed case means SCOPE_REDUCED, otherwise any weakened
/// assertion means ASSERTION_WEAKENED.
pub fn auto_annotations(
    corpus: &Corpus,
    table: &MatcherTable,
) -> Result<BTreeMap<String, ConvergenceQuality>, MetricsError> {
    let mut out = BTreeMap::new();
    for family_id in corpus.family_ids() {
        let converged = corpus
            .family_reports(family_id)
            .last()
            .is_some_and(|r| r.status == ReportStatus::Completed);
        if !converged {
            continue;
        }
        let mut quality = ConvergenceQuality::Clean;
        for report in corpus.family_reports(family_id) {
            let (Some(before), Some(after)) = (&report.script_before, &report.script_after) else {
                continue;
            };
            let parse = |src: &str| {
                parse_test_script(src, table).map_err(|error| MetricsError::Script {
                    report_id: report.report_id.clone(),
                    error,
                })
            };
            let diff = diff_suites(table, &parse(before)?, &parse(after)?);
            if diff.scope_reduction() {
                quality = ConvergenceQuality::ScopeReduced;
            } else if diff.has_weakening() && quality == ConvergenceQuality::Clean {
                quality = ConvergenceQuality::AssertionWeakened;
            }
        }
        if quality != ConvergenceQuality::Clean {
            out.insert(family_id.into(), quality);
        }
    }
    Ok(out)
}

fn percent(part: usize, whole: usize) -> Ratio<u64> {
    Ratio::new(part as u64 * 100, whole as u64)
}

/// Converged families as a percentage; `strict` counts only CLEAN convergence.
pub fn repair_convergence(
    outcomes: &[ScenarioFamilyOutcome],
    strict: bool,
) -> Result<Ratio<u64>, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let converged = outcomes
        .iter()
        .filter(|o| o.converged && (!strict || o.convergence_quality == ConvergenceQuality::Clean))
        .count();
    Ok(percent(converged, outcomes.len()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationStats {
    /// Over converged families only; absent when none converged.
    pub mean: Option<Ratio<u64>>,
    pub median: Option<Ratio<u64>>,
    pub max_converged: Option<u32>,
    pub max_unconverged: Option<u32>,
    pub first_pass_rate: Ratio<u64>,
}

pub fn iteration_stats(outcomes: &[ScenarioFamilyOutcome]) -> Result<IterationStats, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut iterations: Vec<u64> = outcomes
        .iter()
        .filter_map(|o| o.iterations_to_convergence.map(u64::from))
        .collect();
    iterations.sort_unstable();
    let n = iterations.len() as u64;
    let mean = (n > 0).then(|| Ratio::new(iterations.iter().sum(), n));
    let median = (n > 0).then(|| {
        let mid = iterations.len() / 2;
        if n % 2 == 1 {
            Ratio::from_integer(iterations[mid])
        } else {
            Ratio::new(iterations[mid - 1] + iterations[mid], 2)
        }
    });
    Ok(IterationStats {
        mean,
        median,
        max_converged: outcomes.iter().filter(|o| o.converged).map(|o| o.max_retry).max(),
        max_unconverged: outcomes.iter().filter(|o| !o.converged).map(|o| o.max_retry).max(),
        first_pass_rate: percent(
            outcomes.iter().filter(|o| o.first_pass).count(),
            outcomes.len(),
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub phase_label: String,
    pub report_count: usize,
    /// Families whose final report falls in this phase.
    pub family_count: usize,
    pub converged_count: usize,
    pub pipeline_failure_count: usize,
}

/// One row per phase label, in corpus order. A family is counted in the
/// phase that holds its final report.
pub fn phase_table(corpus: &Corpus) -> Result<Vec<PhaseRow>, MetricsError> {
    let mut rows: Vec<PhaseRow> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut last_of_family: BTreeMap<&str, (usize, ReportStatus)> = BTreeMap::new();
    for report in corpus.reports() {
        let label = report
            .phase_label
            .as_deref()
            .ok_or_else(|| MetricsError::MissingPhaseLabel(report.report_id.clone()))?;
        let row = *index.entry(label).or_insert_with(|| {
            rows.push(PhaseRow {
                phase_label: label.into(),
                report_count: 0,
                family_count: 0,
                converged_count: 0,
                pipeline_failure_count: 0,
            });
            rows.len() - 1
        });
        rows[row].report_count += 1;
        if report.status == ReportStatus::NoArtifact {
            rows[row].pipeline_failure_count += 1;
        }
        last_of_family.insert(report.family_id.as_str(), (row, report.status));
    }
    for (row, status) in last_of_family.into_values() {
        rows[row].family_count += 1;
        if status == ReportStatus::Completed {
            rows[row].converged_count += 1;
        }
    }
    Ok(rows)
}

/// Passing tests in each converged family's final COMPLETED report.
pub fn final_completed_tests(corpus: &Corpus) -> usize {
    corpus
        .family_ids()
        .into_iter()
        .filter_map(|f| corpus.family_reports(f).last())
        .filter(|r| r.status == ReportStatus::Completed)
        .map(|r| r.passed())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsSummary {
    pub rc_naive: Ratio<u64>,
    pub rc_strict: Ratio<u64>,
    pub first_pass_rate: Ratio<u64>,
    pub mean_iterations: Option<Ratio<u64>>,
    pub median_iterations: Option<Ratio<u64>>,
    pub max_retry_converged: Option<u32>,
    pub max_retry_unconverged: Option<u32>,
    pub final_completed_tests: usize,
    pub signature_histogram: SignatureCounts,
    pub cooccurrence: Ratio<u64>,
    /// Empty when the corpus carries no phase labels.
    pub phase_rows: Vec<PhaseRow>,
}

pub fn summarize(
    corpus: &Corpus,
    outcomes: &[ScenarioFamilyOutcome],
    classifier: &Classifier,
    denominator: CooccurrenceDenominator,
) -> Result<MetricsSummary, MetricsError> {
    let stats = iteration_stats(outcomes)?;
    let labelled = corpus.reports().iter().any(|r| r.phase_label.is_some());
    Ok(MetricsSummary {
        rc_naive: repair_convergence(outcomes, false)?,
        rc_strict: repair_convergence(outcomes, true)?,
        first_pass_rate: stats.first_pass_rate,
        mean_iterations: stats.mean,
        median_iterations: stats.median,
        max_retry_converged: stats.max_converged,
        max_retry_unconverged: stats.max_unconverged,
        final_completed_tests: final_completed_tests(corpus),
        signature_histogram: classifier.signature_histogram(corpus),
        cooccurrence: classifier.mean_cooccurrence(corpus, denominator),
        phase_rows: if labelled { phase_table(corpus)? } else { Vec::new() },
    })
}
