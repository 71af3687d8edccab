//! Execution reports and corpora.
//!
//! An [`ExecutionReport`] describes one autonomous workflow run: which scenario
//! family it belongs to, how deep into the repair loop it was, the per-case
//! verdicts and the raw error text collected along the way. A [`Corpus`] is an
//! ordered, validated collection of reports and is what every analysis consumes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Terminal status of one workflow run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReportStatus {
    Completed,
    Failed,
    /// The pipeline never produced an executable test artifact.
    NoArtifact,
}

impl ReportStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Completed => "COMPLETED",
            Self::Failed => "FAILED",
            Self::NoArtifact => "NO_ARTIFACT",
        }
    }
}

impl fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Pipeline stage an error entry was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Explorer,
    Planner,
    Coder,
    Executor,
    SelfCorrection,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Explorer => "EXPLORER",
            Self::Planner => "PLANNER",
            Self::Coder => "CODER",
            Self::Executor => "EXECUTOR",
            Self::SelfCorrection => "SELF_CORRECTION",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCaseResult {
    pub case_name: String,
    pub verdict: Verdict,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub raw_text: String,
    pub stage: Stage,
}

impl ErrorEntry {
    pub fn new(raw_text: impl Into<String>, stage: Stage) -> Self {
        Self {
            raw_text: raw_text.into(),
            stage,
        }
    }
}

/// One autonomous workflow run.
///
/// Field order here is the serialization order of the JSON-lines format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub report_id: String,
    pub sequence_index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_label: Option<String>,
    pub family_id: String,
    pub retry_index: u32,
    pub status: ReportStatus,
    pub test_results: Vec<TestCaseResult>,
    pub error_entries: Vec<ErrorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_before: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_after: Option<String>,
    pub timestamp: String,
}

/// A broken report or corpus invariant.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("report `{report_id}`: NO_ARTIFACT reports must have no test results")]
    NoArtifactWithResults { report_id: String },
    #[error("report `{report_id}`: COMPLETED reports need at least one test result")]
    CompletedWithoutResults { report_id: String },
    #[error("report `{report_id}`: COMPLETED report has failing case `{case_name}`")]
    CompletedWithFailure { report_id: String, case_name: String },
    #[error("report `{report_id}`: passing case `{case_name}` carries error text")]
    PassWithErrorText { report_id: String, case_name: String },
    #[error("report `{report_id}`: error entry {index} has empty raw_text")]
    EmptyErrorText { report_id: String, index: usize },
    #[error("report at sequence {sequence_index}: empty {field}")]
    EmptyField {
        sequence_index: u64,
        field: &'static str,
    },
    #[error("duplicate report_id `{report_id}` at corpus positions {first} and {second}")]
    DuplicateReportId {
        report_id: String,
        first: usize,
        second: usize,
    },
    #[error(
        "family `{family_id}`: retry_index drops from {previous} to {current} at report `{report_id}`"
    )]
    RetryIndexDecreased {
        family_id: String,
        report_id: String,
        previous: u32,
        current: u32,
    },
}

impl ExecutionReport {
    /// Checks the per-report invariants.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.report_id.trim().is_empty() {
            return Err(ValidationError::EmptyField {
                sequence_index: self.sequence_index,
                field: "report_id",
            });
        }
        if self.family_id.trim().is_empty() {
            return Err(ValidationError::EmptyField {
                sequence_index: self.sequence_index,
                field: "family_id",
            });
        }
        let id = || self.report_id.clone();
        match self.status {
            ReportStatus::NoArtifact if !self.test_results.is_empty() => {
                return Err(ValidationError::NoArtifactWithResults { report_id: id() });
            }
            ReportStatus::Completed if self.test_results.is_empty() => {
                return Err(ValidationError::CompletedWithoutResults { report_id: id() });
            }
            ReportStatus::Completed => {
                if let Some(case) = self.test_results.iter().find(|c| c.verdict == Verdict::Fail) {
                    return Err(ValidationError::CompletedWithFailure {
                        report_id: id(),
                        case_name: case.case_name.clone(),
                    });
                }
            }
            _ => {}
        }
        for case in &self.test_results {
            if case.verdict == Verdict::Pass && case.error_text.is_some() {
                return Err(ValidationError::PassWithErrorText {
                    report_id: id(),
                    case_name: case.case_name.clone(),
                });
            }
        }
        if let Some(index) = self.error_entries.iter().position(|e| e.raw_text.is_empty()) {
            return Err(ValidationError::EmptyErrorText {
                report_id: id(),
                index,
            });
        }
        Ok(())
    }

    pub fn passed(&self) -> usize {
        self.test_results
            .iter()
            .filter(|c| c.verdict == Verdict::Pass)
            .count()
    }

    pub fn failed(&self) -> usize {
        self.test_results.len() - self.passed()
    }
}

/// An ordered, validated collection of reports.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    reports: Vec<ExecutionReport>,
}

impl Corpus {
    /// Validates every report, orders them by `sequence_index` (stable) and
    /// checks corpus-wide invariants.
    pub fn new(mut reports: Vec<ExecutionReport>) -> Result<Self, ValidationError> {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (position, report) in reports.iter().enumerate() {
            report.validate()?;
            if let Some(first) = seen.insert(report.report_id.as_str(), position) {
                return Err(ValidationError::DuplicateReportId {
                    report_id: report.report_id.clone(),
                    first,
                    second: position,
                });
            }
        }
        reports.sort_by_key(|r| r.sequence_index);

        let mut last_retry: BTreeMap<&str, u32> = BTreeMap::new();
        for report in &reports {
            if let Some(previous) = last_retry.insert(report.family_id.as_str(), report.retry_index) {
                if report.retry_index < previous {
                    return Err(ValidationError::RetryIndexDecreased {
                        family_id: report.family_id.clone(),
                        report_id: report.report_id.clone(),
                        previous,
                        current: report.retry_index,
                    });
                }
            }
        }
        Ok(Self { reports })
    }

    pub fn reports(&self) -> &[ExecutionReport] {
        &self.reports
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn into_reports(self) -> Vec<ExecutionReport> {
        self.reports
    }

    /// Family ids in order of first appearance.
    pub fn family_ids(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.reports
            .iter()
            .map(|r| r.family_id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }

    /// Reports of one family, in corpus order.
    pub fn family_reports<'a>(
        &'a self,
        family_id: &'a str,
    ) -> impl Iterator<Item = &'a ExecutionReport> + 'a {
        self.reports.iter().filter(move |r| r.family_id == family_id)
    }

    pub fn totals(&self) -> CorpusTotals {
        let mut totals = CorpusTotals {
            reports: self.reports.len(),
            families: self.family_ids().len(),
            ..CorpusTotals::default()
        };
        for report in &self.reports {
            match report.status {
                ReportStatus::Completed => totals.completed += 1,
                ReportStatus::Failed => totals.failed_reports += 1,
                ReportStatus::NoArtifact => totals.no_artifact += 1,
            }
            totals.test_cases += report.test_results.len();
            totals.passed += report.passed();
            totals.failed += report.failed();
            totals.max_retry = totals.max_retry.max(report.retry_index);
        }
        totals
    }

    /// Labels every report with a phase from exclusive report-position boundaries.
    ///
    /// `boundaries` lists where each phase ends, in corpus positions; reports past the
    /// last boundary go into one final phase. Labels are `Phase 1`, `Phase 2`, ...
    pub fn label_phases(&mut self, boundaries: &[usize]) {
        for (position, report) in self.reports.iter_mut().enumerate() {
            let phase = boundaries.iter().take_while(|end| position >= **end).count() + 1;
            report.phase_label = Some(alloc::format!("Phase {phase}"));
        }
    }
}

/// Corpus-wide aggregates (the corpus overview table).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusTotals {
    pub reports: usize,
    pub completed: usize,
    pub failed_reports: usize,
    pub no_artifact: usize,
    pub test_cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub families: usize,
    pub max_retry: u32,
}

impl CorpusTotals {
    pub fn executable(&self) -> usize {
        self.reports - self.no_artifact
    }
}
