//! Builder for the reference corpus shipped in `fixtures/reference_corpus.jsonl`.
//!
//! The corpus is constructed, not recorded: 300 reports over ten scenario
//! families, laid out so that every aggregate the analyzer prints hits a fixed
//! reference figure (overview, convergence, signature histogram, phase table).
//! Individual reports are plausible but carry no meaning beyond those totals.
//!
//! Layout per family (reports, first COMPLETED retry, COMPLETED reports):
//!
//! | family                | reports | iteration | completed | phase(s)   |
//! |-----------------------|---------|-----------|-----------|------------|
//! | accessibility         | 6       | 0         | 6         | 1          |
//! | details-refresh-early | 6       | —         | 0         | 1          |
//! | status-transitions    | 11      | 1         | 1         | 1, 2, 3, 4 |
//! | basic-interaction     | 11      | 1         | 3         | 2          |
//! | advanced-features     | 34      | 5         | 8         | 2          |
//! | tab-refresh           | 28      | 4         | 7         | 2          |
//! | detail-refresh        | 40      | 6         | 9         | 2          |
//! | selection-navigation  | 45      | 7         | 8         | 3          |
//! | tab-errors            | 6       | —         | 0         | 3          |
//! | code-generation       | 113     | —         | 0         | 4          |
//!
//! `advanced-features` converges through a weakened assertion and
//! `selection-navigation` through a deleted case. The script pair sits on the
//! last FAILED report one repair iteration before convergence (retry 4 and
//! retry 6 respectively), where the workaround was applied.

use tether_core::report::{Corpus, ErrorEntry, ExecutionReport, ReportStatus, Stage, TestCaseResult, Verdict};
use tether_core::signature::{message_catalog, FailureSignature, REPAIR_STATE_CORRUPTION};
use tether_core::sim::script::{case_names, workaround_scripts};
use tether_core::sim::{report_timestamp, WorkaroundKind};

use crate::jsonl::{write_corpus, CorpusHeader};

pub const GENERATOR: &str = "tether build-fixture";

/// Exclusive end positions of phases 1–3; phase 4 runs to the end.
pub const PHASE_BOUNDARIES: [usize; 3] = [18, 132, 186];

struct FamilyPlan {
    id: &'static str,
    /// Retry index of the first COMPLETED report; `None` if never converged.
    iteration: Option<u32>,
    reports: usize,
    completed: usize,
    /// Retry index of the last report of an unconverged family.
    final_retry: u32,
    workaround: Option<WorkaroundKind>,
}

const FAMILIES: [FamilyPlan; 10] = {
    const fn plan(id: &'static str, iteration: Option<u32>, reports: usize, completed: usize) -> FamilyPlan {
        FamilyPlan { id, iteration, reports, completed, final_retry: 0, workaround: None }
    }
    [
        plan("accessibility", Some(0), 6, 6),
        plan("details-refresh-early", None, 6, 0),
        plan("status-transitions", Some(1), 11, 1),
        plan("basic-interaction", Some(1), 11, 3),
        FamilyPlan { workaround: Some(WorkaroundKind::WeakenAssertion), ..plan("advanced-features", Some(5), 34, 8) },
        plan("tab-refresh", Some(4), 28, 7),
        plan("detail-refresh", Some(6), 40, 9),
        FamilyPlan { workaround: Some(WorkaroundKind::DeleteCase), ..plan("selection-navigation", Some(7), 45, 8) },
        plan("tab-errors", None, 6, 0),
        FamilyPlan { final_retry: 16, ..plan("code-generation", None, 113, 0) },
    ]
};

/// Per phase: (family, reports from that family), in tie-break order.
const PHASES: [&[(&str, usize)]; 4] = [
    &[("accessibility", 6), ("details-refresh-early", 6), ("status-transitions", 6)],
    &[
        ("basic-interaction", 11),
        ("advanced-features", 34),
        ("tab-refresh", 28),
        ("detail-refresh", 40),
        ("status-transitions", 1),
    ],
    &[("selection-navigation", 45), ("tab-errors", 6), ("status-transitions", 3)],
    &[("status-transitions", 1), ("code-generation", 113)],
];

/// Suite size of COMPLETED reports; a deleted case leaves one.
const SUITE_SIZE: u32 = 2;
/// FAILED reports: the first 20 run three cases, the rest four.
const SHORT_FAILED_RUNS: usize = 20;
/// FAILED reports: the first 128 have one passing case.
const FAILED_RUNS_WITH_A_PASS: usize = 128;
/// NO_ARTIFACT reports that also hit the repair-state failure.
const CORRUPTED_NO_ARTIFACT: usize = 20;

/// Signature appearances spread over executable reports, beyond the
/// NO_ARTIFACT ones (which carry NON_EXECUTABLE_OUTPUT, and for
/// [`CORRUPTED_NO_ARTIFACT`] of them METHOD_CONTRACT_MISMATCH).
const EXECUTABLE_SIGNATURES: [(FailureSignature, usize); 7] = [
    (FailureSignature::MethodContractMismatch, 112),
    (FailureSignature::NavigationEnvTimeout, 120),
    (FailureSignature::SelectorReadiness, 96),
    (FailureSignature::AssertionMismatch, 78),
    (FailureSignature::VisibilityAssertion, 72),
    (FailureSignature::ClosedContext, 48),
    (FailureSignature::HallucinatedApi, 36),
];

/// (retry_index, status) of every report of a family, in order.
fn family_sequence(plan: &FamilyPlan) -> Vec<(u32, ReportStatus)> {
    match plan.iteration {
        Some(t) => {
            let failed = plan.reports - plan.completed;
            let mut seq: Vec<_> = (0..failed)
                .map(|k| ((k as u32 * (t + 1)) / failed as u32, ReportStatus::Failed))
                .collect();
            seq.extend((0..plan.completed).map(|_| (t, ReportStatus::Completed)));
            seq
        }
        None if plan.final_retry == 0 => vec![(0, ReportStatus::Failed); plan.reports],
        None => {
            let n = plan.reports as u32;
            (0..n)
                .map(|k| ((k * (plan.final_retry + 1)) / n, ReportStatus::NoArtifact))
                .collect()
        }
    }
}

/// Round-robin by progress: the family furthest behind its share goes next.
fn interleave(phase: &[(&'static str, usize)]) -> Vec<&'static str> {
    let mut taken = vec![0usize; phase.len()];
    let total: usize = phase.iter().map(|(_, n)| n).sum();
    (0..total)
        .map(|_| {
            let next = (0..phase.len())
                .filter(|&i| taken[i] < phase[i].1)
                .min_by(|&a, &b| (taken[a] * phase[b].1).cmp(&(taken[b] * phase[a].1)))
                .expect("reports remain");
            taken[next] += 1;
            phase[next].0
        })
        .collect()
}

fn duration(position: usize, case: usize) -> u64 {
    800 + ((position * 37 + case * 101) * 7919 % 11_200) as u64
}

/// Builds the reference corpus.
pub fn reference_corpus() -> Corpus {
    let order: Vec<&str> = PHASES.iter().flat_map(|p| interleave(p)).collect();
    let mut sequences: Vec<(&str, std::vec::IntoIter<(u32, ReportStatus)>)> =
        FAMILIES.iter().map(|f| (f.id, family_sequence(f).into_iter())).collect();
    let plan_of = |id: &str| FAMILIES.iter().find(|f| f.id == id).expect("known family");

    let slots: Vec<(&str, u32, ReportStatus)> = order
        .iter()
        .map(|id| {
            let (_, seq) = sequences.iter_mut().find(|(f, _)| f == id).expect("known family");
            let (retry, status) = seq.next().expect("phase layout matches family sizes");
            (*id, retry, status)
        })
        .collect();
    debug_assert!(sequences.iter_mut().all(|(_, s)| s.next().is_none()));

    // Signatures of executable reports, by cyclic fill.
    let executable: Vec<usize> = (0..slots.len()).filter(|&i| slots[i].2 != ReportStatus::NoArtifact).collect();
    let mut signatures: Vec<Vec<FailureSignature>> = vec![Vec::new(); slots.len()];
    let mut cursor = 0;
    for (sig, count) in EXECUTABLE_SIGNATURES {
        for _ in 0..count {
            signatures[executable[cursor % executable.len()]].push(sig);
            cursor += 1;
        }
    }

    let workaround_at: Vec<usize> = FAMILIES
        .iter()
        .filter(|f| f.workaround.is_some())
        .map(|f| {
            let at = f.iteration.expect("workaround families converge") - 1;
            slots
                .iter()
                .rposition(|&(id, retry, status)| id == f.id && retry == at && status == ReportStatus::Failed)
                .expect("a failed report one iteration before convergence")
        })
        .collect();

    let mut failed_seen = 0;
    let mut no_artifact_seen = 0;
    let reports = slots
        .iter()
        .enumerate()
        .map(|(position, &(family_id, retry_index, status))| {
            let plan = plan_of(family_id);
            let mut sigs = signatures[position].clone();
            sigs.sort();
            let stage = if status == ReportStatus::Completed { Stage::SelfCorrection } else { Stage::Executor };
            let mut error_entries: Vec<ErrorEntry> = sigs
                .iter()
                .map(|&sig| {
                    let catalog = message_catalog(sig);
                    ErrorEntry::new(catalog[position % catalog.len()], stage)
                })
                .collect();

            let (script_before, script_after) = match plan.workaround {
                Some(kind) if workaround_at.contains(&position) => {
                    let (before, after) = workaround_scripts(kind, family_id, SUITE_SIZE);
                    (Some(before), Some(after))
                }
                _ => (None, None),
            };
            let test_results = match status {
                ReportStatus::NoArtifact => {
                    let k = no_artifact_seen;
                    no_artifact_seen += 1;
                    let catalog = message_catalog(FailureSignature::NonExecutableOutput);
                    error_entries.push(ErrorEntry::new(catalog[k % catalog.len()], Stage::Coder));
                    let n = plan.reports;
                    if (k + 1) * CORRUPTED_NO_ARTIFACT / n != k * CORRUPTED_NO_ARTIFACT / n {
                        error_entries.push(ErrorEntry::new(REPAIR_STATE_CORRUPTION, Stage::SelfCorrection));
                    }
                    Vec::new()
                }
                ReportStatus::Completed => {
                    let suite = match plan.workaround {
                        Some(WorkaroundKind::DeleteCase) => SUITE_SIZE - 1,
                        _ => SUITE_SIZE,
                    };
                    case_names(family_id, suite)
                        .into_iter()
                        .enumerate()
                        .map(|(case, case_name)| TestCaseResult {
                            case_name,
                            verdict: Verdict::Pass,
                            duration_ms: duration(position, case),
                            error_text: None,
                        })
                        .collect()
                }
                ReportStatus::Failed => {
                    let f = failed_seen;
                    failed_seen += 1;
                    let cases = if f < SHORT_FAILED_RUNS { 3 } else { 4 };
                    let error_text = error_entries.first().map(|e| e.raw_text.clone());
                    case_names(family_id, cases)
                        .into_iter()
                        .enumerate()
                        .map(|(case, case_name)| {
                            let pass = case == 0 && f < FAILED_RUNS_WITH_A_PASS;
                            TestCaseResult {
                                case_name,
                                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                                duration_ms: duration(position, case),
                                error_text: if pass { None } else { error_text.clone() },
                            }
                        })
                        .collect()
                }
            };
            ExecutionReport {
                report_id: format!("rpt-{position:04}"),
                sequence_index: position as u64,
                phase_label: None,
                family_id: family_id.into(),
                retry_index,
                status,
                test_results,
                error_entries,
                script_before,
                script_after,
                timestamp: report_timestamp(position as u64),
            }
        })
        .collect();
    let mut corpus = Corpus::new(reports).expect("fixture satisfies report invariants");
    corpus.label_phases(&PHASE_BOUNDARIES);
    corpus
}

/// The fixture file contents, header included.
pub fn reference_corpus_text() -> String {
    let corpus = reference_corpus();
    write_corpus(Some(&CorpusHeader::new(GENERATOR, None, None, corpus.len())), &corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_account_for_every_report() {
        for (plan, total) in FAMILIES.iter().map(|f| (f, PHASES.iter().flat_map(|p| p.iter()).filter(|(id, _)| *id == f.id).map(|(_, n)| n).sum::<usize>())) {
            assert_eq!(plan.reports, total, "{}", plan.id);
        }
        let lens: Vec<usize> = PHASES.iter().map(|p| p.iter().map(|(_, n)| n).sum()).collect();
        let ends: Vec<usize> = lens.iter().scan(0, |acc, n| { *acc += n; Some(*acc) }).collect();
        assert_eq!(&ends[..3], &PHASE_BOUNDARIES);
        assert_eq!(ends[3], 300);
    }

    #[test]
    fn interleave_prefers_the_family_furthest_behind() {
        assert_eq!(interleave(&[("a", 1), ("b", 3)]), vec!["a", "b", "b", "b"]);
        assert_eq!(interleave(&[("a", 2), ("b", 2)]), vec!["a", "b", "a", "b"]);
    }

    #[test]
    fn unconverged_collapse_reaches_the_final_retry() {
        let seq = family_sequence(&FAMILIES[9]);
        assert_eq!(seq.first().unwrap().0, 0);
        assert_eq!(seq.last().unwrap().0, 16);
        assert!(seq.windows(2).all(|w| w[0].0 <= w[1].0));
    }
}
