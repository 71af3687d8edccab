//! Random inputs and brute-force oracles shared by the integration tests and
//! the acceptance harness.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, Output};

use tether_core::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use tether_core::metrics::{derive_family_outcomes, summarize, ConvergenceQuality};
use tether_core::report::{Corpus, ErrorEntry, ExecutionReport, ReportStatus, Stage, TestCaseResult, Verdict};
use tether_core::retry::{AttemptOutcome, EnvironmentHandling, EscalationTrigger, RetryState, RetryStatus};
use tether_core::selector::{batch_verify, verify_selector, DomSnapshot, Element, SelectorExpr};
use tether_core::signature::{message_catalog, Classifier, CooccurrenceDenominator, FailureSignature};
use tether_core::sim::report_timestamp;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn asset(rel: &str) -> PathBuf {
    crate_dir().join(rel)
}

pub fn tether(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tether")).args(args).output().expect("binary runs")
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

// ---------------------------------------------------------------- corpora

/// A random valid corpus plus the ground truth it was built from.
pub struct RandomCorpus {
    pub corpus: Corpus,
    pub annotations: BTreeMap<String, ConvergenceQuality>,
    /// Signatures planted in each report, keyed by report id.
    pub planted: BTreeMap<String, Vec<FailureSignature>>,
}

const FAMILIES: [&str; 4] = ["fam-a", "fam-b", "fam-c", "fam-d"];
const STAGES: [Stage; 5] = [Stage::Explorer, Stage::Planner, Stage::Coder, Stage::Executor, Stage::SelfCorrection];

/// Up to `max_reports` reports over up to four families, with planted
/// signatures taken from the message catalog, random phase labels and random
/// annotations on converged families. Reports are handed to the corpus in
/// shuffled order.
pub fn random_corpus(rng: &mut impl Rng, max_reports: usize) -> RandomCorpus {
    let n = rng.gen_range(1..=max_reports);
    let phases = rng.gen_range(1..=3usize);
    let mut cuts: Vec<usize> = (0..phases - 1).map(|_| rng.gen_range(0..=n)).collect();
    cuts.sort_unstable();
    let mut retry: BTreeMap<&str, u32> = BTreeMap::new();
    let mut planted = BTreeMap::new();
    let mut reports = Vec::new();
    for i in 0..n {
        let family = FAMILIES[rng.gen_range(0..FAMILIES.len())];
        let r = retry.entry(family).or_insert(0);
        *r += rng.gen_range(0..=2u32).saturating_sub(1);
        let status = [ReportStatus::Completed, ReportStatus::Failed, ReportStatus::NoArtifact][rng.gen_range(0..3)];
        let cases = match status {
            ReportStatus::NoArtifact => 0,
            ReportStatus::Completed => rng.gen_range(1..=3),
            ReportStatus::Failed => rng.gen_range(0..=3),
        };
        let test_results = (0..cases)
            .map(|c| {
                let fail = status == ReportStatus::Failed && rng.gen_bool(0.6);
                TestCaseResult {
                    case_name: format!("case {c}"),
                    verdict: if fail { Verdict::Fail } else { Verdict::Pass },
                    duration_ms: rng.gen_range(1..5000),
                    error_text: fail.then(|| "assertion failed".to_string()),
                }
            })
            .collect();
        let mut sigs: Vec<FailureSignature> =
            FailureSignature::ALL.into_iter().filter(|_| rng.gen_bool(0.25)).collect();
        let mut error_entries = Vec::new();
        for &sig in &sigs {
            for _ in 0..rng.gen_range(1..=2) {
                let catalog = message_catalog(sig);
                error_entries.push(ErrorEntry::new(
                    catalog[rng.gen_range(0..catalog.len())],
                    STAGES[rng.gen_range(0..STAGES.len())],
                ));
            }
        }
        error_entries.shuffle(rng);
        if status == ReportStatus::NoArtifact && !sigs.contains(&FailureSignature::NonExecutableOutput) {
            sigs.push(FailureSignature::NonExecutableOutput);
        }
        let report_id = format!("r{i:02}");
        planted.insert(report_id.clone(), sigs);
        let phase = cuts.iter().filter(|&&c| c <= i).count() + 1;
        reports.push(ExecutionReport {
            report_id,
            sequence_index: i as u64 * 3 + 1,
            phase_label: Some(format!("Phase {phase}")),
            family_id: family.to_string(),
            retry_index: *r,
            status,
            test_results,
            error_entries,
            script_before: None,
            script_after: None,
            timestamp: report_timestamp(i as u64),
        });
    }
    let mut annotations = BTreeMap::new();
    for family in FAMILIES {
        let last = reports.iter().rev().find(|r| r.family_id == family);
        if last.is_some_and(|r| r.status == ReportStatus::Completed) {
            let choice = [None, Some(ConvergenceQuality::Clean), Some(ConvergenceQuality::AssertionWeakened), Some(ConvergenceQuality::ScopeReduced)];
            if let Some(q) = choice[rng.gen_range(0..choice.len())] {
                annotations.insert(family.to_string(), q);
            }
        }
    }
    reports.shuffle(rng);
    RandomCorpus { corpus: Corpus::new(reports).expect("generated corpus is valid"), annotations, planted }
}

fn pct(part: usize, whole: usize) -> Ratio<u64> {
    Ratio::new(100 * part as u64, whole as u64)
}

/// Compares the metrics engine with a direct recomputation from the raw
/// reports; returns a description of the first disagreement.
pub fn check_metrics_oracle(rc: &RandomCorpus, classifier: &Classifier) -> Result<(), String> {
    let mut reports: Vec<&ExecutionReport> = rc.corpus.reports().iter().collect();
    reports.sort_by_key(|r| r.sequence_index);

    let mut families: Vec<&str> = Vec::new();
    for r in &reports {
        if !families.contains(&r.family_id.as_str()) {
            families.push(&r.family_id);
        }
    }
    let of = |f: &str| -> Vec<&ExecutionReport> { reports.iter().copied().filter(|r| r.family_id == f).collect() };
    let converged: Vec<&str> = families
        .iter()
        .copied()
        .filter(|f| of(f).last().unwrap().status == ReportStatus::Completed)
        .collect();
    let clean = converged
        .iter()
        .filter(|f| matches!(rc.annotations.get(**f), None | Some(ConvergenceQuality::Clean)))
        .count();
    let first_pass = families
        .iter()
        .filter(|f| {
            let first = of(f)[0];
            first.status == ReportStatus::Completed && first.retry_index == 0
        })
        .count();
    let mut iterations: Vec<u64> = converged
        .iter()
        .map(|f| u64::from(of(f).iter().find(|r| r.status == ReportStatus::Completed).unwrap().retry_index))
        .collect();
    iterations.sort_unstable();
    let mean = (!iterations.is_empty()).then(|| Ratio::new(iterations.iter().sum::<u64>(), iterations.len() as u64));
    let median = (!iterations.is_empty()).then(|| {
        let k = iterations.len();
        if k % 2 == 1 {
            Ratio::from_integer(iterations[k / 2])
        } else {
            Ratio::new(iterations[k / 2 - 1] + iterations[k / 2], 2)
        }
    });
    let max_retry = |fs: &mut dyn Iterator<Item = &str>| fs.flat_map(|f| of(f)).map(|r| r.retry_index).max();
    let max_conv = max_retry(&mut converged.iter().copied());
    let max_unconv = max_retry(&mut families.iter().copied().filter(|f| !converged.contains(f)));
    let final_tests: usize = converged
        .iter()
        .map(|f| of(f).last().unwrap().test_results.iter().filter(|c| c.verdict == Verdict::Pass).count())
        .sum();

    let mut histogram = [0u64; 8];
    let mut appearances = 0u64;
    let mut bearing = 0u64;
    for r in &reports {
        let sigs = &rc.planted[&r.report_id];
        for s in sigs {
            histogram[s.index()] += 1;
        }
        appearances += sigs.len() as u64;
        bearing += u64::from(!sigs.is_empty());
    }

    let mut phase_labels: Vec<&str> = Vec::new();
    for r in &reports {
        let label = r.phase_label.as_deref().unwrap();
        if !phase_labels.contains(&label) {
            phase_labels.push(label);
        }
    }
    let phase_rows: Vec<(String, usize, usize, usize, usize)> = phase_labels
        .iter()
        .map(|&p| {
            let in_phase: Vec<_> = reports.iter().filter(|r| r.phase_label.as_deref() == Some(p)).collect();
            let ending: Vec<&str> = families
                .iter()
                .copied()
                .filter(|f| of(f).last().unwrap().phase_label.as_deref() == Some(p))
                .collect();
            (
                p.to_string(),
                in_phase.len(),
                ending.len(),
                ending.iter().filter(|f| converged.contains(f)).count(),
                in_phase.iter().filter(|r| r.status == ReportStatus::NoArtifact).count(),
            )
        })
        .collect();

    let outcomes = derive_family_outcomes(&rc.corpus, &rc.annotations).map_err(|e| e.to_string())?;
    let s = summarize(&rc.corpus, &outcomes, classifier, CooccurrenceDenominator::SignatureBearing)
        .map_err(|e| e.to_string())?;
    let all = classifier.mean_cooccurrence(&rc.corpus, CooccurrenceDenominator::AllReports);

    let f = families.len();
    let expect = |what: &str, ok: bool| if ok { Ok(()) } else { Err(format!("{what} disagrees")) };
    expect("family order", outcomes.iter().map(|o| o.family_id.as_str()).eq(families.iter().copied()))?;
    expect("rc_naive", s.rc_naive == pct(converged.len(), f))?;
    expect("rc_strict", s.rc_strict == pct(clean, f))?;
    expect("first-pass rate", s.first_pass_rate == pct(first_pass, f))?;
    expect("mean iterations", s.mean_iterations == mean)?;
    expect("median iterations", s.median_iterations == median)?;
    expect("max retry converged", s.max_retry_converged == max_conv)?;
    expect("max retry unconverged", s.max_retry_unconverged == max_unconv)?;
    expect("final completed tests", s.final_completed_tests == final_tests)?;
    expect("signature histogram", s.signature_histogram.as_array() == histogram)?;
    let cooc = if bearing == 0 { Ratio::from_integer(0) } else { Ratio::new(appearances, bearing) };
    expect("co-occurrence (signature-bearing)", s.cooccurrence == cooc)?;
    expect("co-occurrence (all reports)", all == Ratio::new(appearances, reports.len() as u64))?;
    let rows: Vec<_> = s
        .phase_rows
        .iter()
        .map(|r| (r.phase_label.clone(), r.report_count, r.family_count, r.converged_count, r.pipeline_failure_count))
        .collect();
    expect("phase table", rows == phase_rows)?;
    expect("phase report sum", rows.iter().map(|r| r.1).sum::<usize>() == reports.len())?;
    Ok(())
}

// ---------------------------------------------------------------- selectors

const TAGS: [&str; 8] = ["div", "button", "a", "input", "li", "h2", "span", "nav"];
const WORDS: [&str; 5] = ["Save", "Cancel", "Next page", "save draft", "Refresh"];
const TEST_IDS: [&str; 4] = ["row-1", "row-2", "refresh", "menu"];
const ROLES: [&str; 4] = ["button", "link", "textbox", "dialog"];

fn random_element(rng: &mut impl Rng, depth: u32) -> Element {
    let mut el = Element { tag: TAGS[rng.gen_range(0..TAGS.len())].to_string(), ..Element::default() };
    if rng.gen_bool(0.3) {
        el.attributes.insert("id".into(), format!("e{}", rng.gen_range(0..4)));
    }
    if rng.gen_bool(0.4) {
        el.attributes.insert("data-test".into(), TEST_IDS[rng.gen_range(0..TEST_IDS.len())].into());
    }
    if rng.gen_bool(0.15) {
        el.attributes.insert("role".into(), ROLES[rng.gen_range(0..ROLES.len())].into());
    }
    if rng.gen_bool(0.2) {
        el.attributes.insert("aria-label".into(), WORDS[rng.gen_range(0..WORDS.len())].into());
    }
    if rng.gen_bool(0.6) {
        el.text = WORDS[rng.gen_range(0..WORDS.len())].into();
    }
    el.visible = rng.gen_bool(0.8);
    if depth > 0 {
        el.children = (0..rng.gen_range(0..=3)).map(|_| random_element(rng, depth - 1)).collect();
    }
    el
}

pub fn random_snapshot(rng: &mut impl Rng) -> DomSnapshot {
    DomSnapshot { root: random_element(rng, 4) }
}

pub fn random_selector(rng: &mut impl Rng) -> SelectorExpr {
    match rng.gen_range(0..5) {
        0 => SelectorExpr::ById { id: format!("e{}", rng.gen_range(0..5)) },
        1 => SelectorExpr::ByTestAttr { value: TEST_IDS[rng.gen_range(0..TEST_IDS.len())].into() },
        2 => SelectorExpr::ByRole {
            role: ROLES[rng.gen_range(0..ROLES.len())].into(),
            name: rng.gen_bool(0.5).then(|| WORDS[rng.gen_range(0..WORDS.len())].into()),
        },
        3 => SelectorExpr::ByText { text: WORDS[rng.gen_range(0..WORDS.len())].into(), exact: true },
        _ => SelectorExpr::ByText { text: "save".into(), exact: false },
    }
}

pub fn check_batch_equivalence(rng: &mut impl Rng) -> Result<(), String> {
    let dom = random_snapshot(rng);
    let exprs: Vec<SelectorExpr> = (0..rng.gen_range(0..12)).map(|_| random_selector(rng)).collect();
    let batch = batch_verify(&exprs, &dom);
    let mapped: Vec<_> = exprs.iter().map(|e| verify_selector(e, &dom)).collect();
    if batch == mapped {
        Ok(())
    } else {
        Err(format!("batch_verify differs on {} selectors over {} elements", exprs.len(), dom.element_count()))
    }
}

// ---------------------------------------------------------------- retry

/// Expected final status and trigger of an outcome sequence, written
/// directly from the policy rules.
fn retry_oracle(
    outcomes: &[AttemptOutcome],
    budget: u32,
    window: u32,
    env: EnvironmentHandling,
) -> (usize, RetryStatus, Option<EscalationTrigger>) {
    let mut streak = 0;
    for (i, &o) in outcomes.iter().enumerate() {
        let attempts = i as u32 + 1;
        streak = if o == AttemptOutcome::NoArtifact { streak + 1 } else { 0 };
        let trigger = if o == AttemptOutcome::Pass {
            return (attempts as usize, RetryStatus::Converged, None);
        } else if o == AttemptOutcome::FailEnvironment && env == EnvironmentHandling::Escalate {
            Some(EscalationTrigger::Environment)
        } else if streak >= window {
            Some(EscalationTrigger::Stagnation)
        } else if attempts >= budget {
            Some(EscalationTrigger::BudgetExhausted)
        } else {
            None
        };
        if trigger.is_some() {
            return (attempts as usize, RetryStatus::Escalated, trigger);
        }
    }
    (outcomes.len(), RetryStatus::Active, None)
}

fn sequences(len: usize) -> impl Iterator<Item = Vec<AttemptOutcome>> {
    (0..4usize.pow(len as u32)).map(move |mut code| {
        (0..len)
            .map(|_| {
                let o = AttemptOutcome::ALL[code % 4];
                code /= 4;
                o
            })
            .collect()
    })
}

/// Every outcome sequence of length `budget` for every window and
/// environment handling: the state terminates within the budget, agrees
/// with the oracle, rejects further attempts and yields exactly one
/// escalation record when escalated. Returns the number of sequences checked.
pub fn check_retry_exhaustive(max_budget: u32) -> Result<usize, String> {
    let mut checked = 0;
    for budget in 1..=max_budget {
        for window in 1..=max_budget {
            for env in [EnvironmentHandling::Escalate, EnvironmentHandling::ConsumeBudget] {
                for seq in sequences(budget as usize) {
                    checked += 1;
                    let (stop, status, trigger) = retry_oracle(&seq, budget, window, env);
                    let mut state = RetryState::new("f", budget, window).unwrap().with_environment_handling(env);
                    let ctx = || format!("budget {budget}, window {window}, {env:?}, {seq:?}");
                    for &o in &seq[..stop] {
                        state.record_attempt(o).map_err(|e| format!("{}: {e}", ctx()))?;
                    }
                    if state.status() == RetryStatus::Active {
                        return Err(format!("{}: still active after {} attempts", ctx(), state.attempts()));
                    }
                    if (state.status(), state.trigger(), state.attempts() as usize) != (status, trigger, stop) {
                        return Err(format!("{}: got {:?}/{:?}", ctx(), state.status(), state.trigger()));
                    }
                    if state.record_attempt(AttemptOutcome::Pass).is_ok() {
                        return Err(format!("{}: accepted an attempt after terminating", ctx()));
                    }
                    let first = state.escalation_record();
                    match status {
                        RetryStatus::Escalated => {
                            let record = first.map_err(|e| format!("{}: {e}", ctx()))?;
                            if record.attempts > budget || state.escalation_record().is_ok() {
                                return Err(format!("{}: bad escalation record", ctx()));
                            }
                        }
                        _ if first.is_ok() => return Err(format!("{}: record without escalation", ctx())),
                        _ => {}
                    }
                    if status == RetryStatus::Converged && state.iterations_to_convergence() != Some(stop as u32 - 1) {
                        return Err(format!("{}: wrong iterations to convergence", ctx()));
                    }
                }
            }
        }
    }
    Ok(checked)
}
