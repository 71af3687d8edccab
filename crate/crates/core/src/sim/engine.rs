use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::num::NonZeroU32;

use chrono::{DateTime, SecondsFormat};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ReviewerOracle, SimConfig, SimConfigError, WorkaroundKind};
use super::decisions::{cosmetic_rng, DecisionSource, SeededDecisions};
use super::script::{case_names, workaround_scripts};
use super::trace::{FamilySummary, FamilyTrace, Terminal, TraceEvent};
use crate::assertion::{diff_suites, gate_verdict, parse_test_script, GateVerdict, MatcherTable};
use crate::contract::{Gate, NO_CODE, NO_PATH};
use crate::env::{FailureOrigin, SkipEntry, SkipList, SkipUpdate};
use crate::metrics::ConvergenceQuality;
use crate::report::{Corpus, ErrorEntry, ExecutionReport, ReportStatus, Stage, TestCaseResult, Verdict};
use crate::retry::{AttemptOutcome, EnvironmentHandling, EscalationRecord, EscalationTrigger, RetryState, RetryStatus};
use crate::signature::{message_catalog, FailureSignature, SignatureSet, REPAIR_STATE_CORRUPTION};

/// 2025-01-06T08:00:00Z.
pub const BASE_TIMESTAMP: i64 = 1_736_150_400;
/// Seconds between consecutive reports.
pub const REPORT_INTERVAL_SECS: i64 = 36_288;

/// Co-symptom signatures, in the order their draws are taken.
const TRANSIENTS: [FailureSignature; 6] = [
    FailureSignature::MethodContractMismatch,
    FailureSignature::NavigationEnvTimeout,
    FailureSignature::SelectorReadiness,
    FailureSignature::AssertionMismatch,
    FailureSignature::VisibilityAssertion,
    FailureSignature::ClosedContext,
];

/// RFC 3339 timestamp of the report at `sequence_index`.
pub fn report_timestamp(sequence_index: u64) -> String {
    let secs = BASE_TIMESTAMP + sequence_index as i64 * REPORT_INTERVAL_SECS;
    DateTime::from_timestamp(secs, 0)
        .expect("in range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutput {
    pub corpus: Corpus,
    pub traces: Vec<FamilyTrace>,
    pub skip_list: Vec<SkipEntry>,
    pub review_queue: Vec<EscalationRecord>,
}

/// Runs the simulator with seeded decisions.
pub fn run_simulation(config: &SimConfig) -> Result<SimOutput, SimConfigError> {
    config.validate()?;
    Ok(run_with(config, &mut SeededDecisions::new(config.seed)))
}

/// Runs the simulator against any decision source. `config` must be valid.
pub fn run_with(config: &SimConfig, decisions: &mut dyn DecisionSource) -> SimOutput {
    debug_assert!(config.validate().is_ok());
    let mut engine = Engine {
        config,
        decisions,
        cosmetic: cosmetic_rng(config.seed),
        table: MatcherTable::default(),
        reports: Vec::new(),
        regime_reset: false,
        skip: SkipList::new(NonZeroU32::new(config.policy.skip_threshold).expect("validated")),
        review: Vec::new(),
        families: config
            .families
            .iter()
            .map(|spec| FamilyState {
                defects: spec.initial_defects.iter().copied().collect(),
                lateral: 0,
                suite_size: spec.suite_size,
                streak: 0,
                events: Vec::new(),
                summary: FamilySummary {
                    family_id: spec.family_id.clone(),
                    terminal: Terminal::NotStarted,
                    reports: 0,
                    cycles: 0,
                    quality: ConvergenceQuality::None,
                    iterations_to_convergence: None,
                    escalations: Vec::new(),
                    workarounds_applied: 0,
                    workarounds_blocked: 0,
                    environment_failures: 0,
                    longest_no_artifact_streak: 0,
                },
            })
            .collect(),
    };
    engine.run();

    let mut corpus = Corpus::new(engine.reports).expect("simulated reports are valid");
    if !config.phases.is_empty() {
        corpus.label_phases(&config.phases);
    }
    SimOutput {
        corpus,
        traces: engine
            .families
            .into_iter()
            .map(|f| FamilyTrace { summary: f.summary, events: f.events })
            .collect(),
        skip_list: engine.skip.entries().to_vec(),
        review_queue: engine.review,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Fresh,
    Local { after_no_artifact: bool },
}

struct Attempt {
    outcome: AttemptOutcome,
    failing: SignatureSet,
    next: Mode,
}

struct FamilyState {
    defects: SignatureSet,
    /// Consecutive repair passes that fixed nothing.
    lateral: i32,
    suite_size: u32,
    streak: u32,
    events: Vec<TraceEvent>,
    summary: FamilySummary,
}

struct Engine<'a> {
    config: &'a SimConfig,
    decisions: &'a mut dyn DecisionSource,
    cosmetic: ChaCha8Rng,
    table: MatcherTable,
    reports: Vec<ExecutionReport>,
    regime_reset: bool,
    skip: SkipList,
    review: Vec<EscalationRecord>,
    families: Vec<FamilyState>,
}

impl Engine<'_> {
    fn budget_left(&self) -> bool {
        self.reports.len() < self.config.report_budget as usize
    }

    fn run(&mut self) {
        let n = self.families.len();
        for cycle in 0.. {
            let pending: Vec<usize> = (0..n)
                .filter(|&i| cycle == 0 || self.families[i].summary.terminal == Terminal::Escalated)
                .collect();
            if pending.is_empty() {
                return;
            }
            for f in pending {
                if !self.budget_left() {
                    return;
                }
                self.run_cycle(f);
            }
            if self.config.policy.bounded_escalation {
                return;
            }
        }
    }

    fn push(&mut self, f: usize, event: TraceEvent) {
        self.families[f].events.push(event);
    }

    fn enter(&mut self, f: usize, stage: Stage) {
        self.push(f, TraceEvent::Enter { stage });
    }

    fn run_cycle(&mut self, f: usize) {
        let policy = self.config.policy;
        let id = self.config.families[f].family_id.clone();
        let mut retry = RetryState::new(id.clone(), policy.retry_budget, policy.stagnation_window.unwrap_or(u32::MAX))
            .expect("validated")
            .with_environment_handling(EnvironmentHandling::ConsumeBudget);
        if self.families[f].summary.cycles > 0 {
            self.push(f, TraceEvent::Restart);
        }
        self.families[f].summary.cycles += 1;

        let mut mode = Mode::Fresh;
        let mut last_failing = SignatureSet::EMPTY;
        loop {
            if !self.budget_left() {
                self.families[f].summary.terminal = Terminal::ReportBudgetExhausted;
                return;
            }
            let attempt = self.attempt(f, mode, last_failing);
            let fam = &mut self.families[f];
            if attempt.outcome == AttemptOutcome::NoArtifact {
                fam.streak += 1;
                fam.summary.longest_no_artifact_streak = fam.summary.longest_no_artifact_streak.max(fam.streak);
            } else {
                fam.streak = 0;
            }
            let status = retry.record_attempt(attempt.outcome).expect("state is active");
            if status == RetryStatus::Converged {
                fam.summary.terminal = Terminal::Converged;
                fam.summary.iterations_to_convergence = self.reports.last().map(|r| r.retry_index);
                if fam.summary.quality == ConvergenceQuality::None {
                    fam.summary.quality = ConvergenceQuality::Clean;
                }
                self.push(f, TraceEvent::Converged);
                return;
            }
            if attempt.outcome == AttemptOutcome::FailEnvironment {
                self.families[f].summary.environment_failures += 1;
                if policy.env_skip {
                    let last = self.reports.last().expect("just emitted");
                    let reason = last.error_entries.first().map_or("", |e| e.raw_text.as_str());
                    let update = self.skip.update(&id, FailureOrigin::Environment, reason, &last.timestamp);
                    if matches!(update, SkipUpdate::Skipped | SkipUpdate::Hit(_)) {
                        self.families[f].summary.terminal = Terminal::Skipped;
                        self.push(f, TraceEvent::Skipped);
                        return;
                    }
                }
            }
            if status == RetryStatus::Escalated {
                let record = retry.escalation_record().expect("escalated once");
                let trigger = record.trigger;
                self.review.push(record);
                let fam = &mut self.families[f];
                fam.summary.escalations.push(trigger);
                fam.summary.terminal = Terminal::Escalated;
                self.push(f, TraceEvent::Escalated { trigger });
                if trigger == EscalationTrigger::Stagnation
                    && policy.bounded_escalation
                    && policy.reviewer_oracle != ReviewerOracle::RejectAll
                    && !self.regime_reset
                {
                    self.regime_reset = true;
                    self.push(f, TraceEvent::RegimeReset);
                }
                return;
            }
            mode = attempt.next;
            last_failing = attempt.failing;
        }
    }

    fn attempt(&mut self, f: usize, mut mode: Mode, last_failing: SignatureSet) -> Attempt {
        let config = self.config;
        let policy = config.policy;
        let dyns = config.dynamics;
        let regime = config
            .regime_switch
            .filter(|r| self.reports.len() as u64 >= u64::from(r.at_report) && !self.regime_reset);
        let p_no_artifact =
            regime.map_or(config.probability(FailureSignature::NonExecutableOutput), |r| r.non_executable_probability);

        let mut corrupted = false;
        let mut plan_broken = false;
        let mut workaround = None;
        let generator;

        if mode == (Mode::Local { after_no_artifact: true }) {
            self.enter(f, Stage::SelfCorrection);
            if policy.exec_gate {
                // No artifact means no repair context to hand the Executor.
                self.push(f, TraceEvent::GateBlocked { gate: Gate::ExecGate });
                self.push(f, TraceEvent::Restart);
                mode = Mode::Fresh;
            } else {
                corrupted = self.decisions.chance(dyns.repair_state_corruption);
            }
        }
        match mode {
            Mode::Fresh => {
                self.enter(f, Stage::Explorer);
                self.enter(f, Stage::Planner);
                if self.decisions.chance(dyns.plan_defect_probability) {
                    if policy.plan_gate {
                        self.push(f, TraceEvent::GateBlocked { gate: Gate::PlanGate });
                        self.push(f, TraceEvent::Restart);
                        self.enter(f, Stage::Explorer);
                        self.enter(f, Stage::Planner);
                    } else {
                        plan_broken = true;
                    }
                }
                self.enter(f, Stage::Coder);
                generator = Stage::Coder;
            }
            Mode::Local { after_no_artifact: false } => {
                self.enter(f, Stage::SelfCorrection);
                self.repair(f, last_failing);
                workaround = self.try_workaround(f, last_failing);
                generator = Stage::SelfCorrection;
            }
            Mode::Local { after_no_artifact: true } => generator = Stage::SelfCorrection,
        }

        let no_artifact =
            corrupted || plan_broken || (workaround.is_none() && self.decisions.chance(p_no_artifact));
        if no_artifact {
            let mut errors = Vec::new();
            if corrupted {
                errors.push(ErrorEntry::new(REPAIR_STATE_CORRUPTION, Stage::SelfCorrection));
            }
            errors.push(ErrorEntry::new(NO_CODE, generator));
            errors.push(ErrorEntry::new(NO_PATH, generator));
            let next = if policy.code_gate {
                self.push(f, TraceEvent::GateBlocked { gate: Gate::CodeGate });
                self.push(f, TraceEvent::Restart);
                Mode::Fresh
            } else {
                self.enter(f, Stage::Executor);
                self.push(f, TraceEvent::ExecutorInput { has_code: false });
                Mode::Local { after_no_artifact: true }
            };
            self.emit(f, ReportStatus::NoArtifact, errors, None);
            return Attempt { outcome: AttemptOutcome::NoArtifact, failing: SignatureSet::EMPTY, next };
        }

        if let Some(kind) = workaround {
            self.enter(f, Stage::Executor);
            self.push(f, TraceEvent::ExecutorInput { has_code: true });
            let fam = &mut self.families[f];
            let scripts = workaround_scripts(kind, &config.families[f].family_id, fam.suite_size);
            if kind == WorkaroundKind::DeleteCase {
                fam.suite_size = fam.suite_size.saturating_sub(1).max(1);
            }
            self.emit(f, ReportStatus::Completed, Vec::new(), Some(scripts));
            return Attempt { outcome: AttemptOutcome::Pass, failing: SignatureSet::EMPTY, next: Mode::Fresh };
        }

        let mut hallucinated = self.decisions.chance(config.probability(FailureSignature::HallucinatedApi));
        if hallucinated && policy.selector_grounding {
            self.push(f, TraceEvent::SelectorRejected);
            hallucinated = false;
        }
        self.enter(f, Stage::Executor);
        self.push(f, TraceEvent::ExecutorInput { has_code: true });
        let mut failing = self.families[f].defects;
        if hallucinated {
            failing.insert(FailureSignature::HallucinatedApi);
        }
        // Co-symptoms only surface on executions that already fail.
        for sig in TRANSIENTS {
            if failing.is_empty() {
                break;
            }
            if self.decisions.chance(config.probability(sig)) {
                failing.insert(sig);
            }
        }
        if failing.is_empty() {
            self.emit(f, ReportStatus::Completed, Vec::new(), None);
            return Attempt { outcome: AttemptOutcome::Pass, failing, next: Mode::Fresh };
        }

        let errors = failing
            .iter()
            .map(|sig| {
                let catalog = message_catalog(sig);
                let text = catalog[self.cosmetic.gen_range(0..catalog.len())];
                ErrorEntry::new(text, Stage::Executor)
            })
            .collect();
        self.emit(f, ReportStatus::Failed, errors, None);
        let environmental: SignatureSet =
            [FailureSignature::NavigationEnvTimeout, FailureSignature::ClosedContext].into_iter().collect();
        if failing.is_subset(environmental) {
            let next = if policy.env_skip { Mode::Fresh } else { Mode::Local { after_no_artifact: false } };
            Attempt { outcome: AttemptOutcome::FailEnvironment, failing, next }
        } else {
            Attempt { outcome: AttemptOutcome::FailTestLogic, failing, next: Mode::Local { after_no_artifact: false } }
        }
    }

    /// One self-correction pass over the defects seen in the last execution.
    fn repair(&mut self, f: usize, last_failing: SignatureSet) {
        if !self.config.families[f].repairable {
            return;
        }
        let dyns = self.config.dynamics;
        let fam = &mut self.families[f];
        let candidates: Vec<_> = fam.defects.iter().filter(|d| last_failing.contains(*d)).collect();
        if candidates.is_empty() {
            return;
        }
        let p = dyns.repair_success * powi(dyns.repair_decay, fam.lateral);
        let mut fixed = false;
        for defect in candidates {
            if self.decisions.chance(p) {
                fam.defects.remove(defect);
                fixed = true;
            }
        }
        fam.lateral = if fixed { 0 } else { fam.lateral + 1 };
    }

    fn try_workaround(&mut self, f: usize, last_failing: SignatureSet) -> Option<WorkaroundKind> {
        let spec = &self.config.families[f];
        let w = spec.workaround?;
        let fam = &self.families[f];
        let only: SignatureSet = [w.defect].into_iter().collect();
        if fam.defects != only || !last_failing.contains(w.defect) {
            return None;
        }
        let propensity = match w.kind {
            WorkaroundKind::WeakenAssertion => self.config.dynamics.weakening_propensity,
            WorkaroundKind::DeleteCase => self.config.dynamics.deletion_propensity,
        };
        if !self.decisions.chance(propensity) {
            return None;
        }
        let policy = self.config.policy;
        if policy.semantic_gate && self.gate_requires_review(f, w.kind) {
            let approved = policy.reviewer_oracle == ReviewerOracle::ApproveAll;
            if !approved {
                self.families[f].summary.workarounds_blocked += 1;
                self.push(f, TraceEvent::WorkaroundBlocked { kind: w.kind });
                return None;
            }
        }
        let fam = &mut self.families[f];
        fam.defects.remove(w.defect);
        fam.summary.workarounds_applied += 1;
        fam.summary.quality = match w.kind {
            WorkaroundKind::WeakenAssertion if fam.summary.quality != ConvergenceQuality::ScopeReduced => {
                ConvergenceQuality::AssertionWeakened
            }
            WorkaroundKind::WeakenAssertion => fam.summary.quality,
            WorkaroundKind::DeleteCase => ConvergenceQuality::ScopeReduced,
        };
        self.push(f, TraceEvent::WorkaroundApplied { kind: w.kind });
        Some(w.kind)
    }

    fn gate_requires_review(&self, f: usize, kind: WorkaroundKind) -> bool {
        let (before, after) = workaround_scripts(kind, &self.config.families[f].family_id, self.families[f].suite_size);
        let parse = |src: &str| parse_test_script(src, &self.table).expect("templates parse");
        gate_verdict(&diff_suites(&self.table, &parse(&before), &parse(&after))) == GateVerdict::RequireReview
    }

    fn emit(&mut self, f: usize, status: ReportStatus, error_entries: Vec<ErrorEntry>, scripts: Option<(String, String)>) {
        let sequence_index = self.reports.len() as u64;
        let fam = &mut self.families[f];
        let retry_index = fam.summary.reports.min(self.config.policy.retry_budget);
        fam.summary.reports += 1;
        let names = case_names(&self.config.families[f].family_id, fam.suite_size);
        let test_results = match status {
            ReportStatus::NoArtifact => Vec::new(),
            ReportStatus::Completed => names
                .into_iter()
                .map(|case_name| TestCaseResult {
                    case_name,
                    verdict: Verdict::Pass,
                    duration_ms: self.cosmetic.gen_range(800..12_000),
                    error_text: None,
                })
                .collect(),
            ReportStatus::Failed => {
                let first = error_entries.first().map(|e| e.raw_text.clone());
                names
                    .into_iter()
                    .enumerate()
                    .map(|(i, case_name)| {
                        let fails = i == 0 || self.cosmetic.gen_bool(0.5);
                        TestCaseResult {
                            case_name,
                            verdict: if fails { Verdict::Fail } else { Verdict::Pass },
                            duration_ms: self.cosmetic.gen_range(800..45_000),
                            error_text: if fails { first.clone() } else { None },
                        }
                    })
                    .collect()
            }
        };
        let (script_before, script_after) = match scripts {
            Some((b, a)) => (Some(b), Some(a)),
            None => (None, None),
        };
        self.reports.push(ExecutionReport {
            report_id: format!("rpt-{sequence_index:04}"),
            sequence_index,
            phase_label: None,
            family_id: self.config.families[f].family_id.clone(),
            retry_index,
            status,
            test_results,
            error_entries,
            script_before,
            script_after,
            timestamp: report_timestamp(sequence_index),
        });
        self.push(f, TraceEvent::Report { sequence_index, status });
    }
}

fn powi(base: f64, exp: i32) -> f64 {
    (0..exp).fold(1.0, |acc, _| acc * base)
}
