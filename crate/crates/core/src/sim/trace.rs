use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::WorkaroundKind;
use crate::contract::Gate;
use crate::metrics::ConvergenceQuality;
use crate::report::{ReportStatus, Stage};
use crate::retry::EscalationTrigger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Enter { stage: Stage },
    /// What the Executor was handed.
    ExecutorInput { has_code: bool },
    GateBlocked { gate: Gate },
    /// Selector grounding rejected generated code that referenced missing UI.
    SelectorRejected,
    /// The next stage entered starts a fresh Explorer pass.
    Restart,
    Report { sequence_index: u64, status: ReportStatus },
    WorkaroundApplied { kind: WorkaroundKind },
    WorkaroundBlocked { kind: WorkaroundKind },
    Escalated { trigger: EscalationTrigger },
    /// A reviewer reset the pipeline after a stagnation escalation.
    RegimeReset,
    Skipped,
    Converged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Terminal {
    Converged,
    Escalated,
    Skipped,
    ReportBudgetExhausted,
    NotStarted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family_id: String,
    pub terminal: Terminal,
    pub reports: u32,
    /// Times the family entered the queue.
    pub cycles: u32,
    pub quality: ConvergenceQuality,
    pub iterations_to_convergence: Option<u32>,
    pub escalations: Vec<EscalationTrigger>,
    pub workarounds_applied: u32,
    pub workarounds_blocked: u32,
    pub environment_failures: u32,
    pub longest_no_artifact_streak: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyTrace {
    pub summary: FamilySummary,
    pub events: Vec<TraceEvent>,
}

/// Allowed stage-to-stage transitions without an intervening restart.
pub fn allowed_edge(from: Stage, to: Stage) -> bool {
    use Stage::*;
    matches!(
        (from, to),
        (Explorer, Planner)
            | (Planner, Coder)
            | (Coder, Executor)
            | (Executor, SelfCorrection)
            | (SelfCorrection, Executor)
            | (Executor, Explorer)
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("event {position}: illegal transition {from:?} -> {to}")]
pub struct TopologyError {
    pub position: usize,
    /// `None` after a restart or at the start of the trace.
    pub from: Option<Stage>,
    pub to: Stage,
}

/// Checks that every stage entry follows an allowed edge; after a restart
/// (and at the start) only the Explorer may be entered.
pub fn check_topology(events: &[TraceEvent]) -> Result<(), TopologyError> {
    let mut prev: Option<Stage> = None;
    for (position, event) in events.iter().enumerate() {
        match *event {
            TraceEvent::Restart => prev = None,
            TraceEvent::Enter { stage } => {
                let ok = match prev {
                    None => stage == Stage::Explorer,
                    Some(from) => allowed_edge(from, stage),
                };
                if !ok {
                    return Err(TopologyError { position, from: prev, to: stage });
                }
                prev = Some(stage);
            }
            _ => {}
        }
    }
    Ok(())
}
