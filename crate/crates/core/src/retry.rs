//! Bounded repair iteration with stagnation detection and one-shot escalation.

use alloc::string::String;
use core::num::NonZeroU32;

use serde::{Deserialize, Serialize};

pub const DEFAULT_BUDGET: u32 = 7;
pub const DEFAULT_STAGNATION_WINDOW: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AttemptOutcome {
    Pass,
    FailTestLogic,
    FailEnvironment,
    NoArtifact,
}

impl AttemptOutcome {
    pub const ALL: [Self; 4] = [Self::Pass, Self::FailTestLogic, Self::FailEnvironment, Self::NoArtifact];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscalationTrigger {
    BudgetExhausted,
    Stagnation,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RetryStatus {
    Active,
    Converged,
    Escalated,
}

/// What an environment failure does to the retry state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentHandling {
    /// Escalate at once and route to the skip list.
    #[default]
    Escalate,
    /// Treat like any other failure (for ablations).
    ConsumeBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RetryError {
    #[error("retry budget must be at least 1")]
    ZeroBudget,
    #[error("stagnation window must be at least 1")]
    ZeroWindow,
    #[error("family `{0}` is no longer active")]
    NotActive(String),
    #[error("family `{0}` has not escalated")]
    NotEscalated(String),
    #[error("escalation for family `{0}` was already recorded")]
    AlreadyRecorded(String),
}

/// A review-queue entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EscalationRecord {
    pub family_id: String,
    pub attempts: u32,
    pub trigger: EscalationTrigger,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryState {
    family_id: String,
    attempts: u32,
    budget: NonZeroU32,
    consecutive_no_artifact: u32,
    stagnation_window: NonZeroU32,
    environment: EnvironmentHandling,
    status: RetryStatus,
    trigger: Option<EscalationTrigger>,
    recorded: bool,
}

impl RetryState {
    pub fn new(family_id: impl Into<String>, budget: u32, stagnation_window: u32) -> Result<Self, RetryError> {
        Ok(Self {
            family_id: family_id.into(),
            attempts: 0,
            budget: NonZeroU32::new(budget).ok_or(RetryError::ZeroBudget)?,
            consecutive_no_artifact: 0,
            stagnation_window: NonZeroU32::new(stagnation_window).ok_or(RetryError::ZeroWindow)?,
            environment: EnvironmentHandling::default(),
            status: RetryStatus::Active,
            trigger: None,
            recorded: false,
        })
    }

    pub fn with_defaults(family_id: impl Into<String>) -> Self {
        Self::new(family_id, DEFAULT_BUDGET, DEFAULT_STAGNATION_WINDOW).expect("defaults are positive")
    }

    pub fn with_environment_handling(mut self, handling: EnvironmentHandling) -> Self {
        self.environment = handling;
        self
    }

    pub fn family_id(&self) -> &str {
        &self.family_id
    }

    pub fn attempts(&self) -> u32 {
        self.attempts
    }

    pub fn budget(&self) -> u32 {
        self.budget.get()
    }

    pub fn stagnation_window(&self) -> u32 {
        self.stagnation_window.get()
    }

    pub fn consecutive_no_artifact(&self) -> u32 {
        self.consecutive_no_artifact
    }

    pub fn status(&self) -> RetryStatus {
        self.status
    }

    pub fn trigger(&self) -> Option<EscalationTrigger> {
        self.trigger
    }

    /// Retry index of the passing attempt, once converged.
    pub fn iterations_to_convergence(&self) -> Option<u32> {
        (self.status == RetryStatus::Converged).then(|| self.attempts - 1)
    }

    /// Applies one attempt. Escalation triggers are checked in the order
    /// environment, stagnation, budget.
    pub fn record_attempt(&mut self, outcome: AttemptOutcome) -> Result<RetryStatus, RetryError> {
        if self.status != RetryStatus::Active {
            return Err(RetryError::NotActive(self.family_id.clone()));
        }
        self.attempts += 1;
        if outcome == AttemptOutcome::NoArtifact {
            self.consecutive_no_artifact += 1;
        } else {
            self.consecutive_no_artifact = 0;
        }
        let trigger = match outcome {
            AttemptOutcome::Pass => {
                self.status = RetryStatus::Converged;
                return Ok(self.status);
            }
            AttemptOutcome::FailEnvironment if self.environment == EnvironmentHandling::Escalate => {
                Some(EscalationTrigger::Environment)
            }
            _ if self.consecutive_no_artifact >= self.stagnation_window.get() => {
                Some(EscalationTrigger::Stagnation)
            }
            _ if self.attempts >= self.budget.get() => Some(EscalationTrigger::BudgetExhausted),
            _ => None,
        };
        if let Some(trigger) = trigger {
            self.status = RetryStatus::Escalated;
            self.trigger = Some(trigger);
        }
        Ok(self.status)
    }

    /// The review-queue entry; available exactly once per escalated state.
    pub fn escalation_record(&mut self) -> Result<EscalationRecord, RetryError> {
        let Some(trigger) = self.trigger else {
            return Err(RetryError::NotEscalated(self.family_id.clone()));
        };
        if self.recorded {
            return Err(RetryError::AlreadyRecorded(self.family_id.clone()));
        }
        self.recorded = true;
        Ok(EscalationRecord {
            family_id: self.family_id.clone(),
            attempts: self.attempts,
            trigger,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use AttemptOutcome::*;

    fn run(state: &mut RetryState, outcomes: &[AttemptOutcome]) -> RetryStatus {
        for o in outcomes {
            state.record_attempt(*o).unwrap();
        }
        state.status()
    }

    #[test]
    fn parameters() {
        let s = RetryState::with_defaults("f");
        assert_eq!((s.budget(), s.stagnation_window()), (7, 3));
        assert!(RetryState::new("f", 16, 3).is_ok());
        assert_eq!(RetryState::new("f", 0, 3).unwrap_err(), RetryError::ZeroBudget);
        assert_eq!(RetryState::new("f", 7, 0).unwrap_err(), RetryError::ZeroWindow);
    }

    #[test]
    fn converges_on_last_budgeted_attempt() {
        let mut s = RetryState::with_defaults("sel-nav");
        let mut outcomes = [FailTestLogic; 7];
        outcomes[6] = Pass;
        assert_eq!(run(&mut s, &outcomes), RetryStatus::Converged);
        assert_eq!(s.attempts(), 7);
        assert_eq!(s.iterations_to_convergence(), Some(6));
    }

    #[test]
    fn first_pass() {
        let mut s = RetryState::with_defaults("a11y");
        assert_eq!(run(&mut s, &[Pass]), RetryStatus::Converged);
        assert_eq!(s.attempts(), 1);
        assert_eq!(s.iterations_to_convergence(), Some(0));
    }

    #[test]
    fn stagnation_escalates_early() {
        let mut s = RetryState::new("collapse", 16, 3).unwrap();
        assert_eq!(run(&mut s, &[NoArtifact, NoArtifact, NoArtifact]), RetryStatus::Escalated);
        assert_eq!(s.attempts(), 3);
        let record = s.escalation_record().unwrap();
        assert_eq!(record.trigger, EscalationTrigger::Stagnation);
        assert_eq!(s.escalation_record().unwrap_err(), RetryError::AlreadyRecorded("collapse".into()));
    }

    #[test]
    fn interrupted_streak_resets() {
        let mut s = RetryState::new("f", 16, 3).unwrap();
        assert_eq!(run(&mut s, &[NoArtifact, NoArtifact, FailTestLogic, NoArtifact, NoArtifact]), RetryStatus::Active);
        assert_eq!(s.consecutive_no_artifact(), 2);
    }

    #[test]
    fn budget_and_environment_triggers() {
        let mut s = RetryState::new("f", 2, 3).unwrap();
        run(&mut s, &[FailTestLogic, FailTestLogic]);
        assert_eq!(s.escalation_record().unwrap().trigger, EscalationTrigger::BudgetExhausted);

        let mut s = RetryState::with_defaults("f");
        run(&mut s, &[FailEnvironment]);
        assert_eq!(s.escalation_record().unwrap().trigger, EscalationTrigger::Environment);

        let mut s = RetryState::with_defaults("f").with_environment_handling(EnvironmentHandling::ConsumeBudget);
        assert_eq!(run(&mut s, &[FailEnvironment]), RetryStatus::Active);

        // Environment outranks stagnation and budget on the same attempt.
        let mut s = RetryState::new("f", 3, 2).unwrap();
        run(&mut s, &[NoArtifact, FailTestLogic]);
        s.record_attempt(FailEnvironment).unwrap();
        assert_eq!(s.trigger(), Some(EscalationTrigger::Environment));
        // Stagnation outranks budget.
        let mut s = RetryState::new("f", 2, 2).unwrap();
        run(&mut s, &[NoArtifact, NoArtifact]);
        assert_eq!(s.trigger(), Some(EscalationTrigger::Stagnation));
    }

    #[test]
    fn closed_states_reject_transitions() {
        let mut s = RetryState::with_defaults("f");
        run(&mut s, &[Pass]);
        assert_eq!(s.record_attempt(Pass).unwrap_err(), RetryError::NotActive("f".into()));
        assert_eq!(s.escalation_record().unwrap_err(), RetryError::NotEscalated("f".into()));
    }

    /// Every outcome sequence, for every budget ≤ 5 and window ≤ 3.
    #[test]
    fn exhaustive_termination() {
        for budget in 1..=5u32 {
            for window in 1..=3u32 {
                for handling in [EnvironmentHandling::Escalate, EnvironmentHandling::ConsumeBudget] {
                    let mut checked = 0usize;
                    let total = 4usize.pow(budget);
                    for code in 0..total {
                        let seq: Vec<AttemptOutcome> = (0..budget)
                            .map(|k| AttemptOutcome::ALL[(code / 4usize.pow(k)) % 4])
                            .collect();
                        let mut s = RetryState::new("f", budget, window).unwrap().with_environment_handling(handling);
                        let mut steps = 0;
                        for o in &seq {
                            if s.status() != RetryStatus::Active {
                                assert!(s.record_attempt(*o).is_err());
                                break;
                            }
                            s.record_attempt(*o).unwrap();
                            steps += 1;
                            assert!(s.attempts() <= s.budget());
                            assert!(s.consecutive_no_artifact() <= window);
                            assert!(s.consecutive_no_artifact() <= s.attempts());
                        }
                        assert_ne!(s.status(), RetryStatus::Active, "{seq:?}");
                        assert!(steps <= budget);
                        if s.status() == RetryStatus::Escalated {
                            assert!(s.escalation_record().is_ok());
                            assert!(s.escalation_record().is_err());
                        }
                        checked += 1;
                    }
                    assert_eq!(checked, total);
                }
            }
        }
    }
}
