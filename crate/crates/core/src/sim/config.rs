use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::signature::FailureSignature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkaroundKind {
    WeakenAssertion,
    DeleteCase,
}

/// A shortcut self-correction may take once `defect` is the family's last
/// remaining blocker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Workaround {
    pub kind: WorkaroundKind,
    pub defect: FailureSignature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family_id: String,
    /// Persistent defects; each fails every execution until repaired.
    pub initial_defects: Vec<FailureSignature>,
    pub repairable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workaround: Option<Workaround>,
    #[serde(default = "one")]
    pub suite_size: u32,
}

fn one() -> u32 {
    1
}

/// From report `at_report` on, generation fails with the given probability
/// until an escalation resets the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSwitch {
    pub at_report: u32,
    pub non_executable_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dynamics {
    /// Chance that one self-correction pass fixes an observed defect.
    pub repair_success: f64,
    /// Multiplier applied per consecutive repair pass that fixed nothing.
    pub repair_decay: f64,
    pub weakening_propensity: f64,
    pub deletion_propensity: f64,
    /// Chance that self-correction crashes when handed no artifact.
    pub repair_state_corruption: f64,
    pub plan_defect_probability: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            repair_success: 0.5,
            repair_decay: 0.9,
            weakening_propensity: 0.5,
            deletion_propensity: 0.5,
            repair_state_corruption: 0.0,
            plan_defect_probability: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReviewerOracle {
    ApproveAll,
    RejectWeakening,
    RejectAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GuardrailPolicy {
    pub selector_grounding: bool,
    pub code_gate: bool,
    pub plan_gate: bool,
    pub exec_gate: bool,
    pub env_skip: bool,
    pub semantic_gate: bool,
    /// Each family gets one bounded run; a stagnation escalation lets the
    /// reviewer reset the pipeline. Off: unconverged families are re-queued.
    #[serde(default)]
    pub bounded_escalation: bool,
    pub retry_budget: u32,
    /// `None` disables stagnation detection.
    pub stagnation_window: Option<u32>,
    pub reviewer_oracle: ReviewerOracle,
    #[serde(default = "one")]
    pub skip_threshold: u32,
}

impl GuardrailPolicy {
    /// Every gate off, deep retry budget, failed families re-queued.
    pub fn baseline() -> Self {
        Self {
            selector_grounding: false,
            code_gate: false,
            plan_gate: false,
            exec_gate: false,
            env_skip: false,
            semantic_gate: false,
            bounded_escalation: false,
            retry_budget: 16,
            stagnation_window: None,
            reviewer_oracle: ReviewerOracle::ApproveAll,
            skip_threshold: 1,
        }
    }

    /// Every gate on, budget 7, stagnation window 3.
    pub fn constrained() -> Self {
        Self {
            selector_grounding: true,
            code_gate: true,
            plan_gate: true,
            exec_gate: true,
            env_skip: true,
            semantic_gate: true,
            bounded_escalation: true,
            retry_budget: crate::retry::DEFAULT_BUDGET,
            stagnation_window: Some(crate::retry::DEFAULT_STAGNATION_WINDOW),
            reviewer_oracle: ReviewerOracle::RejectWeakening,
            skip_threshold: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub families: Vec<FamilySpec>,
    /// For each executable-failure signature, the chance it surfaces as a
    /// co-symptom of an execution that already fails. The
    /// NON_EXECUTABLE_OUTPUT entry is the base chance that generation yields
    /// no artifact; HALLUCINATED_API is the chance that generated code
    /// references UI that does not exist.
    pub signature_probabilities: BTreeMap<FailureSignature, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime_switch: Option<RegimeSwitch>,
    pub policy: GuardrailPolicy,
    pub report_budget: u32,
    #[serde(default)]
    pub dynamics: Dynamics,
    /// Report positions where each phase ends; empty for no phase labels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimConfigError {
    #[error("{0} must be a probability in [0, 1]")]
    Probability(String),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("no families configured")]
    NoFamilies,
    #[error("family id `{0}` is empty or duplicated")]
    FamilyId(String),
    #[error("family `{0}`: NON_EXECUTABLE_OUTPUT cannot be a persistent defect")]
    NonExecutableDefect(String),
    #[error("family `{0}`: workaround defect is not an initial defect")]
    WorkaroundDefect(String),
    #[error("family `{0}`: deleting a case needs a suite of at least 2")]
    DeletionSuite(String),
    #[error("phase boundaries must be strictly increasing and positive")]
    Phases,
    #[error("configs differ outside their guardrail policy")]
    Mismatched,
}

impl SimConfig {
    pub fn probability(&self, sig: FailureSignature) -> f64 {
        self.signature_probabilities.get(&sig).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), SimConfigError> {
        let check = |name: String, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(SimConfigError::Probability(name))
            }
        };
        for (sig, p) in &self.signature_probabilities {
            check(alloc::format!("signature_probabilities.{sig}"), *p)?;
        }
        if let Some(r) = &self.regime_switch {
            check("regime_switch.non_executable_probability".into(), r.non_executable_probability)?;
        }
        let d = &self.dynamics;
        for (name, p) in [
            ("repair_success", d.repair_success),
            ("repair_decay", d.repair_decay),
            ("weakening_propensity", d.weakening_propensity),
            ("deletion_propensity", d.deletion_propensity),
            ("repair_state_corruption", d.repair_state_corruption),
            ("plan_defect_probability", d.plan_defect_probability),
        ] {
            check(alloc::format!("dynamics.{name}"), p)?;
        }
        if self.report_budget == 0 {
            return Err(SimConfigError::Zero("report_budget"));
        }
        if self.policy.retry_budget == 0 {
            return Err(SimConfigError::Zero("retry_budget"));
        }
        if self.policy.stagnation_window == Some(0) {
            return Err(SimConfigError::Zero("stagnation_window"));
        }
        if self.policy.skip_threshold == 0 {
            return Err(SimConfigError::Zero("skip_threshold"));
        }
        if self.families.is_empty() {
            return Err(SimConfigError::NoFamilies);
        }
        for (i, f) in self.families.iter().enumerate() {
            if f.family_id.trim().is_empty() || self.families[..i].iter().any(|o| o.family_id == f.family_id) {
                return Err(SimConfigError::FamilyId(f.family_id.clone()));
            }
            if f.suite_size == 0 {
                return Err(SimConfigError::Zero("suite_size"));
            }
            if f.initial_defects.contains(&FailureSignature::NonExecutableOutput) {
                return Err(SimConfigError::NonExecutableDefect(f.family_id.clone()));
            }
            if let Some(w) = f.workaround {
                if !f.initial_defects.contains(&w.defect) {
                    return Err(SimConfigError::WorkaroundDefect(f.family_id.clone()));
                }
                if w.kind == WorkaroundKind::DeleteCase && f.suite_size < 2 {
                    return Err(SimConfigError::DeletionSuite(f.family_id.clone()));
                }
            }
        }
        if self.phases.first() == Some(&0) || self.phases.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimConfigError::Phases);
        }
        Ok(())
    }

    /// True when the two configs differ only in `policy` (and seed).
    pub fn same_world(&self, other: &Self) -> bool {
        self.families == other.families
            && self.signature_probabilities == other.signature_probabilities
            && self.regime_switch == other.regime_switch
            && self.report_budget == other.report_budget
            && self.dynamics == other.dynamics
            && self.phases == other.phases
    }

    /// Ten families tuned so a 300-report baseline run reproduces the
    /// observed failure-signature mix, NO_ARTIFACT share and convergence.
    pub fn calibrated(policy: GuardrailPolicy, seed: u64) -> Self {
        use FailureSignature::*;
        let family = |id: &str, defects: &[FailureSignature], repairable: bool, workaround: Option<Workaround>, suite_size: u32| FamilySpec {
            family_id: id.into(),
            initial_defects: defects.to_vec(),
            repairable,
            workaround,
            suite_size,
        };
        let families = alloc::vec![
            family("basic-interaction", &[AssertionMismatch], true, None, 2),
            family(
                "advanced-features",
                &[SelectorReadiness, AssertionMismatch],
                true,
                Some(Workaround { kind: WorkaroundKind::WeakenAssertion, defect: AssertionMismatch }),
                2,
            ),
            family("tab-refresh", &[SelectorReadiness, VisibilityAssertion], true, None, 2),
            family("accessibility", &[], true, None, 2),
            family("detail-refresh", &[NavigationEnvTimeout, MethodContractMismatch, ClosedContext], true, None, 2),
            family(
                "selection-navigation",
                &[SelectorReadiness, VisibilityAssertion, NavigationEnvTimeout],
                true,
                Some(Workaround { kind: WorkaroundKind::DeleteCase, defect: NavigationEnvTimeout }),
                2,
            ),
            family("status-transitions", &[NavigationEnvTimeout], true, None, 2),
            family("tab-errors", &[SelectorReadiness, VisibilityAssertion], false, None, 2),
            family("details-refresh-early", &[MethodContractMismatch, NavigationEnvTimeout], false, None, 2),
            family("code-generation", &[MethodContractMismatch], false, None, 2),
        ];
        let signature_probabilities = BTreeMap::from([
            (MethodContractMismatch, 0.22),
            (NavigationEnvTimeout, 0.52),
            (SelectorReadiness, 0.26),
            (AssertionMismatch, 0.44),
            (NonExecutableOutput, 0.05),
            (VisibilityAssertion, 0.08),
            (ClosedContext, 0.26),
            (HallucinatedApi, 0.20),
        ]);
        Self {
            seed,
            families,
            signature_probabilities,
            regime_switch: Some(RegimeSwitch { at_report: 196, non_executable_probability: 0.99 }),
            policy,
            report_budget: 300,
            dynamics: Dynamics {
                repair_success: 0.45,
                repair_decay: 0.9,
                weakening_propensity: 0.5,
                deletion_propensity: 0.5,
                repair_state_corruption: 0.18,
                plan_defect_probability: 0.0,
            },
            phases: alloc::vec![18, 132, 186],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        SimConfig::calibrated(GuardrailPolicy::baseline(), 1).validate().unwrap();
        SimConfig::calibrated(GuardrailPolicy::constrained(), 1).validate().unwrap();
        assert!(SimConfig::calibrated(GuardrailPolicy::baseline(), 1)
            .same_world(&SimConfig::calibrated(GuardrailPolicy::constrained(), 2)));
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SimConfig::calibrated(GuardrailPolicy::baseline(), 1);
        let mut c = base.clone();
        c.signature_probabilities.insert(FailureSignature::ClosedContext, 1.5);
        assert!(matches!(c.validate(), Err(SimConfigError::Probability(_))));
        let mut c = base.clone();
        c.dynamics.repair_success = f64::NAN;
        assert!(matches!(c.validate(), Err(SimConfigError::Probability(_))));
        let mut c = base.clone();
        c.report_budget = 0;
        assert_eq!(c.validate(), Err(SimConfigError::Zero("report_budget")));
        let mut c = base.clone();
        c.families[1].family_id = c.families[0].family_id.clone();
        assert!(matches!(c.validate(), Err(SimConfigError::FamilyId(_))));
        let mut c = base.clone();
        c.families[1].initial_defects.retain(|d| *d != FailureSignature::AssertionMismatch);
        assert!(matches!(c.validate(), Err(SimConfigError::WorkaroundDefect(_))));
        let mut c = base.clone();
        c.families[5].suite_size = 1;
        assert!(matches!(c.validate(), Err(SimConfigError::DeletionSuite(_))));
        let mut c = base.clone();
        c.phases = alloc::vec![20, 10];
        assert_eq!(c.validate(), Err(SimConfigError::Phases));
        let mut c = base;
        c.policy.stagnation_window = Some(0);
        assert_eq!(c.validate(), Err(SimConfigError::Zero("stagnation_window")));
    }
}
