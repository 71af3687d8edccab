//! Structural checks at agent handoffs: plan validity, code extractability
//! and executor-input completeness. Violations are values, never panics.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanMode {
    GenerateNew,
    UseExisting,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerOutput {
    pub mode: PlanMode,
    pub target_page_objects: Vec<String>,
    /// Scenario text for GENERATE_NEW, or an existing spec id for USE_EXISTING.
    pub scenario_spec: String,
    pub feature_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoderOutput {
    pub raw_response: String,
    pub extracted_code: Option<String>,
    pub target_path: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Gate {
    PlanGate,
    CodeGate,
    ExecGate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateViolation {
    pub gate: Gate,
    pub reason: String,
    pub fatal: bool,
}

impl GateViolation {
    fn new(gate: Gate, reason: impl Into<String>, fatal: bool) -> Self {
        Self { gate, reason: reason.into(), fatal }
    }
}

impl fmt::Display for GateViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.gate, self.reason)
    }
}

pub const NO_CODE: &str = "Could not extract code from LLM response";
pub const NO_PATH: &str = "Test file path not found";

/// Validates a plan; `existing_specs` is the registry of spec ids that
/// USE_EXISTING plans may reference.
pub fn check_plan(plan: &PlannerOutput, existing_specs: &BTreeSet<String>) -> Result<(), GateViolation> {
    let violation = |reason: &str| Err(GateViolation::new(Gate::PlanGate, reason, true));
    if plan.feature_id.trim().is_empty() {
        return violation("feature_id is blank");
    }
    if plan.target_page_objects.iter().all(|p| p.trim().is_empty()) {
        return violation("plan names no target page objects");
    }
    match plan.mode {
        PlanMode::GenerateNew if plan.scenario_spec.trim().is_empty() => {
            violation("GENERATE_NEW plan has an empty scenario spec")
        }
        PlanMode::UseExisting if !existing_specs.contains(plan.scenario_spec.trim()) => Err(GateViolation::new(
            Gate::PlanGate,
            alloc::format!("USE_EXISTING references unknown spec `{}`", plan.scenario_spec.trim()),
            true,
        )),
        _ => Ok(()),
    }
}

fn fence_line(line: &str) -> Option<&str> {
    line.trim_start().strip_prefix("```")
}

/// A declared target path: `file: tests/x.spec.ts`, `// path: ...` or `# target: ...`.
fn declared_path(line: &str) -> Option<&str> {
    let mut rest = line.trim_start();
    for comment in ["//", "#"] {
        if let Some(r) = rest.strip_prefix(comment) {
            rest = r.trim_start();
            break;
        }
    }
    let (key, value) = rest.split_once(':')?;
    if !matches!(key.trim().to_ascii_lowercase().as_str(), "file" | "path" | "target") {
        return None;
    }
    value.split_whitespace().next().map(|v| v.trim_matches(|c| c == '`' || c == '"' || c == '\''))
}

/// Extracts the first non-empty fenced block; a declared path line may
/// appear anywhere in the response.
pub fn extract_code(response: &str) -> CoderOutput {
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    let mut target_path = None;
    for line in response.lines() {
        if target_path.is_none() {
            target_path = declared_path(line).filter(|p| !p.is_empty()).map(str::to_string);
        }
        match (&mut current, fence_line(line)) {
            (None, Some(_)) => current = Some(Vec::new()),
            (Some(body), Some(rest)) if rest.trim().is_empty() => {
                let text = body.join("\n");
                if !text.trim().is_empty() {
                    blocks.push(text);
                }
                current = None;
            }
            (Some(body), _) => body.push(line),
            (None, None) => {}
        }
    }
    let mut warnings = Vec::new();
    if current.is_some() {
        warnings.push("unterminated code fence ignored".to_string());
    }
    if blocks.len() > 1 {
        warnings.push(alloc::format!("{} fenced blocks found; using the first", blocks.len()));
    }
    CoderOutput {
        raw_response: response.to_string(),
        extracted_code: blocks.into_iter().next(),
        target_path,
        warnings,
    }
}

/// A path the executor could write: relative-or-absolute file path with an
/// extension, no whitespace, no parent traversal, not a directory.
pub fn writable_path_shape(path: &str) -> bool {
    if path.is_empty() || path.ends_with('/') || path.chars().any(|c| c.is_whitespace() || c == '\0') {
        return false;
    }
    if path.split('/').any(|seg| seg == "..") {
        return false;
    }
    let file = path.rsplit('/').next().unwrap_or(path);
    match file.rfind('.') {
        Some(dot) => dot > 0 && dot + 1 < file.len(),
        None => false,
    }
}

pub fn check_code(out: &CoderOutput) -> Result<(), GateViolation> {
    if out.extracted_code.as_deref().map_or(true, |c| c.trim().is_empty()) {
        return Err(GateViolation::new(Gate::CodeGate, NO_CODE, true));
    }
    match &out.target_path {
        Some(p) if writable_path_shape(p) => Ok(()),
        _ => Err(GateViolation::new(Gate::CodeGate, NO_PATH, false)),
    }
}

pub fn check_exec_input(
    path: &str,
    repair_context: Option<&str>,
    expecting_repair: bool,
) -> Result<(), GateViolation> {
    if path.trim().is_empty() {
        return Err(GateViolation::new(Gate::ExecGate, "executor test path is blank", true));
    }
    if expecting_repair && repair_context.map_or(true, |c| c.trim().is_empty()) {
        return Err(GateViolation::new(
            Gate::ExecGate,
            "repair iteration without repair context",
            true,
        ));
    }
    Ok(())
}
