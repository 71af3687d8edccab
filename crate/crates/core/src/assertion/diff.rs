use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{compare_assertions, AssertionAst, ChangeVerdict, MatcherTable, Suite};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionChange {
    pub case_name: String,
    /// `None` when the assertion was added.
    pub before: Option<AssertionAst>,
    /// `None` when the assertion was dropped.
    pub after: Option<AssertionAst>,
    pub verdict: ChangeVerdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteDiff {
    pub added_cases: Vec<String>,
    pub removed_cases: Vec<String>,
    /// Only non-trivial changes are recorded.
    pub changes: Vec<AssertionChange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SuiteDiff {
    pub fn is_empty(&self) -> bool {
        self.added_cases.is_empty() && self.removed_cases.is_empty() && self.changes.is_empty()
    }

    pub fn scope_reduction(&self) -> bool {
        !self.removed_cases.is_empty()
    }

    pub fn has_weakening(&self) -> bool {
        self.changes.iter().any(|c| c.verdict == ChangeVerdict::Weakened)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateVerdict {
    Allow,
    RequireReview,
}

pub fn gate_verdict(diff: &SuiteDiff) -> GateVerdict {
    if diff.has_weakening() || diff.scope_reduction() {
        GateVerdict::RequireReview
    } else {
        GateVerdict::Allow
    }
}

fn normalize(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Matches cases by exact name, then by whitespace/case-normalized name;
/// repeated names pair up in order.
pub fn diff_suites(table: &MatcherTable, before: &Suite, after: &Suite) -> SuiteDiff {
    let mut diff = SuiteDiff::default();
    for (label, suite) in [("before", before), ("after", after)] {
        for (i, case) in suite.cases.iter().enumerate() {
            let first = suite.cases.iter().position(|c| c.name == case.name);
            if first != Some(i) {
                continue;
            }
            if suite.cases[i + 1..].iter().any(|c| c.name == case.name) {
                diff.warnings.push(alloc::format!(
                    "duplicate case name {:?} in {label} suite; matched by position",
                    case.name
                ));
            }
        }
    }

    let mut used = alloc::vec![false; after.cases.len()];
    let mut pairs = Vec::new();
    for case in &before.cases {
        let exact = (0..after.cases.len()).find(|&j| !used[j] && after.cases[j].name == case.name);
        let found = exact.or_else(|| {
            let key = normalize(&case.name);
            (0..after.cases.len()).find(|&j| !used[j] && normalize(&after.cases[j].name) == key)
        });
        match found {
            Some(j) => {
                used[j] = true;
                pairs.push((case, &after.cases[j]));
            }
            None => diff.removed_cases.push(case.name.clone()),
        }
    }
    diff.added_cases = after
        .cases
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(c, _)| c.name.clone())
        .collect();

    for (b, a) in pairs {
        let n = b.assertions.len().max(a.assertions.len());
        for k in 0..n {
            let (x, y) = (b.assertions.get(k), a.assertions.get(k));
            let verdict = match (x, y) {
                (Some(x), Some(y)) => compare_assertions(table, x, y),
                (Some(_), None) => ChangeVerdict::Weakened,
                (None, Some(_)) => ChangeVerdict::Strengthened,
                (None, None) => unreachable!(),
            };
            if verdict != ChangeVerdict::NoChange {
                diff.changes.push(AssertionChange {
                    case_name: b.name.clone(),
                    before: x.cloned(),
                    after: y.cloned(),
                    verdict,
                });
            }
        }
    }
    diff
}
