//! Failure origin (environment vs test logic) and the skip list that
//! isolates infrastructure-blocked features.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::num::NonZeroU32;

use regex::{Regex, RegexBuilder, RegexSet, RegexSetBuilder};
use serde::{Deserialize, Serialize};

use crate::report::ErrorEntry;
use crate::signature::{Classifier, FailureSignature, SignatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureOrigin {
    Environment,
    TestLogic,
    Unknown,
}

impl FailureOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Environment => "ENVIRONMENT",
            Self::TestLogic => "TEST_LOGIC",
            Self::Unknown => "UNKNOWN",
        }
    }
}

pub const DEFAULT_ENV_PATTERNS: &[&str] = &[
    r"econnreset",
    r"econnrefused",
    r"connection refused",
    r"auth(?:entication)? (?:timeout|timed out|expired)",
    r"(?:token|session) (?:has )?expired",
    r"page\.goto: timeout",
    r"timeout .*ms exceeded.*goto",
    r"navigation timeout",
    r"waiting for (?:navigation|load state)",
    r"net::err_",
    r"has been closed",
    r"context (?:was )?closed",
];

/// Signatures that count as test-logic evidence.
fn test_logic_signatures() -> SignatureSet {
    [
        FailureSignature::MethodContractMismatch,
        FailureSignature::SelectorReadiness,
        FailureSignature::AssertionMismatch,
        FailureSignature::VisibilityAssertion,
        FailureSignature::HallucinatedApi,
    ]
    .into_iter()
    .collect()
}

fn environment_signatures() -> SignatureSet {
    [FailureSignature::NavigationEnvTimeout, FailureSignature::ClosedContext]
        .into_iter()
        .collect()
}

/// An override: text matching `pattern` gets `origin` regardless of other evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginOverride {
    pub pattern: String,
    pub origin: FailureOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid origin pattern `{pattern}`: {message}")]
pub struct OriginPatternError {
    pub pattern: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct OriginClassifier {
    env: RegexSet,
    overrides: Vec<(Regex, FailureOrigin)>,
    signatures: Classifier,
}

impl Default for OriginClassifier {
    fn default() -> Self {
        Self::new(DEFAULT_ENV_PATTERNS, &[], Classifier::default()).expect("default patterns compile")
    }
}

impl OriginClassifier {
    pub fn new(
        env_patterns: &[&str],
        overrides: &[OriginOverride],
        signatures: Classifier,
    ) -> Result<Self, OriginPatternError> {
        let env = RegexSetBuilder::new(env_patterns)
            .case_insensitive(true)
            .build()
            .map_err(|e| OriginPatternError {
                pattern: env_patterns.join(" | "),
                message: e.to_string(),
            })?;
        let overrides = overrides
            .iter()
            .map(|o| {
                RegexBuilder::new(&o.pattern)
                    .case_insensitive(true)
                    .build()
                    .map(|re| (re, o.origin))
                    .map_err(|e| OriginPatternError {
                        pattern: o.pattern.clone(),
                        message: e.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { env, overrides, signatures })
    }

    /// ENVIRONMENT needs an environment pattern and no evidence beyond
    /// navigation/closed-context signatures; mixed evidence is TEST_LOGIC if
    /// any test-logic signature matched, otherwise UNKNOWN.
    pub fn classify_text(&self, text: &str) -> FailureOrigin {
        if let Some((_, origin)) = self.overrides.iter().find(|(re, _)| re.is_match(text)) {
            return *origin;
        }
        let sigs = self.signatures.classify_text(text);
        if self.env.is_match(text) && sigs.is_subset(environment_signatures()) {
            FailureOrigin::Environment
        } else if sigs.intersects(test_logic_signatures()) {
            FailureOrigin::TestLogic
        } else {
            FailureOrigin::Unknown
        }
    }

    pub fn classify_origin(&self, entry: &ErrorEntry) -> FailureOrigin {
        self.classify_text(&entry.raw_text)
    }

    /// Aggregate over several entries: any test-logic evidence wins, then
    /// environment, then unknown.
    pub fn classify_entries<'a>(&self, entries: impl IntoIterator<Item = &'a ErrorEntry>) -> FailureOrigin {
        let mut env = false;
        for e in entries {
            match self.classify_origin(e) {
                FailureOrigin::TestLogic => return FailureOrigin::TestLogic,
                FailureOrigin::Environment => env = true,
                FailureOrigin::Unknown => {}
            }
        }
        if env {
            FailureOrigin::Environment
        } else {
            FailureOrigin::Unknown
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub feature_id: String,
    pub reason: String,
    pub first_seen: String,
    pub hit_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SkipListError {
    #[error("feature `{0}` appears more than once in the skip list")]
    Duplicate(String),
    #[error("feature `{0}` has hit_count 0")]
    ZeroHits(String),
    #[error("feature `{0}` is not in the skip list")]
    NotSkipped(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipUpdate {
    /// Not an environment failure; nothing recorded.
    Ignored,
    /// Counted, still below the threshold.
    Pending(u32),
    /// The feature just entered the skip list.
    Skipped,
    /// Already skipped; its hit count grew.
    Hit(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pending {
    count: u32,
    reason: String,
    first_seen: String,
}

/// Skip list with per-feature environment-failure counters. It only grows;
/// [`SkipList::expire`] is the one explicit removal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipList {
    entries: Vec<SkipEntry>,
    pending: BTreeMap<String, Pending>,
    threshold: NonZeroU32,
}

impl Default for SkipList {
    fn default() -> Self {
        Self::new(NonZeroU32::MIN)
    }
}

impl SkipList {
    pub fn new(threshold: NonZeroU32) -> Self {
        Self { entries: Vec::new(), pending: BTreeMap::new(), threshold }
    }

    pub fn from_entries(entries: Vec<SkipEntry>, threshold: NonZeroU32) -> Result<Self, SkipListError> {
        for (i, e) in entries.iter().enumerate() {
            if e.hit_count == 0 {
                return Err(SkipListError::ZeroHits(e.feature_id.clone()));
            }
            if entries[..i].iter().any(|o| o.feature_id == e.feature_id) {
                return Err(SkipListError::Duplicate(e.feature_id.clone()));
            }
        }
        Ok(Self { entries, pending: BTreeMap::new(), threshold })
    }

    pub fn threshold(&self) -> NonZeroU32 {
        self.threshold
    }

    pub fn entries(&self) -> &[SkipEntry] {
        &self.entries
    }

    pub fn is_skipped(&self, feature_id: &str) -> bool {
        self.entries.iter().any(|e| e.feature_id == feature_id)
    }

    pub fn update(
        &mut self,
        feature_id: &str,
        origin: FailureOrigin,
        reason: &str,
        timestamp: &str,
    ) -> SkipUpdate {
        if origin != FailureOrigin::Environment {
            return SkipUpdate::Ignored;
        }
        if let Some(entry) = self.entries.iter_mut().find(|e| e.feature_id == feature_id) {
            entry.hit_count = entry.hit_count.saturating_add(1);
            return SkipUpdate::Hit(entry.hit_count);
        }
        let pending = self.pending.entry(feature_id.to_string()).or_insert_with(|| Pending {
            count: 0,
            reason: reason.to_string(),
            first_seen: timestamp.to_string(),
        });
        pending.count += 1;
        if pending.count < self.threshold.get() {
            return SkipUpdate::Pending(pending.count);
        }
        let pending = self.pending.remove(feature_id).expect("present");
        self.entries.push(SkipEntry {
            feature_id: feature_id.to_string(),
            reason: pending.reason,
            first_seen: pending.first_seen,
            hit_count: pending.count,
        });
        SkipUpdate::Skipped
    }

    /// Explicitly removes a feature from the list.
    pub fn expire(&mut self, feature_id: &str) -> Result<SkipEntry, SkipListError> {
        let pos = self
            .entries
            .iter()
            .position(|e| e.feature_id == feature_id)
            .ok_or_else(|| SkipListError::NotSkipped(feature_id.to_string()))?;
        Ok(self.entries.remove(pos))
    }
}
