//! Multi-label failure-signature classification.
//!
//! Error text is matched against a rule table of case-insensitive regular
//! expressions. Matching is multi-label: an entry gets every signature with at
//! least one matching pattern, so rule order never matters.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_rational::Ratio;
use regex::{Regex, RegexSet, RegexSetBuilder};
use serde::{Deserialize, Serialize};

use crate::report::{Corpus, ErrorEntry, ExecutionReport, ReportStatus};

/// The eight failure signatures, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureSignature {
    MethodContractMismatch,
    NavigationEnvTimeout,
    SelectorReadiness,
    AssertionMismatch,
    NonExecutableOutput,
    VisibilityAssertion,
    ClosedContext,
    HallucinatedApi,
}

impl FailureSignature {
    pub const ALL: [Self; 8] = [
        Self::MethodContractMismatch,
        Self::NavigationEnvTimeout,
        Self::SelectorReadiness,
        Self::AssertionMismatch,
        Self::NonExecutableOutput,
        Self::VisibilityAssertion,
        Self::ClosedContext,
        Self::HallucinatedApi,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MethodContractMismatch => "METHOD_CONTRACT_MISMATCH",
            Self::NavigationEnvTimeout => "NAVIGATION_ENV_TIMEOUT",
            Self::SelectorReadiness => "SELECTOR_READINESS",
            Self::AssertionMismatch => "ASSERTION_MISMATCH",
            Self::NonExecutableOutput => "NON_EXECUTABLE_OUTPUT",
            Self::VisibilityAssertion => "VISIBILITY_ASSERTION",
            Self::ClosedContext => "CLOSED_CONTEXT",
            Self::HallucinatedApi => "HALLUCINATED_API",
        }
    }

    /// Human-readable row label.
    pub fn label(self) -> &'static str {
        match self {
            Self::MethodContractMismatch => "Method/contract mismatch",
            Self::NavigationEnvTimeout => "Navigation/env. timeout",
            Self::SelectorReadiness => "Selector/readiness failure",
            Self::AssertionMismatch => "Assertion mismatch",
            Self::NonExecutableOutput => "Non-executable output",
            Self::VisibilityAssertion => "Visibility assertion failure",
            Self::ClosedContext => "Closed browser/context",
            Self::HallucinatedApi => "Hallucinated API or selector",
        }
    }

    /// Signatures that point at the environment rather than the test.
    pub fn is_environmental(self) -> bool {
        matches!(self, Self::NavigationEnvTimeout | Self::ClosedContext)
    }
}

impl fmt::Display for FailureSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown failure signature `{0}`")]
pub struct UnknownSignature(pub String);

impl FromStr for FailureSignature {
    type Err = UnknownSignature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|sig| sig.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownSignature(s.to_string()))
    }
}

/// A set of signatures, stored as a bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignatureSet(u8);

impl SignatureSet {
    pub const EMPTY: Self = Self(0);

    pub fn insert(&mut self, sig: FailureSignature) {
        self.0 |= 1 << sig.index();
    }

    pub fn remove(&mut self, sig: FailureSignature) {
        self.0 &= !(1 << sig.index());
    }

    pub fn contains(self, sig: FailureSignature) -> bool {
        self.0 & (1 << sig.index()) != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = FailureSignature> {
        FailureSignature::ALL
            .into_iter()
            .filter(move |sig| self.contains(*sig))
    }
}

impl FromIterator<FailureSignature> for SignatureSet {
    fn from_iter<I: IntoIterator<Item = FailureSignature>>(iter: I) -> Self {
        let mut set = Self::EMPTY;
        for sig in iter {
            set.insert(sig);
        }
        set
    }
}

impl fmt::Debug for SignatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for SignatureSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for SignatureSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let list = Vec::<FailureSignature>::deserialize(deserializer)?;
        Ok(list.into_iter().collect())
    }
}

/// One row of the rule table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureRule {
    pub signature: FailureSignature,
    pub patterns: Vec<String>,
    /// Documentation only; matching is multi-label.
    #[serde(default)]
    pub priority: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule for {0} has no patterns")]
    NoPatterns(FailureSignature),
    #[error("rule for {0} has an empty pattern")]
    EmptyPattern(FailureSignature),
    #[error("no rule covers {0}")]
    Uncovered(FailureSignature),
    #[error("invalid pattern for {signature}: {message}")]
    InvalidPattern {
        signature: FailureSignature,
        message: String,
    },
}

const DEFAULT_PATTERNS: [(FailureSignature, &[&str]); 8] = [
    (
        FailureSignature::MethodContractMismatch,
        &[
            r"is not a function",
            r"has no attribute",
            r"expected \d+ arguments?, but got \d+",
            r"property '[^']*' does not exist on type",
            r"cannot read propert(?:y|ies) of (?:undefined|null)",
            r"'nonetype' object",
        ],
    ),
    (
        FailureSignature::NavigationEnvTimeout,
        &[
            r"page\.goto: timeout \d+ms exceeded",
            r"timeout .*ms exceeded.*goto",
            r"navigation timeout",
            r"waiting for (?:navigation|load state)",
            r"networkidle",
            r"econnreset",
            r"econnrefused",
            r"net::",
            r"connection refused",
        ],
    ),
    (
        FailureSignature::SelectorReadiness,
        &[
            r"waiting for (?:locator|selector)",
            r"locator\.[a-z]+: timeout \d+ms exceeded",
            r"strict mode violation",
            r"element is not (?:attached|stable|enabled)",
            r"intercepts pointer events",
        ],
    ),
    (
        FailureSignature::AssertionMismatch,
        &[
            r"expect\((?:received|locator)\)\.(?:not\.)?(?:tobe|toequal|tostrictequal|tohavetext|tocontaintext|tocontain|tohavecount|tohavevalue)\(",
            r"assertionerror",
        ],
    ),
    (
        FailureSignature::NonExecutableOutput,
        &[
            r"could not extract code from llm response",
            r"test file path not found",
            r"no executable test artifact",
        ],
    ),
    (
        FailureSignature::VisibilityAssertion,
        &[
            r"\.(?:not\.)?tobevisible\(",
            r"\.(?:not\.)?tobehidden\(",
            r"element is not visible",
        ],
    ),
    (
        FailureSignature::ClosedContext,
        &[
            r"target page, context or browser has been closed",
            r"browser has been closed",
            r"context (?:was |has been )?closed",
        ],
    ),
    (
        FailureSignature::HallucinatedApi,
        &[
            r"matched 0 elements in (?:the )?dom snapshot",
            r"(?:does not exist|is not defined) in (?:the )?(?:codebase|page object)",
            r"hallucinated (?:selector|api|method)",
        ],
    ),
];

/// The shipped rule table.
pub fn default_rules() -> Vec<SignatureRule> {
    DEFAULT_PATTERNS
        .iter()
        .enumerate()
        .map(|(priority, (signature, patterns))| SignatureRule {
            signature: *signature,
            patterns: patterns.iter().map(|p| p.to_string()).collect(),
            priority: priority as u32,
        })
        .collect()
}

/// Captures page-object identifiers from method-missing errors.
const METHOD_IDENTIFIER_PATTERNS: &[&str] = &[
    r"(?:^|[^\w$])([A-Za-z_$][\w$]*) is not a function",
    r"property '([^']+)' does not exist on type",
];

/// Denominator for [`Classifier::mean_cooccurrence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CooccurrenceDenominator {
    /// Reports carrying at least one signature.
    #[default]
    SignatureBearing,
    /// Every report in the corpus.
    AllReports,
}

/// Compiled rule table.
#[derive(Debug, Clone)]
pub struct Classifier {
    sets: Vec<(FailureSignature, RegexSet)>,
    method_identifiers: Vec<Regex>,
    known_symbols: Option<BTreeSet<String>>,
}

impl Default for Classifier {
    fn default() -> Self {
        Self::new(&default_rules()).expect("default rule table compiles")
    }
}

impl Classifier {
    pub fn new(rules: &[SignatureRule]) -> Result<Self, RuleError> {
        let mut grouped: BTreeMap<FailureSignature, Vec<&str>> = BTreeMap::new();
        for rule in rules {
            if rule.patterns.is_empty() {
                return Err(RuleError::NoPatterns(rule.signature));
            }
            if rule.patterns.iter().any(|p| p.trim().is_empty()) {
                return Err(RuleError::EmptyPattern(rule.signature));
            }
            grouped
                .entry(rule.signature)
                .or_default()
                .extend(rule.patterns.iter().map(String::as_str));
        }
        if let Some(missing) = FailureSignature::ALL
            .into_iter()
            .find(|sig| !grouped.contains_key(sig))
        {
            return Err(RuleError::Uncovered(missing));
        }
        let mut sets = Vec::with_capacity(grouped.len());
        for (signature, patterns) in grouped {
            let set = RegexSetBuilder::new(patterns)
                .case_insensitive(true)
                .build()
                .map_err(|e| RuleError::InvalidPattern {
                    signature,
                    message: e.to_string(),
                })?;
            sets.push((signature, set));
        }
        let method_identifiers = METHOD_IDENTIFIER_PATTERNS
            .iter()
            .map(|p| Regex::new(p).expect("identifier pattern compiles"))
            .collect();
        Ok(Self {
            sets,
            method_identifiers,
            known_symbols: None,
        })
    }

    /// Enables the hallucination check: a method-missing error whose identifier
    /// is absent from `symbols` additionally gets [`FailureSignature::HallucinatedApi`].
    pub fn with_known_symbols(mut self, symbols: impl IntoIterator<Item = String>) -> Self {
        self.known_symbols = Some(symbols.into_iter().collect());
        self
    }

    pub fn classify_text(&self, text: &str) -> SignatureSet {
        let mut found = SignatureSet::EMPTY;
        for (signature, set) in &self.sets {
            if set.is_match(text) {
                found.insert(*signature);
            }
        }
        if let Some(known) = &self.known_symbols {
            if found.contains(FailureSignature::MethodContractMismatch)
                && self.unknown_identifier(text, known)
            {
                found.insert(FailureSignature::HallucinatedApi);
            }
        }
        found
    }

    fn unknown_identifier(&self, text: &str, known: &BTreeSet<String>) -> bool {
        self.method_identifiers.iter().any(|re| {
            re.captures_iter(text)
                .filter_map(|c| c.get(1))
                .any(|m| !known.contains(m.as_str()))
        })
    }

    pub fn classify_entry(&self, entry: &ErrorEntry) -> SignatureSet {
        self.classify_text(&entry.raw_text)
    }

    /// Union over the report's error entries; a NO_ARTIFACT report always
    /// carries [`FailureSignature::NonExecutableOutput`].
    pub fn classify_report(&self, report: &ExecutionReport) -> SignatureSet {
        let mut found = report
            .error_entries
            .iter()
            .fold(SignatureSet::EMPTY, |acc, e| acc.union(self.classify_entry(e)));
        if report.status == ReportStatus::NoArtifact {
            found.insert(FailureSignature::NonExecutableOutput);
        }
        found
    }

    /// Number of reports each signature appears in.
    pub fn signature_histogram(&self, corpus: &Corpus) -> SignatureCounts {
        let mut counts = SignatureCounts::default();
        for report in corpus.reports() {
            counts.add(self.classify_report(report));
        }
        counts
    }

    /// Mean number of distinct signatures per report; 0 when the denominator is empty.
    pub fn mean_cooccurrence(
        &self,
        corpus: &Corpus,
        denominator: CooccurrenceDenominator,
    ) -> Ratio<u64> {
        let mut appearances = 0u64;
        let mut bearing = 0u64;
        for report in corpus.reports() {
            let n = self.classify_report(report).len() as u64;
            appearances += n;
            bearing += u64::from(n > 0);
        }
        let denom = match denominator {
            CooccurrenceDenominator::SignatureBearing => bearing,
            CooccurrenceDenominator::AllReports => corpus.len() as u64,
        };
        if denom == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(appearances, denom)
        }
    }
}

/// Report counts per signature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SignatureCounts([u64; 8]);

impl SignatureCounts {
    pub fn add(&mut self, set: SignatureSet) {
        for sig in set.iter() {
            self.0[sig.index()] += 1;
        }
    }

    pub fn get(&self, sig: FailureSignature) -> u64 {
        self.0[sig.index()]
    }

    /// Counts in table order.
    pub fn as_array(&self) -> [u64; 8] {
        self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FailureSignature, u64)> + '_ {
        FailureSignature::ALL.into_iter().map(|s| (s, self.get(s)))
    }
}

impl Serialize for SignatureCounts {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.iter().map(|(s, n)| (s.as_str(), n)))
    }
}

/// Representative error messages per signature, each of which the default
/// rule table classifies as exactly that one signature. Used to synthesize
/// corpora.
pub fn message_catalog(sig: FailureSignature) -> &'static [&'static str] {
    match sig {
        FailureSignature::MethodContractMismatch => &[
            "TypeError: Cannot read properties of undefined (reading 'rowCount')",
            "error TS2554: Expected 2 arguments, but got 1.",
            "error TS2339: Property 'selectedRows' does not exist on type 'TablePage'.",
        ],
        FailureSignature::NavigationEnvTimeout => &[
            "page.goto: Timeout 60000ms exceeded.",
            "page.waitForLoadState: Timeout 30000ms exceeded while waiting for networkidle",
            "page.goto: net::ERR_CONNECTION_RESET at /app/detail",
            "Error: read ECONNRESET",
        ],
        FailureSignature::SelectorReadiness => &[
            "locator.click: Timeout 30000ms exceeded.",
            "Error: strict mode violation: getByRole('row') resolved to 14 elements",
            "waiting for locator('[data-test=refresh-button]') to be enabled",
        ],
        FailureSignature::AssertionMismatch => &[
            "Error: expect(received).toBe(expected) // Object.is equality. Expected: 5 Received: 3",
            "Error: expect(locator).toHaveText(expected) failed",
            "Error: expect(received).toEqual(expected) // deep equality",
        ],
        FailureSignature::NonExecutableOutput => &[
            "Could not extract code from LLM response",
            "Test file path not found",
        ],
        FailureSignature::VisibilityAssertion => &[
            "Error: expect(locator).toBeVisible() failed",
            "Timed out 5000ms waiting for expect(locator).toBeVisible()",
        ],
        FailureSignature::ClosedContext => &[
            "locator.click: Target page, context or browser has been closed",
            "browserContext.newPage: Browser has been closed",
        ],
        FailureSignature::HallucinatedApi => &[
            "verify_selector: [data-test=bulk-export-trigger] matched 0 elements in DOM snapshot",
            "verify_selector: role=button[name=Execute Now] matched 0 elements in DOM snapshot",
            "verify_selector: [data-test=row-select-all] matched 0 elements in DOM snapshot",
            "page-object method filterByOwner does not exist in codebase",
            "page-object method navigateToDetails does not exist in codebase",
            "page-object method openStatusMenu does not exist in codebase",
        ],
    }
}

/// Internal repair-state corruption seen when self-correction runs without an artifact.
pub const REPAIR_STATE_CORRUPTION: &str =
    "AttributeError: 'NoneType' object has no attribute 'fixed_code'";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::tests::report;
    use crate::report::Stage;
    use alloc::vec;

    fn entry(text: &str) -> ErrorEntry {
        ErrorEntry::new(text, Stage::Executor)
    }

    fn set(sigs: &[FailureSignature]) -> SignatureSet {
        sigs.iter().copied().collect()
    }

    #[test]
    fn verbatim_messages_classify() {
        let c = Classifier::default();
        assert_eq!(
            c.classify_entry(&entry("Could not extract code from LLM response")),
            set(&[FailureSignature::NonExecutableOutput])
        );
        assert_eq!(
            c.classify_entry(&entry("Target page, context or browser has been closed")),
            set(&[FailureSignature::ClosedContext])
        );
        assert_eq!(
            c.classify_entry(&entry("page.goto: Timeout 60000ms exceeded")),
            set(&[FailureSignature::NavigationEnvTimeout])
        );
        assert_eq!(c.classify_entry(&entry("unrelated info line")), SignatureSet::EMPTY);
    }

    #[test]
    fn catalog_messages_classify_as_exactly_their_signature() {
        let c = Classifier::default();
        for sig in FailureSignature::ALL {
            for msg in message_catalog(sig) {
                assert_eq!(c.classify_text(msg), set(&[sig]), "{msg}");
            }
        }
        assert_eq!(
            c.classify_text(REPAIR_STATE_CORRUPTION),
            set(&[FailureSignature::MethodContractMismatch])
        );
    }

    #[test]
    fn no_artifact_implies_non_executable() {
        let c = Classifier::default();
        let r = report(0, "f", 0, ReportStatus::NoArtifact);
        assert_eq!(c.classify_report(&r), set(&[FailureSignature::NonExecutableOutput]));
    }

    #[test]
    fn co_occurring_entries_union() {
        let c = Classifier::default();
        let mut r = report(0, "f", 0, ReportStatus::Failed);
        r.error_entries = vec![
            entry("page.goto: Timeout 60000ms exceeded."),
            entry("browserContext.newPage: Browser has been closed"),
        ];
        assert_eq!(
            c.classify_report(&r),
            set(&[
                FailureSignature::NavigationEnvTimeout,
                FailureSignature::ClosedContext
            ])
        );
        let clean = report(1, "f", 0, ReportStatus::Completed);
        assert!(c.classify_report(&clean).is_empty());
    }

    #[test]
    fn histogram_counts_reports_not_entries() {
        let c = Classifier::default();
        let mut r = report(0, "f", 0, ReportStatus::Failed);
        r.error_entries = vec![
            entry("page.goto: Timeout 60000ms exceeded."),
            entry("Error: read ECONNRESET"),
            entry("page.goto: net::ERR_CONNECTION_RESET at /x"),
        ];
        let corpus = Corpus::new(vec![r]).unwrap();
        let h = c.signature_histogram(&corpus);
        assert_eq!(h.get(FailureSignature::NavigationEnvTimeout), 1);
        assert_eq!(h.total(), 1);
        let empty = c.signature_histogram(&Corpus::default());
        assert_eq!(empty.as_array(), [0; 8]);
    }

    #[test]
    fn cooccurrence_guards_and_means() {
        let c = Classifier::default();
        assert_eq!(
            c.mean_cooccurrence(&Corpus::default(), CooccurrenceDenominator::SignatureBearing),
            Ratio::from_integer(0)
        );
        let mut r = report(0, "f", 0, ReportStatus::Failed);
        r.error_entries = vec![
            entry("page.goto: Timeout 60000ms exceeded."),
            entry("Error: expect(locator).toBeVisible() failed"),
        ];
        let corpus = Corpus::new(vec![r, report(1, "f", 0, ReportStatus::Completed)]).unwrap();
        assert_eq!(
            c.mean_cooccurrence(&corpus, CooccurrenceDenominator::SignatureBearing),
            Ratio::from_integer(2)
        );
        assert_eq!(
            c.mean_cooccurrence(&corpus, CooccurrenceDenominator::AllReports),
            Ratio::from_integer(1)
        );
    }

    #[test]
    fn known_symbols_flag_hallucinated_methods() {
        let text = "TypeError: tablePage.filterByOwner is not a function";
        let plain = Classifier::default();
        assert_eq!(
            plain.classify_text(text),
            set(&[FailureSignature::MethodContractMismatch])
        );
        let grounded = Classifier::default()
            .with_known_symbols(["openDetails".to_string(), "refresh".to_string()]);
        assert_eq!(
            grounded.classify_text(text),
            set(&[
                FailureSignature::MethodContractMismatch,
                FailureSignature::HallucinatedApi
            ])
        );
        let known = Classifier::default().with_known_symbols(["filterByOwner".to_string()]);
        assert_eq!(
            known.classify_text(text),
            set(&[FailureSignature::MethodContractMismatch])
        );
    }

    #[test]
    fn rule_table_validation() {
        let mut rules = default_rules();
        rules.pop();
        assert_eq!(
            Classifier::new(&rules).unwrap_err(),
            RuleError::Uncovered(FailureSignature::HallucinatedApi)
        );
        let mut rules = default_rules();
        rules[0].patterns.clear();
        assert!(matches!(Classifier::new(&rules), Err(RuleError::NoPatterns(_))));
        let mut rules = default_rules();
        rules[0].patterns.push("(".into());
        assert!(matches!(
            Classifier::new(&rules),
            Err(RuleError::InvalidPattern { .. })
        ));
    }

    #[test]
    fn signature_names_round_trip() {
        for sig in FailureSignature::ALL {
            assert_eq!(sig.as_str().parse::<FailureSignature>().unwrap(), sig);
        }
        assert!("NOPE".parse::<FailureSignature>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn catalog_text() -> impl Strategy<Value = String> {
            let all: Vec<&'static str> = FailureSignature::ALL
                .iter()
                .flat_map(|s| message_catalog(*s).iter().copied())
                .chain(["unrelated", "INFO started worker"])
                .collect();
            proptest::sample::select(all).prop_map(String::from)
        }

        proptest! {
            #[test]
            fn extra_rules_never_remove_labels(text in catalog_text(), extra in "[a-z]{3,8}", target in 0usize..8) {
                let base = Classifier::default().classify_text(&text);
                let mut rules = default_rules();
                rules.push(SignatureRule {
                    signature: FailureSignature::ALL[target],
                    patterns: vec![extra],
                    priority: 99,
                });
                let extended = Classifier::new(&rules).unwrap().classify_text(&text);
                prop_assert!(base.is_subset(extended));
            }

            #[test]
            fn entry_order_does_not_matter(texts in proptest::collection::vec(catalog_text(), 0..6), seed in any::<u64>()) {
                let c = Classifier::default();
                let mut r = report(0, "f", 0, ReportStatus::Failed);
                r.error_entries = texts.iter().map(|t| entry(t)).collect();
                let forward = c.classify_report(&r);
                let n = r.error_entries.len();
                if n > 1 {
                    r.error_entries.rotate_left((seed as usize) % n);
                }
                r.error_entries.reverse();
                prop_assert_eq!(forward, c.classify_report(&r));
            }
        }
    }
}
