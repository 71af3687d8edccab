//! Feature discovery bookkeeping: name tokenization, Jaccard deduplication,
//! the feature tracker and discovery-call accounting.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub const DEFAULT_ROUND_CAP: u32 = 3;

/// The default duplicate threshold, 0.6.
pub fn default_threshold() -> Ratio<u64> {
    Ratio::new(3, 5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeatureSource {
    Documentation,
    RuntimeDom,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiscoveryError {
    #[error("feature `{0}` has no name tokens")]
    EmptyName(String),
    #[error("Jaccard similarity is undefined for an empty token set")]
    EmptySet,
    #[error("threshold must lie in (0, 1]")]
    Threshold,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{rounds} rounds per screen exceeds the cap of {cap}")]
    RoundCap { rounds: u32, cap: u32 },
}

/// Lowercase tokens split on whitespace, punctuation and camel-case boundaries.
pub fn tokenize(name: &str) -> BTreeSet<String> {
    let mut tokens = BTreeSet::new();
    for word in name.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower)
                || (prev.is_alphabetic() != cur.is_alphabetic());
            if boundary {
                tokens.insert(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            tokens.insert(chars[start..].iter().collect::<String>().to_lowercase());
        }
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub feature_id: String,
    pub name_tokens: BTreeSet<String>,
    pub screen_id: String,
    pub source: FeatureSource,
}

impl Feature {
    pub fn new(
        feature_id: impl Into<String>,
        name: &str,
        screen_id: impl Into<String>,
        source: FeatureSource,
    ) -> Result<Self, DiscoveryError> {
        let feature_id = feature_id.into();
        let name_tokens = tokenize(name);
        if name_tokens.is_empty() {
            return Err(DiscoveryError::EmptyName(feature_id));
        }
        Ok(Self { feature_id, name_tokens, screen_id: screen_id.into(), source })
    }
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<Ratio<u64>, DiscoveryError> {
    if a.is_empty() || b.is_empty() {
        return Err(DiscoveryError::EmptySet);
    }
    let common = a.intersection(b).count() as u64;
    let union = (a.len() + b.len()) as u64 - common;
    Ok(Ratio::new(common, union))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedDuplicate {
    pub candidate: Feature,
    pub matched_feature_id: String,
    pub similarity: Ratio<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AddOutcome {
    Accepted,
    DuplicateOf { feature_id: String, similarity: Ratio<u64> },
}

/// Incremental dedup: each candidate is compared against every accepted feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTracker {
    threshold: Ratio<u64>,
    accepted: Vec<Feature>,
    rejected: Vec<RejectedDuplicate>,
}

impl Default for FeatureTracker {
    fn default() -> Self {
        Self::new(default_threshold()).expect("valid default")
    }
}

impl FeatureTracker {
    pub fn new(threshold: Ratio<u64>) -> Result<Self, DiscoveryError> {
        if threshold == Ratio::from_integer(0) || threshold > Ratio::from_integer(1) {
            return Err(DiscoveryError::Threshold);
        }
        Ok(Self { threshold, accepted: Vec::new(), rejected: Vec::new() })
    }

    pub fn threshold(&self) -> Ratio<u64> {
        self.threshold
    }

    pub fn accepted(&self) -> &[Feature] {
        &self.accepted
    }

    pub fn rejected(&self) -> &[RejectedDuplicate] {
        &self.rejected
    }

    /// Duplicate iff the best similarity reaches the threshold (inclusive);
    /// ties go to the earliest accepted feature.
    pub fn try_add(&mut self, candidate: Feature) -> AddOutcome {
        let mut best: Option<(usize, Ratio<u64>)> = None;
        for (i, f) in self.accepted.iter().enumerate() {
            let s = jaccard(&f.name_tokens, &candidate.name_tokens).expect("features are non-empty");
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        match best {
            Some((i, similarity)) if similarity >= self.threshold => {
                let feature_id = self.accepted[i].feature_id.clone();
                self.rejected.push(RejectedDuplicate {
                    candidate,
                    matched_feature_id: feature_id.clone(),
                    similarity,
                });
                AddOutcome::DuplicateOf { feature_id, similarity }
            }
            _ => {
                self.accepted.push(candidate);
                AddOutcome::Accepted
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveryCost {
    pub rounds_per_screen: u32,
    pub screens: u32,
    pub calls_per_round: u32,
    pub total_calls: u64,
}

pub fn discovery_accounting(
    rounds_per_screen: u32,
    screens: u32,
    calls_per_round: u32,
    round_cap: u32,
) -> Result<DiscoveryCost, DiscoveryError> {
    for (value, name) in [
        (rounds_per_screen, "rounds_per_screen"),
        (screens, "screens"),
        (calls_per_round, "calls_per_round"),
    ] {
        if value == 0 {
            return Err(DiscoveryError::NonPositive(name));
        }
    }
    if rounds_per_screen > round_cap {
        return Err(DiscoveryError::RoundCap { rounds: rounds_per_screen, cap: round_cap });
    }
    Ok(DiscoveryCost {
        rounds_per_screen,
        screens,
        calls_per_round,
        total_calls: u64::from(rounds_per_screen) * u64::from(screens) * u64::from(calls_per_round),
    })
}

/// A candidate with its ground-truth label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCandidate {
    pub feature: Feature,
    pub name: String,
    pub is_duplicate: bool,
}

const SYLLABLES: [&str; 10] = ["ba", "ke", "lo", "mi", "nu", "ra", "si", "to", "vu", "ze"];

fn word(n: usize) -> String {
    let mut w = String::new();
    for k in [n / 100 % 10, n / 10 % 10, n % 10] {
        w.push_str(SYLLABLES[k]);
    }
    w
}

/// One hundred candidates with ten planted near-duplicate clusters.
///
/// Each cluster has a three-token representative. Duplicates sit at Jaccard
/// 3/4 (16 of them), 3/5 (10) and 1/2 (4). Distinct look-alikes sit at 1/2 (12)
/// and 2/3 (4); the remaining 44 candidates share no tokens with anything.
pub fn planted_cluster_fixture() -> Vec<LabeledCandidate> {
    let mut fresh = 0usize;
    let mut next_word = || {
        fresh += 1;
        word(fresh + 99)
    };
    let mut items: Vec<(Vec<String>, bool)> = Vec::new();
    let reps: Vec<[String; 3]> = (0..10).map(|_| [next_word(), next_word(), next_word()]).collect();
    let mut others: Vec<(Vec<String>, bool)> = Vec::new();
    for k in 0..16 {
        let [a, b, c] = reps[k % 10].clone();
        others.push((alloc::vec![a, b, c, next_word()], true));
    }
    for rep in &reps {
        let [a, b, c] = rep.clone();
        others.push((alloc::vec![a, b, c, next_word(), next_word()], true));
    }
    for k in 0..4 {
        let [a, b, _] = reps[k].clone();
        others.push((alloc::vec![a, b, next_word()], true));
    }
    for k in 0..12 {
        let [a, _, c] = reps[(k + 4) % 10].clone();
        others.push((alloc::vec![a, c, next_word()], false));
    }
    for k in 0..4 {
        let [_, b, c] = reps[k + 6].clone();
        others.push((alloc::vec![b, c], false));
    }
    for k in 0..44 {
        let n = 2 + k % 2;
        others.push(((0..n).map(|_| next_word()).collect(), false));
    }
    items.extend(reps.into_iter().map(|r| (r.to_vec(), false)));
    // Deterministic interleaving of everything after the representatives.
    let n = others.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|i| (i * 37) % n);
    items.extend(order.into_iter().map(|i| others[i].clone()));

    items
        .into_iter()
        .enumerate()
        .map(|(i, (tokens, is_duplicate))| {
            let name = capitalized(&tokens.join(" "));
            LabeledCandidate {
                feature: Feature::new(
                    alloc::format!("feat-{:03}", i + 1),
                    &name,
                    alloc::format!("screen-{}", i % 7 + 1),
                    if i % 3 == 0 { FeatureSource::RuntimeDom } else { FeatureSource::Documentation },
                )
                .expect("non-empty"),
                name,
                is_duplicate,
            }
        })
        .collect()
}

fn capitalized(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    if let Some(c) = chars.next() {
        out.extend(c.to_uppercase());
    }
    out.extend(chars);
    out
}

/// Share of candidates whose accept/reject decision matches the label.
pub fn decision_accuracy(
    candidates: &[LabeledCandidate],
    threshold: Ratio<u64>,
) -> Result<Ratio<u64>, DiscoveryError> {
    if candidates.is_empty() {
        return Err(DiscoveryError::NonPositive("candidate count"));
    }
    let mut tracker = FeatureTracker::new(threshold)?;
    let correct = candidates
        .iter()
        .filter(|c| {
            let dup = matches!(tracker.try_add(c.feature.clone()), AddOutcome::DuplicateOf { .. });
            dup == c.is_duplicate
        })
        .count();
    Ok(Ratio::new(correct as u64, candidates.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn feature(id: &str, name: &str) -> Feature {
        Feature::new(id, name, "s", FeatureSource::Documentation).unwrap()
    }

    #[test]
    fn tokenization() {
        assert_eq!(tokenize("Refresh Table-Data"), set(&["refresh", "table", "data"]));
        assert_eq!(tokenize("refreshTableData"), set(&["refresh", "table", "data"]));
        assert_eq!(tokenize("HTMLExport v2"), set(&["html", "export", "v", "2"]));
        assert_eq!(tokenize("a  a  A"), set(&["a"]));
        assert!(tokenize(" -- ").is_empty());
        assert!(Feature::new("x", "!!", "s", FeatureSource::RuntimeDom).is_err());
    }

    #[test]
    fn jaccard_examples() {
        let a = set(&["refresh", "table", "data"]);
        assert_eq!(jaccard(&a, &a).unwrap(), Ratio::from_integer(1));
        assert_eq!(jaccard(&a, &set(&["x"])).unwrap(), Ratio::from_integer(0));
        assert_eq!(jaccard(&a, &set(&["refresh", "table", "grid", "data"])).unwrap(), Ratio::new(3, 4));
        assert_eq!(jaccard(&a, &BTreeSet::new()).unwrap_err(), DiscoveryError::EmptySet);
    }

    #[test]
    fn tracker_decisions() {
        let mut t = FeatureTracker::default();
        assert_eq!(t.try_add(feature("f1", "refresh table data")), AddOutcome::Accepted);
        assert_eq!(
            t.try_add(feature("f2", "refresh table grid data")),
            AddOutcome::DuplicateOf { feature_id: "f1".into(), similarity: Ratio::new(3, 4) }
        );
        // Exactly at the threshold is a duplicate.
        assert_eq!(
            t.try_add(feature("f3", "refresh table data export csv")),
            AddOutcome::DuplicateOf { feature_id: "f1".into(), similarity: Ratio::new(3, 5) }
        );
        assert_eq!(t.rejected().len(), 2);
        assert_eq!(t.try_add(feature("f4", "open settings")), AddOutcome::Accepted);
    }

    #[test]
    fn ties_go_to_earliest() {
        let mut t = FeatureTracker::new(Ratio::new(1, 3)).unwrap();
        t.try_add(feature("a", "alpha beta"));
        t.try_add(feature("b", "gamma delta"));
        assert_eq!(
            t.try_add(feature("c", "alpha gamma")),
            AddOutcome::DuplicateOf { feature_id: "a".into(), similarity: Ratio::new(1, 3) }
        );
    }

    #[test]
    fn threshold_bounds() {
        assert!(FeatureTracker::new(Ratio::from_integer(0)).is_err());
        assert!(FeatureTracker::new(Ratio::new(3, 2)).is_err());
        assert!(FeatureTracker::new(Ratio::from_integer(1)).is_ok());
    }

    #[test]
    fn accounting() {
        assert_eq!(discovery_accounting(1, 1, 1, DEFAULT_ROUND_CAP).unwrap().total_calls, 1);
        assert!(matches!(
            discovery_accounting(4, 1, 1, DEFAULT_ROUND_CAP),
            Err(DiscoveryError::RoundCap { rounds: 4, cap: 3 })
        ));
        assert!(discovery_accounting(1, 0, 1, DEFAULT_ROUND_CAP).is_err());
        let multi = discovery_accounting(3, 11, 1, DEFAULT_ROUND_CAP).unwrap().total_calls;
        let single = discovery_accounting(1, 11, 1, DEFAULT_ROUND_CAP).unwrap().total_calls;
        // Roughly three times the calls of a single-query pass.
        assert_eq!(single, 11);
        assert!((multi as f64 / single as f64 - 34.0 / 11.0).abs() < 0.2);
    }

    #[test]
    fn planted_fixture_shape_and_accuracy() {
        let fixture = planted_cluster_fixture();
        assert_eq!(fixture.len(), 100);
        assert_eq!(fixture.iter().filter(|c| c.is_duplicate).count(), 30);
        let acc = |n, d| decision_accuracy(&fixture, Ratio::new(n, d)).unwrap();
        assert_eq!(acc(3, 5), Ratio::new(92, 100));
        assert_eq!(acc(1, 2), Ratio::new(84, 100));
        assert_eq!(acc(7, 10), Ratio::new(86, 100));
        assert_eq!(planted_cluster_fixture(), fixture);
    }

    #[test]
    fn dedup_is_order_sensitive() {
        // A chain a~b~c with a≁c: which representative survives changes the count.
        let a = feature("a", "alpha beta gamma");
        let b = feature("b", "beta gamma delta");
        let c = feature("c", "gamma delta epsilon");
        let count = |order: &[&Feature]| {
            let mut t = FeatureTracker::new(Ratio::new(1, 2)).unwrap();
            for f in order {
                t.try_add((*f).clone());
            }
            t.accepted().len()
        };
        assert_eq!(count(&[&a, &b, &c]), 2);
        assert_eq!(count(&[&b, &a, &c]), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn candidates() -> impl Strategy<Value = Vec<Feature>> {
            prop::collection::vec(prop::collection::btree_set(0usize..8, 1..4), 1..=50).prop_map(|sets| {
                sets.into_iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let name: Vec<String> = s.into_iter().map(word).collect();
                        feature(&alloc::format!("f{i}"), &name.join(" "))
                    })
                    .collect()
            })
        }

        /// Greedy dedup written directly over sets.
        fn oracle(features: &[Feature], threshold: Ratio<u64>) -> Vec<String> {
            let mut kept: Vec<&Feature> = Vec::new();
            for f in features {
                let dup = kept.iter().any(|k| {
                    let inter = k.name_tokens.intersection(&f.name_tokens).count() as u64;
                    let union = k.name_tokens.union(&f.name_tokens).count() as u64;
                    Ratio::new(inter, union) >= threshold
                });
                if !dup {
                    kept.push(f);
                }
            }
            kept.iter().map(|f| f.feature_id.clone()).collect()
        }

        proptest! {
            #[test]
            fn tracker_matches_oracle_and_invariant(mut fs in candidates(), seed in any::<u64>(), t in prop::sample::select(vec![(1u64, 2u64), (3, 5), (7, 10)])) {
                let threshold = Ratio::new(t.0, t.1);
                // Random permutation from the seed.
                let mut s = seed;
                for i in (1..fs.len()).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    fs.swap(i, (s >> 33) as usize % (i + 1));
                }
                let mut tracker = FeatureTracker::new(threshold).unwrap();
                for f in &fs {
                    tracker.try_add(f.clone());
                }
                let ids: Vec<String> = tracker.accepted().iter().map(|f| f.feature_id.clone()).collect();
                prop_assert_eq!(ids, oracle(&fs, threshold));
                for (i, a) in tracker.accepted().iter().enumerate() {
                    for b in &tracker.accepted()[i + 1..] {
                        prop_assert!(jaccard(&a.name_tokens, &b.name_tokens).unwrap() < threshold);
                    }
                }
                for r in tracker.rejected() {
                    prop_assert!(r.similarity >= threshold);
                }
            }

            #[test]
            fn jaccard_symmetric_and_one_iff_equal(a in prop::collection::btree_set("[a-d]", 1..4), b in prop::collection::btree_set("[a-d]", 1..4)) {
                let (a, b): (BTreeSet<String>, BTreeSet<String>) = (a, b);
                prop_assert_eq!(jaccard(&a, &b).unwrap(), jaccard(&b, &a).unwrap());
                prop_assert_eq!(jaccard(&a, &b).unwrap() == Ratio::from_integer(1), a == b);
            }
        }
    }
}
