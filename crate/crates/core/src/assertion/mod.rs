//! Assertion strength: a restricted test-script parser, a matcher-strength
//! lattice and suite diffs that flag weakened assertions and deleted cases.
//!
//! Scripts are read in a restricted grammar: `test("name", ...)` blocks
//! containing `expect(<subject>)[.not].<matcher>(<args>)` statements. Anything
//! else is opaque.

mod diff;
mod parse;

pub use diff::{diff_suites, gate_verdict, AssertionChange, GateVerdict, SuiteDiff};
pub use parse::{parse_test_script, ParseError};

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Matcher strength, ordered `Truthy < Existence < Structural < Exact`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rank {
    Truthy = 1,
    Existence = 2,
    Structural = 3,
    Exact = 4,
}

/// How argument changes within one matcher (or matcher family) are judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgRule {
    /// Any literal change is incomparable.
    #[default]
    Plain,
    /// Containment: a shorter expected substring, or a regex instead of a string, loosens.
    Substring,
    /// Text equality: a regex instead of a string loosens.
    Text,
    /// Exact element count; a lower bound of at most that count loosens.
    Count,
    LowerExclusive,
    LowerInclusive,
    UpperExclusive,
    UpperInclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatcherSpec {
    pub name: String,
    pub rank: Rank,
    pub min_args: usize,
    pub max_args: usize,
    #[serde(default)]
    pub rule: ArgRule,
    /// A matcher this one strictly refines: switching to it with the same
    /// arguments loosens the assertion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refines: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatcherTableError {
    #[error("matcher `{0}` is listed more than once")]
    Duplicate(String),
    #[error("matcher `{0}` has min_args greater than max_args")]
    Arity(String),
    #[error("matcher `{0}` refines unknown matcher `{1}`")]
    UnknownRefinement(String, String),
}

/// The matcher-strength table. Deployments may extend it; unknown matchers
/// are rejected at parse time rather than silently ranked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MatcherSpec>", into = "Vec<MatcherSpec>")]
pub struct MatcherTable {
    matchers: Vec<MatcherSpec>,
}

impl TryFrom<Vec<MatcherSpec>> for MatcherTable {
    type Error = MatcherTableError;

    fn try_from(matchers: Vec<MatcherSpec>) -> Result<Self, Self::Error> {
        Self::new(matchers)
    }
}

impl From<MatcherTable> for Vec<MatcherSpec> {
    fn from(table: MatcherTable) -> Self {
        table.matchers
    }
}

impl Default for MatcherTable {
    fn default() -> Self {
        use ArgRule::*;
        use Rank::*;
        let spec = |name: &str, rank, min_args, max_args, rule, refines: Option<&str>| MatcherSpec {
            name: name.to_string(),
            rank,
            min_args,
            max_args,
            rule,
            refines: refines.map(str::to_string),
        };
        Self::new(alloc::vec![
            spec("toBe", Exact, 1, 1, Plain, None),
            spec("toEqual", Exact, 1, 1, Plain, None),
            spec("toStrictEqual", Exact, 1, 1, Plain, Some("toEqual")),
            spec("toContain", Structural, 1, 1, Substring, None),
            spec("toContainText", Structural, 1, 2, Substring, None),
            spec("toHaveText", Structural, 1, 2, Text, Some("toContainText")),
            spec("toHaveCount", Structural, 1, 2, Count, None),
            spec("toBeGreaterThan", Structural, 1, 1, LowerExclusive, None),
            spec("toBeGreaterThanOrEqual", Structural, 1, 1, LowerInclusive, None),
            spec("toBeLessThan", Structural, 1, 1, UpperExclusive, None),
            spec("toBeLessThanOrEqual", Structural, 1, 1, UpperInclusive, None),
            spec("toBeVisible", Existence, 0, 1, Plain, None),
            spec("toBeDefined", Existence, 0, 0, Plain, None),
            spec("toBeAttached", Existence, 0, 1, Plain, None),
            spec("toBeTruthy", Truthy, 0, 0, Plain, None),
            spec("toBeFalsy", Truthy, 0, 0, Plain, None),
        ])
        .expect("default matcher table is valid")
    }
}

impl MatcherTable {
    pub fn new(matchers: Vec<MatcherSpec>) -> Result<Self, MatcherTableError> {
        for (i, m) in matchers.iter().enumerate() {
            if matchers[..i].iter().any(|o| o.name == m.name) {
                return Err(MatcherTableError::Duplicate(m.name.clone()));
            }
            if m.min_args > m.max_args {
                return Err(MatcherTableError::Arity(m.name.clone()));
            }
        }
        for m in &matchers {
            if let Some(target) = &m.refines {
                if !matchers.iter().any(|o| &o.name == target) {
                    return Err(MatcherTableError::UnknownRefinement(
                        m.name.clone(),
                        target.clone(),
                    ));
                }
            }
        }
        Ok(Self { matchers })
    }

    pub fn get(&self, name: &str) -> Option<&MatcherSpec> {
        self.matchers.iter().find(|m| m.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.matchers.iter().map(|m| m.name.as_str())
    }

    pub fn rank(&self, name: &str) -> Option<Rank> {
        self.get(name).map(|m| m.rank)
    }
}

/// A literal matcher argument. Anything that is not a plain literal is kept
/// as opaque expression text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Literal {
    Number(String),
    Str(String),
    Regex { pattern: String, flags: String },
    Bool(bool),
    Null,
    Undefined,
    Expr(String),
}

impl Literal {
    fn as_number(&self) -> Option<f64> {
        match self {
            Self::Number(text) => parse_number(text),
            _ => None,
        }
    }
}

fn parse_number(text: &str) -> Option<f64> {
    let t: String = text.chars().filter(|c| *c != '_').collect();
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        return u64::from_str_radix(hex, 16).ok().map(|v| v as f64);
    }
    t.parse::<f64>().ok()
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Number(n) => f.write_str(n),
            Self::Str(s) => write!(f, "{s:?}"),
            Self::Regex { pattern, flags } => write!(f, "/{pattern}/{flags}"),
            Self::Bool(b) => write!(f, "{b}"),
            Self::Null => f.write_str("null"),
            Self::Undefined => f.write_str("undefined"),
            Self::Expr(e) => f.write_str(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssertionAst {
    /// Subject expression, whitespace-normalized.
    pub subject: String,
    pub matcher: String,
    pub arguments: Vec<Literal>,
    pub negated: bool,
    pub line: usize,
}

impl AssertionAst {
    /// Equality ignoring source position.
    pub fn same_as(&self, other: &Self) -> bool {
        self.subject == other.subject
            && self.matcher == other.matcher
            && self.arguments == other.arguments
            && self.negated == other.negated
    }
}

impl fmt::Display for AssertionAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expect({})", self.subject)?;
        if self.negated {
            f.write_str(".not")?;
        }
        write!(f, ".{}(", self.matcher)?;
        for (i, arg) in self.arguments.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    pub line: usize,
    pub assertions: Vec<AssertionAst>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suite {
    pub cases: Vec<TestCase>,
}

impl Suite {
    pub fn assertion_count(&self) -> usize {
        self.cases.iter().map(|c| c.assertions.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChangeVerdict {
    NoChange,
    Strengthened,
    Weakened,
    Incomparable,
}

/// Judges `after` against `before`.
pub fn compare_assertions(
    table: &MatcherTable,
    before: &AssertionAst,
    after: &AssertionAst,
) -> ChangeVerdict {
    if before.subject != after.subject {
        return ChangeVerdict::Incomparable;
    }
    if before.same_as(after) {
        return ChangeVerdict::NoChange;
    }
    if loosens(table, before, after) {
        ChangeVerdict::Weakened
    } else if loosens(table, after, before) {
        ChangeVerdict::Strengthened
    } else {
        ChangeVerdict::Incomparable
    }
}

/// True when `after` accepts strictly more outcomes than `before` under one
/// of the documented rules. Every rule is asymmetric, which makes
/// [`compare_assertions`] antisymmetric by construction.
fn loosens(table: &MatcherTable, before: &AssertionAst, after: &AssertionAst) -> bool {
    let (Some(b), Some(a)) = (table.get(&before.matcher), table.get(&after.matcher)) else {
        return false;
    };
    match (before.negated, after.negated) {
        (false, false) => {
            a.rank < b.rank
                || (a.rank == b.rank && positive_same_rank_loosens(b, a, before, after))
        }
        (true, true) => {
            a.rank > b.rank
                || (a.rank == b.rank && positive_same_rank_loosens(a, b, after, before))
        }
        // Flipping a specific check into its negation accepts almost everything.
        (false, true) => {
            b.name == a.name && before.arguments == after.arguments && b.rank >= Rank::Structural
        }
        (true, false) => false,
    }
}

/// Same-rank loosening for positive assertions: `after` accepts strictly more.
fn positive_same_rank_loosens(
    b: &MatcherSpec,
    a: &MatcherSpec,
    before: &AssertionAst,
    after: &AssertionAst,
) -> bool {
    let same_extra_args = before.arguments.get(1..) == after.arguments.get(1..);
    if b.name == a.name {
        let (Some(x), Some(y)) = (before.arguments.first(), after.arguments.first()) else {
            return false;
        };
        if !same_extra_args {
            return false;
        }
        return match b.rule {
            ArgRule::Substring => match (x, y) {
                (Literal::Str(x), Literal::Str(y)) => x != y && x.contains(y.as_str()),
                (Literal::Str(_), Literal::Regex { .. }) => true,
                _ => false,
            },
            ArgRule::Text => matches!((x, y), (Literal::Str(_), Literal::Regex { .. })),
            ArgRule::Plain | ArgRule::Count => false,
            _ => bound_loosens(b.rule, x, a.rule, y),
        };
    }
    if b.refines.as_deref() == Some(a.name.as_str()) {
        return before.arguments == after.arguments;
    }
    match (before.arguments.first(), after.arguments.first()) {
        (Some(x), Some(y)) if before.arguments.len() == 1 && after.arguments.len() == 1 => {
            match b.rule {
                ArgRule::Count => match (x.as_number(), y.as_number(), a.rule) {
                    (Some(n), Some(m), ArgRule::LowerInclusive) => m <= n,
                    (Some(n), Some(m), ArgRule::LowerExclusive) => m < n,
                    _ => false,
                },
                _ => bound_loosens(b.rule, x, a.rule, y),
            }
        }
        _ => false,
    }
}

fn bound(rule: ArgRule) -> Option<(bool, bool)> {
    // (lower, inclusive)
    match rule {
        ArgRule::LowerExclusive => Some((true, false)),
        ArgRule::LowerInclusive => Some((true, true)),
        ArgRule::UpperExclusive => Some((false, false)),
        ArgRule::UpperInclusive => Some((false, true)),
        _ => None,
    }
}

/// Whether the bound `(ra, y)` accepts a strict superset of `(rb, x)`.
fn bound_loosens(rb: ArgRule, x: &Literal, ra: ArgRule, y: &Literal) -> bool {
    let (Some((b_lower, b_incl)), Some((a_lower, a_incl))) = (bound(rb), bound(ra)) else {
        return false;
    };
    let (Some(x), Some(y)) = (x.as_number(), y.as_number()) else {
        return false;
    };
    if b_lower != a_lower || x.is_nan() || y.is_nan() {
        return false;
    }
    let wider_value = if b_lower { y < x } else { y > x };
    wider_value || (x == y && a_incl && !b_incl)
}
