//! Guardrails and analytics for autonomous UI test-repair pipelines.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides:
//!
//! - [`report`]: execution reports and corpora, the shared data model
//! - [`signature`]: multi-label failure-signature classification from error text
//! - [`metrics`]: repair convergence, iteration statistics and phase tables
//! - [`assertion`]: restricted test-script parsing, assertion-strength lattice, suite diffs
//! - [`selector`]: selector mini-language and DOM-snapshot grounding
//! - [`contract`]: structural validation at agent handoffs
//! - [`env`]: environment-vs-test-logic origin classification and the skip list
//! - [`retry`]: bounded repair iteration with stagnation detection and escalation
//! - [`discovery`]: feature tokenization, Jaccard dedup and discovery call accounting
//! - [`sim`]: a seeded stochastic simulator of the five-stage repair pipeline
//!
//! File formats, the command-line interface and parallel Monte Carlo runs live in
//! the companion `tether` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod assertion;
pub mod contract;
pub mod discovery;
pub mod env;
pub mod metrics;
pub mod report;
pub mod retry;
pub mod selector;
pub mod signature;
pub mod sim;

pub use num_rational::Ratio;

/// Formats a non-negative rational with one decimal place, rounding half up.
///
/// Values are kept exact everywhere else; this is only applied at presentation.
pub fn format_one_decimal(value: Ratio<u64>) -> alloc::string::String {
    let tenths = round_half_up_tenths(value);
    alloc::format!("{}.{}", tenths / 10, tenths % 10)
}

/// `value * 10` rounded half up to an integer.
pub fn round_half_up_tenths(value: Ratio<u64>) -> u64 {
    let numer = *value.numer() as u128;
    let denom = *value.denom() as u128;
    ((numer * 20 + denom) / (denom * 2)) as u64
}
