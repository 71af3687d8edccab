//! Command-line analytics, guardrails and simulation for autonomous UI test
//! repair, built on [`tether_core`].
//!
//! - [`jsonl`]: JSON-lines corpus files with strict or lenient parsing.
//! - [`analyze`]: overview, convergence, signature and phase tables.
//! - [`fixture`]: the reference corpus shipped in `fixtures/`.
//! - [`montecarlo`]: parallel simulator runs over derived seeds.
//! - [`cli`]: the `tether` command.

pub mod analyze;
pub mod cli;
pub mod files;
pub mod fixture;
pub mod jsonl;
pub mod montecarlo;

pub use cli::{dispatch, Exit};
