//! Seeded stochastic simulator of the five-stage repair pipeline.
//!
//! Families of scenarios run through Explorer → Planner → Coder → Executor,
//! with Self-Correction looping back to the Executor. Every random choice
//! that affects behaviour goes through a [`DecisionSource`], so a run is a
//! pure function of its config and seed, and small configs can be
//! enumerated exhaustively with [`enumerate_paths`].

mod compare;
mod config;
mod decisions;
mod engine;
pub mod script;
mod trace;

pub use compare::{
    compare_policies, measure, run_metrics, run_seed, summarize_runs, PolicyComparison, PolicySummary, RunMetrics,
    SimError,
};
pub use config::{
    Dynamics, FamilySpec, GuardrailPolicy, RegimeSwitch, ReviewerOracle, SimConfig, SimConfigError, Workaround,
    WorkaroundKind,
};
pub use decisions::{
    derive_seed, enumerate_paths, DecisionSource, ExhaustiveDecisions, PathLimit, SeededDecisions, GENERATOR_ID,
};
pub use engine::{report_timestamp, run_simulation, run_with, SimOutput, BASE_TIMESTAMP, REPORT_INTERVAL_SECS};
pub use trace::{allowed_edge, check_topology, FamilySummary, FamilyTrace, Terminal, TopologyError, TraceEvent};
