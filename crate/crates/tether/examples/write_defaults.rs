//! Writes the built-in rule table, matcher table and calibrated simulator
//! configs into `data/`, where the CLI and the tests pick them up.

use std::fs;
use std::path::Path;

use serde::Serialize;
use tether_core::assertion::MatcherTable;
use tether_core::signature::default_rules;
use tether_core::sim::{GuardrailPolicy, SimConfig};

const SEED: u64 = 20_250_106;

fn write(dir: &Path, name: &str, value: &impl Serialize) {
    let text = serde_json::to_string_pretty(value).expect("serializes") + "\n";
    fs::write(dir.join(name), text).expect("writable data dir");
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir).expect("data dir");
    write(&dir, "rules.json", &default_rules());
    write(&dir, "matchers.json", &MatcherTable::default());
    write(&dir, "baseline.json", &SimConfig::calibrated(GuardrailPolicy::baseline(), SEED));
    write(&dir, "constrained.json", &SimConfig::calibrated(GuardrailPolicy::constrained(), SEED));
}
