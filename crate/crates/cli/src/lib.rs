//! Library surface of the `frackin` CLI: scenario parsing, the rule
//! registry, the runner, and table emission. The binary in `main.rs` is a
//! thin wrapper so integration tests can drive the same paths in-process.

pub mod registry;
pub mod runner;
pub mod scenario;
pub mod table;

pub use runner::{run, run_file, RunContext, RunError};
pub use scenario::{parse_scenario, Scenario, ScenarioError};
