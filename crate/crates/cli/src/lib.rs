//! Benchmark presets, run records and the runner behind the `sask` binary.

pub mod preset;
pub mod record;
pub mod runner;

pub use preset::{find_preset, presets, BenchmarkPreset, SaskParams, SolverKind};
pub use record::{write_records, OutputFormat, RunRecord};
pub use runner::{compare, run, Comparison, RunOutcome};
