//! Closed-loop simulation harness: scenarios, integration, metrics and
//! trace output.

pub mod config;
pub mod metrics;
pub mod plot;
pub mod runner;
pub mod trace;

pub use config::{ConfigError, GainSource, ScenarioConfig, VelocitySource, SCENARIO_NAMES};
pub use metrics::{compute_rmse, RunMetrics};
pub use runner::{run_scenario, RunFailure, RunOutput, SimError, Simulation};
pub use trace::{emit_trace, parse_trace_file, TraceRow, TRACE_HEADER};
