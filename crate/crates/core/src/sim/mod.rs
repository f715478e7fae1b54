//! Closed-loop simulation, configuration, trace I/O and run metrics.

pub mod config;
pub mod metrics;
pub mod run;
pub mod trace;

pub use config::{load_config, parse_config, InitialState, SimConfig};
pub use metrics::{compute_metrics, row_margin, trace_metrics, Metrics};
pub use run::{initial_state, run_simulation, run_with, SampleRecord, SimMeta, SimOutput, Synthesis};
pub use trace::{export_trace, load_trace, read_trace, trace_columns, write_trace, TraceRow};
