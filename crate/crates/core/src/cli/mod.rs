//! Batch front-end behind the `iaware` binary.

mod commands;
pub mod config;

pub use commands::{
    cmd_compare, cmd_evaluate, cmd_simulate, cmd_track, compare_on, evaluate, filter_config, format_diagnostics,
    format_metrics, run_filter, simulate_scans, simulate_truth, CompareSummary, FrameMetrics, MetricMeans,
    SimulateSummary, TrackRun, DIAGNOSTICS_HEADER, METRICS_HEADER,
};
pub use config::{BirthSettings, RunConfig};
