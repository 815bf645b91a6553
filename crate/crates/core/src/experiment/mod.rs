//! Scenario configuration, drops, sweeps and summaries.

mod config;
mod drop;
mod report;
mod sweep;

pub use config::{ScenarioConfig, SchedulerConfig};
pub use drop::{run_drop, run_drop_with, traffic_seed, RunMetrics};
pub use report::{format_gain, render_report, summarize, write_summary_csv, CellKey, CellSummary, MeanCi, Report};
pub use sweep::{read_rows, run_sweep, sort_rows, write_rows, Manifest, SweepOutput, SweepRow, SweepSpec};
