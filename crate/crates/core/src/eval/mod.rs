//! Accuracy metrics, model selection, repeated runs and the benchmark driver.

pub mod benchmark;
pub mod grid;
pub mod metrics;
pub mod report;
pub mod runs;

pub use benchmark::{run_benchmark, BenchmarkPlan, DatasetInput};
pub use grid::{grid_search, GridAxis, GridResult, Prefer};
pub use metrics::{accuracy_all, accuracy_per_resident, score, PredictionSet, Scores};
pub use report::{BenchmarkReport, RowResult, RowStatus};
pub use runs::{format_duration, measure_time, repeated_runs, RepeatSummary};
