//! Stage loop, artifacts and run-level summaries.

pub mod compare;
pub mod io;
pub mod metrics;
pub mod run;
pub mod stage;

pub use compare::{compare_runs, ComparisonReport, SnapshotDiff, StageComparison};
pub use metrics::{fingering_metric, interior_cv};
pub use run::{run, simulate, with_threads, Manifest, RunOptions, RunSummary, StageMetrics, MANIFEST_FILE};
pub use stage::{run_stage, StageOutcome};
