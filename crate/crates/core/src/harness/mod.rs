//! Test-network generation, end-to-end runs and reporting.

pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod scenario;

pub use config::RunConfig;
pub use metrics::{emit_report, error_measures, ErrorMeasures, MetricsReport, ReportFormat};
pub use pipeline::{bench, run_pipeline, PipelineConfig, PipelineRun};
pub use scenario::{generate_network, Scenario, WeightDesign};
