//! Evaluation: matching-rate populations, separation metrics, and the
//! end-to-end experiment driver.

mod experiment;
mod metrics;
mod report;

pub use experiment::{
    grid_result_for, load_experiment_config, prepare, run_experiment, Arch, DataSource,
    ExperimentConfig, ExperimentSetup, ExtractRecipe, SuiteRecipe, TrainRecipe, CONFIG_VERSION,
};
pub use metrics::{
    aruc, auc, curve, rate_gap, robustness, uniqueness, CurvePoint, DEFAULT_GRID,
};
pub use report::{
    load_report, report_json, write_curve_csv, write_report, EvalReport, GridResult,
    ReportFormat, SuspectRate, REPORT_VERSION,
};
