//! Experiment runner: seeded instances, method sweeps, gap studies and
//! re-validation of stored results.

mod config;
mod run;
mod truth;

pub use config::{parse_methods, parse_seeds, Budget, ExperimentConfig, Method, MultimodalSpec, Overrides};
pub use run::{
    gap_study, mean_stderr, median, read_results, run_experiment, run_id, run_method, run_single, summarize,
    validate_outputs, BeliefSummary, GapRow, GapStudy, Instance, InstanceDocument, MethodSummary,
    MultimodalSummary, PolishSummary, ResultRow, RunRecord, Status, Summary, ValidationReport,
};
pub use truth::{
    high_interest_trace, sample_ground_truth, sample_interest_map, Bump, GroundTruth, InterestMap, HIGH_INTEREST,
    LATTICE_SIDE, TRUTH_CONDITIONING_SIGMA,
};
