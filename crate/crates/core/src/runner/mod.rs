//! Experiment orchestration and report tables.

mod config;
mod experiment;
mod report;

pub use config::{ExperimentConfig, FaireaConfig, Method, TrainSection, DESK_HIDDEN_LAYOUT};
pub use experiment::{
    check_unique, fairness_columns, run_experiment, run_on_dataset, tradeoff_analysis,
    wtl_analysis, RunRecord, TradeoffCase, WtlMatrix,
};
pub use report::{
    analyze, emit_report, emit_run, improvement_table, read_manifest, read_records,
    region_distribution, regenerate, Analysis, Improvement, Manifest, RegionDistribution,
    CASES_CSV, IMPROVEMENTS_CSV, MANIFEST_JSON, METRICS_CSV, RECORDS_JSONL, REGIONS_CSV, WTL_CSV,
};
