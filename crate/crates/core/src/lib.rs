//! Inference-time fairness repair for tabular binary classifiers.
//!
//! A trained classifier is queried on the original input and on every
//! higher-order mutant of it (all other observed combinations of the
//! protected attributes, non-protected features held fixed). The outputs are
//! then combined by majority vote, probability averaging, or
//! distance-from-boundary weighted averaging.
//!
//! Alongside the method itself the crate ships the evaluation machinery:
//! intersectional fairness metrics, macro-averaged performance metrics, the
//! Fairea trade-off baseline, the Mann-Whitney U test with win/tie/loss
//! aggregation, and a seeded experiment runner that writes CSV reports.
//!
//! ```
//! use fairhome::ensemble::{aggregate, EnsembleStrategy};
//!
//! // exactly half unfavourable is not a majority
//! let d = aggregate(&[0.2, 0.3, 0.8, 0.9], EnsembleStrategy::MajorityVote).unwrap();
//! assert_eq!(d, 1);
//! ```

pub mod data;
pub mod encoding;
pub mod ensemble;
mod error;
pub mod fairea;
pub mod metrics;
pub mod model;
pub mod mutate;
pub mod runner;
pub mod stats;
pub mod synth;

pub use data::{
    enumerate_subgroups, load_dataset, protected_domains, split, Attribute, AttributeKind,
    Dataset, Instance, ProtectedDomains, Schema, SubgroupKey, Value,
};
pub use encoding::Encoder;
pub use ensemble::{aggregate, fairhome_predict, EnsembleStrategy};
pub use error::{Error, Result};
pub use fairea::{build_baseline, classify_case, TradeoffBaseline, TradeoffPoint, TradeoffRegion};
pub use metrics::{
    FairnessMetric, LabeledPredictions, MetricReport, PerformanceMetric,
};
pub use model::{fit_logistic, fit_mlp, reweighting_weights, Classifier, Model, TrainConfig};
pub use mutate::{fit_extrapolation_models, generate_mutants, CorrelationModel, MutantSet, MutationStrategy};
pub use stats::{mann_whitney_u, win_tie_loss, MannWhitney, WtlOutcome};
pub use runner::{run_experiment, ExperimentConfig, Method, RunRecord};
