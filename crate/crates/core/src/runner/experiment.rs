use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::data::{load_dataset, protected_domains, split, Dataset, ProtectedDomains, Schema};
use crate::ensemble::{fairhome_predict, EnsembleStrategy};
use crate::error::{Error, Result};
use crate::fairea::{build_baseline_grid, classify_case_flagged, TradeoffPoint, TradeoffRegion};
use crate::metrics::{FairnessMetric, LabeledPredictions, MetricReport, PerformanceMetric};
use crate::model::{
    fit_logistic, fit_mlp, reweighting_weights, Classifier, ModelKind, ProbabilisticClassifier,
};
use crate::mutate::{fit_extrapolation_models, CorrelationModel, MutationStrategy};
use crate::stats::{win_tie_loss, Wtl, ALPHA};

/// One (task, method, repetition) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub method: Method,
    pub repetition: usize,
    pub seed: u64,
    pub model_fingerprint: Option<String>,
    pub report: Option<MetricReport>,
    pub predictions: Option<LabeledPredictions>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub duration_ms: f64,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.report.is_some()
    }
}

struct RepContext<'a> {
    train: &'a Dataset,
    test: &'a Dataset,
    domains: &'a ProtectedDomains,
    classifier: &'a Classifier,
    config: &'a ExperimentConfig,
    seed: u64,
}

/// Load the configured dataset and run the whole matrix.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let schema = Schema::from_file(&config.schema)?;
    let data = load_dataset(&config.dataset, &schema)?;
    run_on_dataset(config, &data)
}

/// Run the matrix on an already loaded dataset.
pub fn run_on_dataset(config: &ExperimentConfig, data: &Dataset) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let task = config.task_name();
    let mut records = Vec::with_capacity(config.repetitions * config.methods.len());
    for r in 0..config.repetitions {
        let seed = config.base_seed.wrapping_add(r as u64);
        log::info!("{task}: repetition {r} (seed {seed})");
        let rep = prepare_repetition(config, data, seed);
        for &method in &config.methods {
            let start = Instant::now();
            let mut warnings = Vec::new();
            let outcome = rep.as_ref().map_err(Clone::clone).and_then(|(train, test, domains, clf)| {
                let ctx = RepContext {
                    train,
                    test,
                    domains,
                    classifier: clf,
                    config,
                    seed,
                };
                run_cell(&ctx, method, &mut warnings)
            });
            let duration_ms = start.elapsed().as_secs_f64() * 1e3;
            let record = match outcome {
                Ok((fingerprint, preds, report)) => RunRecord {
                    task: task.clone(),
                    method,
                    repetition: r,
                    seed,
                    model_fingerprint: Some(fingerprint),
                    report: Some(report),
                    predictions: Some(preds),
                    error: None,
                    warnings,
                    duration_ms,
                },
                Err(e) => {
                    log::warn!("{task}/{method}/rep {r} failed: {e}");
                    RunRecord {
                        task: task.clone(),
                        method,
                        repetition: r,
                        seed,
                        model_fingerprint: None,
                        report: None,
                        predictions: None,
                        error: Some(e),
                        warnings,
                        duration_ms,
                    }
                }
            };
            records.push(record);
        }
    }
    Ok(records)
}

type Prepared = (Dataset, Dataset, ProtectedDomains, Classifier);

fn prepare_repetition(
    config: &ExperimentConfig,
    data: &Dataset,
    seed: u64,
) -> std::result::Result<Prepared, String> {
    let (train, test) = split(data, config.test_fraction, seed).map_err(|e| e.to_string())?;
    let domains = protected_domains(&train).map_err(|e| e.to_string())?;
    for w in domains.warnings() {
        log::warn!("{w}");
    }
    let clf = train_model(config, &train, seed, None).map_err(|e| e.to_string())?;
    Ok((train, test, domains, clf))
}

fn train_model(
    config: &ExperimentConfig,
    train: &Dataset,
    seed: u64,
    weights: Option<Vec<f64>>,
) -> Result<Classifier> {
    let mut cfg = config.train.to_train_config(seed);
    cfg.instance_weights = weights;
    match config.model {
        ModelKind::Logistic => fit_logistic(train, &cfg),
        ModelKind::Mlp => fit_mlp(train, &cfg, &config.hidden_layout()),
    }
}

fn run_cell(
    ctx: &RepContext<'_>,
    method: Method,
    warnings: &mut Vec<String>,
) -> std::result::Result<(String, LabeledPredictions, MetricReport), String> {
    let mut inner = || -> Result<(String, LabeledPredictions, MetricReport)> {
        let (fingerprint, y_pred) = match method {
            Method::Original => (
                ctx.classifier.fingerprint(),
                plain_predictions(ctx.classifier, ctx.test)?,
            ),
            Method::Rew => {
                let w = reweighting_weights(ctx.train, ctx.domains)?;
                let clf = train_model(ctx.config, ctx.train, ctx.seed, Some(w))?;
                (clf.fingerprint(), plain_predictions(&clf, ctx.test)?)
            }
            m => {
                let (mutation, mut ensemble) = m.strategies().expect("inference-time method");
                if mutation == MutationStrategy::MultiAttributeOnly
                    && ensemble == EnsembleStrategy::MajorityVote
                    && ctx.domains.attributes().len() <= 2
                {
                    let msg = format!(
                        "{m}: {} protected attributes give at most two ensemble members; using averaging instead of majority vote",
                        ctx.domains.attributes().len()
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                    ensemble = EnsembleStrategy::Averaging;
                }
                let corr: Option<CorrelationModel> = if mutation == MutationStrategy::CorrelatedFeatures {
                    Some(fit_extrapolation_models(ctx.train)?)
                } else {
                    None
                };
                let y_pred = ctx
                    .test
                    .rows()
                    .iter()
                    .map(|x| {
                        fairhome_predict(ctx.classifier, x, ctx.domains, mutation, ensemble, corr.as_ref())
                    })
                    .collect::<Result<Vec<u8>>>()?;
                (ctx.classifier.fingerprint(), y_pred)
            }
        };
        let preds = LabeledPredictions::from_dataset(ctx.test, y_pred)?;
        let report = MetricReport::compute(&preds)?;
        Ok((fingerprint, preds, report))
    };
    inner().map_err(|e| e.to_string())
}

fn plain_predictions(clf: &Classifier, test: &Dataset) -> Result<Vec<u8>> {
    test.rows().iter().map(|x| clf.predict(x)).collect()
}

/// Region of one mitigation case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCase {
    pub task: String,
    pub method: Method,
    pub repetition: usize,
    pub fairness_metric: FairnessMetric,
    pub performance_metric: PerformanceMetric,
    pub region: TradeoffRegion,
    pub clamped: bool,
}

/// Classify every (fairness, performance) metric pair of every non-original
/// record against the baseline built from the same repetition's original
/// predictions.
pub fn tradeoff_analysis(
    records: &[RunRecord],
    degrees: &[f64],
    reps: usize,
) -> Result<Vec<TradeoffCase>> {
    let mut cases = Vec::new();
    for orig in records.iter().filter(|r| r.method == Method::Original) {
        let (Some(orig_report), Some(orig_preds)) = (&orig.report, &orig.predictions) else {
            continue;
        };
        let grid = build_baseline_grid(orig_preds, degrees, reps, orig.seed)?;
        for rec in records.iter().filter(|r| {
            r.task == orig.task && r.repetition == orig.repetition && r.method != Method::Original
        }) {
            let Some(report) = &rec.report else { continue };
            for &f in FairnessMetric::ALL {
                for &p in PerformanceMetric::ALL {
                    let baseline = grid.baseline(f, p);
                    let (region, clamped) = classify_case_flagged(
                        &TradeoffPoint::from_report(report, f, p),
                        &TradeoffPoint::from_report(orig_report, f, p),
                        &baseline,
                    )?;
                    cases.push(TradeoffCase {
                        task: rec.task.clone(),
                        method: rec.method,
                        repetition: rec.repetition,
                        fairness_metric: f,
                        performance_metric: p,
                        region,
                        clamped,
                    });
                }
            }
        }
    }
    Ok(cases)
}

/// Win/tie/loss tallies of `fairhome` against each other method, per
/// fairness metric (lower is better), summed over tasks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WtlMatrix {
    /// metric name -> method -> (wins, ties, losses)
    pub cells: BTreeMap<String, BTreeMap<Method, (usize, usize, usize)>>,
}

/// Fairness metric names in report order: the six intersectional metrics,
/// then per-attribute group metrics.
pub fn fairness_columns(records: &[RunRecord]) -> Vec<String> {
    let mut cols: Vec<String> = FairnessMetric::ALL.iter().map(|m| m.key().to_string()).collect();
    let mut attrs: Vec<String> = records
        .iter()
        .filter_map(|r| r.report.as_ref())
        .flat_map(|r| r.per_attribute.keys().cloned())
        .collect();
    attrs.sort();
    attrs.dedup();
    for a in attrs {
        for m in ["spd", "aod", "eod"] {
            cols.push(format!("{m}[{a}]"));
        }
    }
    cols
}

pub(crate) fn record_values(report: &MetricReport) -> BTreeMap<String, f64> {
    report.to_record().into_iter().collect()
}

pub fn wtl_analysis(records: &[RunRecord], alpha: f64) -> Result<WtlMatrix> {
    let mut matrix = WtlMatrix::default();
    let columns = fairness_columns(records);
    let mut tasks: Vec<&str> = records.iter().map(|r| r.task.as_str()).collect();
    tasks.sort();
    tasks.dedup();
    let mut others: Vec<Method> = records
        .iter()
        .map(|r| r.method)
        .filter(|&m| m != Method::Fairhome)
        .collect();
    others.sort();
    others.dedup();
    let values = |task: &str, method: Method, col: &str| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.task == task && r.method == method)
            .filter_map(|r| r.report.as_ref())
            .filter_map(|rep| record_values(rep).get(col).copied())
            .collect()
    };
    for col in &columns {
        for &other in &others {
            for task in &tasks {
                let a = values(task, Method::Fairhome, col);
                let b = values(task, other, col);
                if a.is_empty() || b.is_empty() {
                    continue;
                }
                let outcome = win_tie_loss(&a, &b, alpha, true)?;
                let cell = matrix
                    .cells
                    .entry(col.clone())
                    .or_default()
                    .entry(other)
                    .or_insert((0, 0, 0));
                match outcome.outcome {
                    Wtl::Win => cell.0 += 1,
                    Wtl::Tie => cell.1 += 1,
                    Wtl::Loss => cell.2 += 1,
                }
            }
        }
    }
    Ok(matrix)
}

/// Default-alpha convenience wrapper.
pub fn wtl_default(records: &[RunRecord]) -> Result<WtlMatrix> {
    wtl_analysis(records, ALPHA)
}

/// Ensure `(task, method, repetition)` is unique.
pub fn check_unique(records: &[RunRecord]) -> Result<()> {
    let mut keys: Vec<_> = records.iter().map(|r| (&r.task, r.method, r.repetition)).collect();
    keys.sort();
    let n = keys.len();
    keys.dedup();
    if keys.len() != n {
        return Err(Error::Data("duplicate (task, method, repetition) records".into()));
    }
    Ok(())
}
