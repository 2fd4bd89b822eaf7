//! Intersectional fairness, single-attribute group fairness, and
//! macro-averaged performance metrics.
//!
//! Rates with an empty denominator are never imputed. A subgroup takes part
//! in a favorable-rate term if it has at least one row, in a TPR term if it
//! has at least one positive-label row, and in an FPR term if it has at
//! least one negative-label row. AOD terms need both. Subgroups left out of
//! a term are listed in [`MetricReport::excluded_subgroups`].
//!
//! Average-case metrics are the mean absolute deviation of each eligible
//! subgroup's rate from the whole-population rate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SubgroupKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPredictions", into = "RawPredictions")]
pub struct LabeledPredictions {
    y_true: Vec<u8>,
    y_pred: Vec<u8>,
    attributes: Vec<String>,
    subgroups: Vec<SubgroupKey>,
    subgroup_of: Vec<usize>,
    /// Per attribute: sorted distinct values, then each row's value index.
    groups: Vec<Vec<String>>,
    group_of: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawPredictions {
    attributes: Vec<String>,
    subgroups: Vec<Vec<String>>,
    subgroup_of: Vec<usize>,
    y_true: Vec<u8>,
    y_pred: Vec<u8>,
}

impl TryFrom<RawPredictions> for LabeledPredictions {
    type Error = Error;

    fn try_from(raw: RawPredictions) -> Result<Self> {
        let keys = raw
            .subgroup_of
            .iter()
            .map(|&i| {
                raw.subgroups
                    .get(i)
                    .map(|v| SubgroupKey::new(&raw.attributes, v.clone()))
                    .ok_or_else(|| Error::Data(format!("subgroup index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledPredictions::new(raw.y_true, raw.y_pred, keys)
    }
}

impl From<LabeledPredictions> for RawPredictions {
    fn from(p: LabeledPredictions) -> Self {
        RawPredictions {
            subgroups: p
                .subgroups
                .iter()
                .map(|k| k.assignment.iter().map(|(_, v)| v.clone()).collect())
                .collect(),
            attributes: p.attributes,
            subgroup_of: p.subgroup_of,
            y_true: p.y_true,
            y_pred: p.y_pred,
        }
    }
}

impl LabeledPredictions {
    /// `subgroup_of[i]` is row `i`'s subgroup; all keys must name the same
    /// attributes in the same order.
    pub fn new(y_true: Vec<u8>, y_pred: Vec<u8>, subgroup_of: Vec<SubgroupKey>) -> Result<Self> {
        let n = y_true.len();
        if y_pred.len() != n || subgroup_of.len() != n {
            return Err(Error::Data(format!(
                "length mismatch: {} labels, {} predictions, {} subgroup keys",
                n,
                y_pred.len(),
                subgroup_of.len()
            )));
        }
        if y_true.iter().chain(&y_pred).any(|&v| v > 1) {
            return Err(Error::Data("labels and predictions must be 0 or 1".into()));
        }
        let attributes: Vec<String> = subgroup_of
            .first()
            .map(|k| k.assignment.iter().map(|(a, _)| a.clone()).collect())
            .unwrap_or_default();
        for k in &subgroup_of {
            if k.assignment.len() != attributes.len()
                || k.assignment.iter().zip(&attributes).any(|((a, _), b)| a != b)
            {
                return Err(Error::Data(format!(
                    "subgroup key `{k}` does not match attributes {attributes:?}"
                )));
            }
        }
        let subgroups: Vec<SubgroupKey> = subgroup_of
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index_of: BTreeMap<&SubgroupKey, usize> =
            subgroups.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let sg_idx = subgroup_of.iter().map(|k| index_of[k]).collect();

        let mut groups = Vec::with_capacity(attributes.len());
        let mut group_of = Vec::with_capacity(attributes.len());
        for a in 0..attributes.len() {
            let values: Vec<String> = subgroups
                .iter()
                .map(|k| k.assignment[a].1.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let idx = subgroup_of
                .iter()
                .map(|k| values.binary_search(&k.assignment[a].1).expect("value present"))
                .collect();
            groups.push(values);
            group_of.push(idx);
        }
        Ok(LabeledPredictions {
            y_true,
            y_pred,
            attributes,
            subgroups,
            subgroup_of: sg_idx,
            groups,
            group_of,
        })
    }

    /// Pair a dataset's labels and subgroups with predictions.
    pub fn from_dataset(data: &Dataset, y_pred: Vec<u8>) -> Result<Self> {
        Self::new(data.labels().to_vec(), y_pred, data.subgroup_keys())
    }

    /// Same rows and subgroups, different predictions.
    pub fn with_predictions(&self, y_pred: Vec<u8>) -> Result<Self> {
        if y_pred.len() != self.len() {
            return Err(Error::Data(format!(
                "{} predictions for {} rows",
                y_pred.len(),
                self.len()
            )));
        }
        if y_pred.iter().any(|&v| v > 1) {
            return Err(Error::Data("predictions must be 0 or 1".into()));
        }
        Ok(LabeledPredictions {
            y_pred,
            ..self.clone()
        })
    }

    pub fn len(&self) -> usize {
        self.y_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_true.is_empty()
    }

    pub fn y_true(&self) -> &[u8] {
        &self.y_true
    }

    pub fn y_pred(&self) -> &[u8] {
        &self.y_pred
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    /// Distinct subgroups present, sorted.
    pub fn subgroups(&self) -> &[SubgroupKey] {
        &self.subgroups
    }

    pub fn subgroup_index(&self) -> &[usize] {
        &self.subgroup_of
    }
}

/// Confusion counts for one slice of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub rows: usize,
    pub positives: usize,
    pub negatives: usize,
    pub predicted_favorable: usize,
    pub true_positives: usize,
    pub false_positives: usize,
}

impl Counts {
    fn add(&mut self, y: u8, p: u8) {
        self.rows += 1;
        if y == 1 {
            self.positives += 1;
            if p == 1 {
                self.true_positives += 1;
                self.predicted_favorable += 1;
            }
        } else {
            self.negatives += 1;
            if p == 1 {
                self.false_positives += 1;
                self.predicted_favorable += 1;
            }
        }
    }

    pub fn favorable_rate(&self) -> Option<f64> {
        ratio(self.predicted_favorable, self.rows)
    }

    pub fn tpr(&self) -> Option<f64> {
        ratio(self.true_positives, self.positives)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.false_positives, self.negatives)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn tally(y_true: &[u8], y_pred: &[u8], slot: &[usize], slots: usize) -> Vec<Counts> {
    let mut out = vec![Counts::default(); slots];
    for ((&y, &p), &s) in y_true.iter().zip(y_pred).zip(slot) {
        out[s].add(y, p);
    }
    out
}

fn population(data: &LabeledPredictions) -> Counts {
    let mut c = Counts::default();
    for (&y, &p) in data.y_true.iter().zip(&data.y_pred) {
        c.add(y, p);
    }
    c
}

/// Eligible per-slice rates for the three metric families.
struct SliceRates {
    spd: Vec<f64>,
    eod: Vec<f64>,
    /// (FPR, TPR) for slices with both label classes.
    aod: Vec<(f64, f64)>,
    excluded: Vec<String>,
}

fn slice_rates(counts: &[Counts], names: &[String]) -> SliceRates {
    let mut r = SliceRates {
        spd: Vec::new(),
        eod: Vec::new(),
        aod: Vec::new(),
        excluded: Vec::new(),
    };
    for (c, name) in counts.iter().zip(names) {
        match c.favorable_rate() {
            Some(v) => r.spd.push(v),
            None => r.excluded.push(format!("{name}: no rows")),
        }
        match c.tpr() {
            Some(v) => r.eod.push(v),
            None => r.excluded.push(format!("{name}: no positive-label rows (TPR terms)")),
        }
        match (c.fpr(), c.tpr()) {
            (Some(f), Some(t)) => r.aod.push((f, t)),
            (None, _) => r.excluded.push(format!("{name}: no negative-label rows (FPR terms)")),
            _ => {}
        }
    }
    r
}

fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

fn require(n: usize, min: usize, term: &str, excluded: &[String]) -> Result<()> {
    if n >= min {
        return Ok(());
    }
    let mut reasons = vec![format!("{term}: {n} eligible")];
    reasons.extend_from_slice(excluded);
    Err(Error::MetricUndefined { reasons })
}

fn subgroup_rates(data: &LabeledPredictions) -> SliceRates {
    let counts = tally(&data.y_true, &data.y_pred, &data.subgroup_of, data.subgroups.len());
    let names: Vec<String> = data.subgroups.iter().map(|k| k.to_string()).collect();
    slice_rates(&counts, &names)
}

/// `(wc_spd, wc_aod, wc_eod)`: max minus min of the subgroup favorable rate,
/// of `FPR + TPR` (halved), and of TPR.
pub fn worst_case_metrics(data: &LabeledPredictions) -> Result<(f64, f64, f64)> {
    let r = subgroup_rates(data);
    require(r.spd.len(), 2, "favorable-rate subgroups", &r.excluded)?;
    require(r.eod.len(), 2, "TPR subgroups", &r.excluded)?;
    require(r.aod.len(), 2, "FPR+TPR subgroups", &r.excluded)?;
    let wc_spd = spread(r.spd.iter().copied());
    let wc_aod = 0.5 * spread(r.aod.iter().map(|(f, t)| f + t));
    let wc_eod = spread(r.eod.iter().copied());
    Ok((wc_spd, wc_aod, wc_eod))
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

/// `(ac_spd, ac_aod, ac_eod)`: mean absolute deviation of each subgroup's
/// rate from the population rate.
pub fn average_case_metrics(data: &LabeledPredictions) -> Result<(f64, f64, f64)> {
    let r = subgroup_rates(data);
    require(r.spd.len(), 1, "favorable-rate subgroups", &r.excluded)?;
    require(r.eod.len(), 1, "TPR subgroups", &r.excluded)?;
    require(r.aod.len(), 1, "FPR+TPR subgroups", &r.excluded)?;
    let pop = population(data);
    let rate = pop.favorable_rate().expect("non-empty");
    let tpr = pop.tpr().expect("has positives");
    let fpr = pop.fpr().expect("has negatives");
    let ac_spd = mean(r.spd.iter().map(|v| (v - rate).abs()));
    let ac_aod = mean(r.aod.iter().map(|(f, t)| 0.5 * ((f - fpr).abs() + (t - tpr).abs())));
    let ac_eod = mean(r.eod.iter().map(|v| (v - tpr).abs()));
    Ok((ac_spd, ac_aod, ac_eod))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupFairness {
    pub spd: f64,
    pub aod: f64,
    pub eod: f64,
}

/// Single-attribute SPD/AOD/EOD as absolute differences between the two
/// groups of `attribute` (max minus min when there are more than two).
pub fn group_metrics(data: &LabeledPredictions, attribute: &str) -> Result<GroupFairness> {
    let a = data
        .attributes
        .iter()
        .position(|x| x == attribute)
        .ok_or_else(|| Error::Usage(format!("`{attribute}` is not a protected attribute")))?;
    let names: Vec<String> = data.groups[a].iter().map(|v| format!("{attribute}={v}")).collect();
    let counts = tally(&data.y_true, &data.y_pred, &data.group_of[a], names.len());
    let r = slice_rates(&counts, &names);
    require(r.spd.len(), 2, "favorable-rate groups", &r.excluded)?;
    require(r.eod.len(), 2, "TPR groups", &r.excluded)?;
    require(r.aod.len(), 2, "FPR+TPR groups", &r.excluded)?;
    Ok(GroupFairness {
        spd: spread(r.spd.iter().copied()),
        aod: 0.5 * (spread(r.aod.iter().map(|p| p.0)) + spread(r.aod.iter().map(|p| p.1))),
        eod: spread(r.eod.iter().copied()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub mcc: f64,
}

/// Accuracy, class-macro-averaged precision/recall/F1, and MCC. A class
/// with no predicted (or actual) rows contributes precision (recall) 0.
pub fn performance_metrics(data: &LabeledPredictions) -> Result<Performance> {
    if data.is_empty() {
        return Err(Error::Usage("no rows to score".into()));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&y, &p) in data.y_true.iter().zip(&data.y_pred) {
        match (y, p) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fp += 1,
            _ => fn_ += 1,
        }
    }
    Ok(performance_from_confusion(tp, tn, fp, fn_))
}

pub fn performance_from_confusion(tp: usize, tn: usize, fp: usize, fn_: usize) -> Performance {
    let total = (tp + tn + fp + fn_) as f64;
    let f1 = |p: f64, r: f64| if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    let p1 = ratio(tp, tp + fp).unwrap_or(0.0);
    let r1 = ratio(tp, tp + fn_).unwrap_or(0.0);
    let p0 = ratio(tn, tn + fn_).unwrap_or(0.0);
    let r0 = ratio(tn, tn + fp).unwrap_or(0.0);
    let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = if den > 0.0 { (tp * tn - fp * fn_) / den } else { 0.0 };
    Performance {
        accuracy: (tp + tn) / total,
        macro_precision: 0.5 * (p1 + p0),
        macro_recall: 0.5 * (r1 + r0),
        macro_f1: 0.5 * (f1(p1, r1) + f1(p0, r0)),
        mcc,
    }
}

macro_rules! metric_enum {
    ($name:ident { $($variant:ident => $key:literal, $label:literal;)* }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant,)*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)*];

            /// Column name, e.g. `wc_spd`.
            pub fn key(self) -> &'static str {
                match self {
                    $($name::$variant => $key,)*
                }
            }

            /// Display label, e.g. `WC-SPD`.
            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label,)*
                }
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.trim().to_ascii_lowercase().replace('-', "_");
                match norm.as_str() {
                    $($key => Ok($name::$variant),)*
                    _ => Err(Error::UnknownMetric(s.to_string())),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
    };
}

metric_enum!(FairnessMetric {
    WcSpd => "wc_spd", "WC-SPD";
    WcAod => "wc_aod", "WC-AOD";
    WcEod => "wc_eod", "WC-EOD";
    AcSpd => "ac_spd", "AC-SPD";
    AcAod => "ac_aod", "AC-AOD";
    AcEod => "ac_eod", "AC-EOD";
});

metric_enum!(PerformanceMetric {
    Accuracy => "accuracy", "Accuracy";
    MacroPrecision => "macro_precision", "Precision";
    MacroRecall => "macro_recall", "Recall";
    MacroF1 => "macro_f1", "F1";
    Mcc => "mcc", "MCC";
});

/// Every metric for one (model, test set) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub wc_spd: f64,
    pub wc_aod: f64,
    pub wc_eod: f64,
    pub ac_spd: f64,
    pub ac_aod: f64,
    pub ac_eod: f64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub mcc: f64,
    /// Keyed by protected attribute; attributes whose group metrics are
    /// undefined on this test set are absent.
    pub per_attribute: BTreeMap<String, GroupFairness>,
    pub excluded_subgroups: Vec<String>,
}

impl MetricReport {
    pub fn compute(data: &LabeledPredictions) -> Result<Self> {
        let (wc_spd, wc_aod, wc_eod) = worst_case_metrics(data)?;
        let (ac_spd, ac_aod, ac_eod) = average_case_metrics(data)?;
        let perf = performance_metrics(data)?;
        let mut per_attribute = BTreeMap::new();
        let mut excluded_subgroups = subgroup_rates(data).excluded;
        for a in &data.attributes {
            match group_metrics(data, a) {
                Ok(g) => {
                    per_attribute.insert(a.clone(), g);
                }
                Err(e) => excluded_subgroups.push(format!("group metrics for `{a}`: {e}")),
            }
        }
        Ok(MetricReport {
            wc_spd,
            wc_aod,
            wc_eod,
            ac_spd,
            ac_aod,
            ac_eod,
            accuracy: perf.accuracy,
            macro_precision: perf.macro_precision,
            macro_recall: perf.macro_recall,
            macro_f1: perf.macro_f1,
            mcc: perf.mcc,
            per_attribute,
            excluded_subgroups,
        })
    }

    pub fn fairness(&self, m: FairnessMetric) -> f64 {
        match m {
            FairnessMetric::WcSpd => self.wc_spd,
            FairnessMetric::WcAod => self.wc_aod,
            FairnessMetric::WcEod => self.wc_eod,
            FairnessMetric::AcSpd => self.ac_spd,
            FairnessMetric::AcAod => self.ac_aod,
            FairnessMetric::AcEod => self.ac_eod,
        }
    }

    pub fn performance(&self, m: PerformanceMetric) -> f64 {
        match m {
            PerformanceMetric::Accuracy => self.accuracy,
            PerformanceMetric::MacroPrecision => self.macro_precision,
            PerformanceMetric::MacroRecall => self.macro_recall,
            PerformanceMetric::MacroF1 => self.macro_f1,
            PerformanceMetric::Mcc => self.mcc,
        }
    }

    /// Flat `(column, value)` pairs in a fixed order.
    pub fn to_record(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = FairnessMetric::ALL
            .iter()
            .map(|&m| (m.key().to_string(), self.fairness(m)))
            .chain(
                PerformanceMetric::ALL
                    .iter()
                    .map(|&m| (m.key().to_string(), self.performance(m))),
            )
            .collect();
        for (a, g) in &self.per_attribute {
            out.push((format!("spd[{a}]"), g.spd));
            out.push((format!("aod[{a}]"), g.aod));
            out.push((format!("eod[{a}]"), g.eod));
        }
        out
    }
}
