//! Helpers shared by the integration and acceptance tests: an independent
//! brute-force metric oracle, random fixtures and random classifiers.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use fairhome::metrics::LabeledPredictions;
use fairhome::model::{Model, ModelKind, ModelMetadata, Network};
use fairhome::{Attribute, Classifier, Dataset, Encoder, Instance, Schema, SubgroupKey, TrainConfig, Value};
use rand::Rng;

/// Raw rows for the oracle: protected values, true label, prediction.
#[derive(Debug, Clone)]
pub struct RawFixture {
    pub attrs: Vec<String>,
    pub groups: Vec<Vec<String>>,
    pub y_true: Vec<u8>,
    pub y_pred: Vec<u8>,
}

impl RawFixture {
    pub fn random<R: Rng>(rng: &mut R, max_rows: usize, max_attrs: usize) -> Self {
        let d = rng.random_range(1..=max_attrs);
        let n = rng.random_range(1..=max_rows);
        let attrs: Vec<String> = (0..d).map(|i| format!("p{i}")).collect();
        // skewed marginals so sparse subgroups show up
        let bias: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
        let base_rate = rng.random_range(0.1..0.9);
        let acc = rng.random_range(0.3..1.0);
        let mut groups = Vec::with_capacity(n);
        let mut y_true = Vec::with_capacity(n);
        let mut y_pred = Vec::with_capacity(n);
        for _ in 0..n {
            groups.push(
                bias.iter()
                    .map(|&b| if rng.random_bool(b) { "a".to_string() } else { "b".to_string() })
                    .collect(),
            );
            let y = u8::from(rng.random_bool(base_rate));
            let p = if rng.random_bool(acc) { y } else { 1 - y };
            y_true.push(y);
            y_pred.push(p);
        }
        RawFixture { attrs, groups, y_true, y_pred }
    }

    pub fn labeled(&self) -> LabeledPredictions {
        let keys = self
            .groups
            .iter()
            .map(|g| SubgroupKey::new(&self.attrs, g.clone()))
            .collect();
        LabeledPredictions::new(self.y_true.clone(), self.y_pred.clone(), keys).unwrap()
    }

    fn rows_where(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        (0..self.y_true.len()).filter(|&i| keep(i)).collect()
    }
}

struct Rates {
    fav: Option<f64>,
    tpr: Option<f64>,
    fpr: Option<f64>,
}

fn rates(f: &RawFixture, rows: &[usize]) -> Rates {
    let count = |pred: fn(u8, u8) -> bool| rows.iter().filter(|&&i| pred(f.y_true[i], f.y_pred[i])).count();
    let n = rows.len();
    let pos = count(|y, _| y == 1);
    let neg = count(|y, _| y == 0);
    let fav = count(|_, p| p == 1);
    let tp = count(|y, p| y == 1 && p == 1);
    let fp = count(|y, p| y == 0 && p == 1);
    Rates {
        fav: (n > 0).then(|| fav as f64 / n as f64),
        tpr: (pos > 0).then(|| tp as f64 / pos as f64),
        fpr: (neg > 0).then(|| fp as f64 / neg as f64),
    }
}

fn max_minus_min(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() - 1] - s[0]
}

fn slices(f: &RawFixture, key_of: impl Fn(usize) -> Vec<String>) -> Vec<Rates> {
    let keys: BTreeSet<Vec<String>> = (0..f.y_true.len()).map(&key_of).collect();
    keys.iter()
        .map(|k| rates(f, &f.rows_where(|i| key_of(i) == *k)))
        .collect()
}

/// `(wc_spd, wc_aod, wc_eod)` or `None` when fewer than two subgroups are
/// eligible for any of the three.
pub fn oracle_worst_case(f: &RawFixture) -> Option<[f64; 3]> {
    let s = slices(f, |i| f.groups[i].clone());
    let fav: Vec<f64> = s.iter().filter_map(|r| r.fav).collect();
    let tpr: Vec<f64> = s.iter().filter_map(|r| r.tpr).collect();
    let sums: Vec<f64> = s
        .iter()
        .filter_map(|r| Some(r.fpr? + r.tpr?))
        .collect();
    if fav.len() < 2 || tpr.len() < 2 || sums.len() < 2 {
        return None;
    }
    Some([max_minus_min(&fav), 0.5 * max_minus_min(&sums), max_minus_min(&tpr)])
}

pub fn oracle_average_case(f: &RawFixture) -> Option<[f64; 3]> {
    let s = slices(f, |i| f.groups[i].clone());
    let all: Vec<usize> = (0..f.y_true.len()).collect();
    let pop = rates(f, &all);
    let fav: Vec<f64> = s.iter().filter_map(|r| Some((r.fav? - pop.fav?).abs())).collect();
    let eod: Vec<f64> = s.iter().filter_map(|r| Some((r.tpr? - pop.tpr?).abs())).collect();
    let aod: Vec<f64> = s
        .iter()
        .filter_map(|r| Some(0.5 * ((r.fpr? - pop.fpr?).abs() + (r.tpr? - pop.tpr?).abs())))
        .collect();
    if fav.is_empty() || eod.is_empty() || aod.is_empty() {
        return None;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Some([mean(&fav), mean(&aod), mean(&eod)])
}

/// `(spd, aod, eod)` for one attribute.
pub fn oracle_group(f: &RawFixture, attr: usize) -> Option<[f64; 3]> {
    let s = slices(f, |i| vec![f.groups[i][attr].clone()]);
    let fav: Vec<f64> = s.iter().filter_map(|r| r.fav).collect();
    let tpr: Vec<f64> = s.iter().filter_map(|r| r.tpr).collect();
    let both: Vec<(f64, f64)> = s.iter().filter_map(|r| Some((r.fpr?, r.tpr?))).collect();
    if fav.len() < 2 || tpr.len() < 2 || both.len() < 2 {
        return None;
    }
    let fprs: Vec<f64> = both.iter().map(|b| b.0).collect();
    let tprs: Vec<f64> = both.iter().map(|b| b.1).collect();
    Some([
        max_minus_min(&fav),
        0.5 * (max_minus_min(&fprs) + max_minus_min(&tprs)),
        max_minus_min(&tpr),
    ])
}

/// `(accuracy, macro precision, macro recall, macro f1, mcc)`.
pub fn oracle_performance(y_true: &[u8], y_pred: &[u8]) -> [f64; 5] {
    let n = y_true.len() as f64;
    let pairs: Vec<(u8, u8)> = y_true.iter().copied().zip(y_pred.iter().copied()).collect();
    let correct = pairs.iter().filter(|(y, p)| y == p).count() as f64;
    let per_class = |c: u8| {
        let hit = pairs.iter().filter(|&&(y, p)| y == c && p == c).count() as f64;
        let predicted = pairs.iter().filter(|&&(_, p)| p == c).count() as f64;
        let actual = pairs.iter().filter(|&&(y, _)| y == c).count() as f64;
        let prec = if predicted > 0.0 { hit / predicted } else { 0.0 };
        let rec = if actual > 0.0 { hit / actual } else { 0.0 };
        let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
        (prec, rec, f1)
    };
    let (p1, r1, f1) = per_class(1);
    let (p0, r0, f0) = per_class(0);
    let c = |y: u8, p: u8| pairs.iter().filter(|&&q| q == (y, p)).count() as f64;
    let (tp, tn, fp, fn_) = (c(1, 1), c(0, 0), c(0, 1), c(1, 0));
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if den > 0.0 { (tp * tn - fp * fn_) / den.sqrt() } else { 0.0 };
    [correct / n, (p1 + p0) / 2.0, (r1 + r0) / 2.0, (f1 + f0) / 2.0, mcc]
}

/// Dataset with `d` protected categorical attributes (values drawn from
/// `levels` per attribute), two numeric and one categorical feature.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, levels: &[usize]) -> Dataset {
    let mut attrs: Vec<Attribute> = (0..levels.len())
        .map(|i| Attribute::categorical(format!("p{i}")))
        .collect();
    attrs.push(Attribute::numeric("x0"));
    attrs.push(Attribute::numeric("x1"));
    attrs.push(Attribute::categorical("c"));
    let protected = (0..levels.len()).map(|i| format!("p{i}")).collect();
    let schema = Schema::new(attrs, protected, "y", "1").unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut values: Vec<Value> = levels
            .iter()
            .map(|&k| Value::from(format!("v{}", rng.random_range(0..k)).as_str()))
            .collect();
        values.push(Value::from(rng.random_range(-2.0..2.0)));
        values.push(Value::from(rng.random_range(0.0..10.0)));
        values.push(Value::from(["u", "v", "w"][rng.random_range(0..3)]));
        rows.push(Instance::new(values));
        labels.push(u8::from(i % 2 == 0));
    }
    Dataset::new(Arc::new(schema), rows, labels).unwrap()
}

/// Randomly initialized network over `data`'s encoding; no training.
pub fn random_classifier<R: Rng>(rng: &mut R, data: &Dataset, hidden: &[usize]) -> Classifier {
    let encoder = Encoder::fit(data).unwrap();
    let mut network = Network::glorot(encoder.dim(), hidden, rng);
    // non-zero biases so the decision boundary is not pinned at the origin
    let mut params = network.params();
    for p in &mut params {
        *p = 3.0 * *p + rng.random_range(-0.5..0.5);
    }
    network.set_params(&params);
    let kind = if hidden.is_empty() { ModelKind::Logistic } else { ModelKind::Mlp };
    let metadata = ModelMetadata {
        kind,
        config: TrainConfig::default(),
        weighted: false,
        final_loss: 0.0,
        loss_history: Vec::new(),
    };
    Classifier::from_parts(encoder, Model { kind, network }, metadata).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
