//! Higher-order mutation of protected attributes.
//!
//! A mutant takes another training-observed combination of protected values
//! and keeps every non-protected cell of the original. The correlated-feature
//! strategy additionally shifts numeric non-protected features by the change
//! that a per-feature linear model predicts for the new protected values.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Dataset, Instance, ProtectedDomains, Schema, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationStrategy {
    /// Every other observed protected combination.
    #[default]
    ProtectedOnly,
    /// As `ProtectedOnly`, plus correlated numeric features are shifted.
    CorrelatedFeatures,
    /// Only combinations differing from the original in exactly one attribute.
    SingleAttributeOnly,
    /// Only combinations differing in two or more attributes.
    MultiAttributeOnly,
}

impl FromStr for MutationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "protected_only" => Ok(Self::ProtectedOnly),
            "correlated_features" => Ok(Self::CorrelatedFeatures),
            "single_attribute_only" => Ok(Self::SingleAttributeOnly),
            "multi_attribute_only" => Ok(Self::MultiAttributeOnly),
            other => Err(Error::Usage(format!("unknown mutation strategy `{other}`"))),
        }
    }
}

impl fmt::Display for MutationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ProtectedOnly => "protected_only",
            Self::CorrelatedFeatures => "correlated_features",
            Self::SingleAttributeOnly => "single_attribute_only",
            Self::MultiAttributeOnly => "multi_attribute_only",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutantSet {
    pub original: Instance,
    /// Ordered by protected tuple.
    pub mutants: Vec<Instance>,
    pub strategy: MutationStrategy,
}

impl MutantSet {
    pub fn len(&self) -> usize {
        self.mutants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mutants.is_empty()
    }

    /// Original first, then the mutants.
    pub fn members(&self) -> impl Iterator<Item = &Instance> {
        std::iter::once(&self.original).chain(&self.mutants)
    }
}

pub fn generate_mutants(
    instance: &Instance,
    domains: &ProtectedDomains,
    strategy: MutationStrategy,
    corr: Option<&CorrelationModel>,
) -> Result<MutantSet> {
    let idx = domains.indices();
    if let Some(&bad) = idx.iter().find(|&&i| i >= instance.values.len()) {
        return Err(Error::Shape {
            expected: bad + 1,
            actual: instance.values.len(),
        });
    }
    let corr = match (strategy, corr) {
        (MutationStrategy::CorrelatedFeatures, None) => {
            return Err(Error::Usage(
                "correlated-feature mutation requires a fitted correlation model".into(),
            ))
        }
        (MutationStrategy::CorrelatedFeatures, Some(c)) => Some(c),
        _ => None,
    };
    let original_tuple = instance.protected_tuple(idx);

    let mut mutants = Vec::new();
    for combo in domains.joint_combos() {
        let changed = combo
            .iter()
            .zip(&original_tuple)
            .filter(|(a, b)| a != b)
            .count();
        let keep = match strategy {
            MutationStrategy::ProtectedOnly | MutationStrategy::CorrelatedFeatures => changed >= 1,
            MutationStrategy::SingleAttributeOnly => changed == 1,
            MutationStrategy::MultiAttributeOnly => changed >= 2,
        };
        if !keep {
            continue;
        }
        let mut m = instance.clone();
        for (&i, v) in idx.iter().zip(combo) {
            m.values[i] = Value::Categorical(v.clone());
        }
        if let Some(c) = corr {
            c.adjust(&mut m, &original_tuple, combo);
        }
        mutants.push(m);
    }
    Ok(MutantSet {
        original: instance.clone(),
        mutants,
        strategy,
    })
}

/// Linear model of one numeric non-protected feature on dummy-coded
/// protected attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub attribute: String,
    pub index: usize,
    pub intercept: f64,
    /// One coefficient per non-reference level, attributes in protected order.
    pub coefficients: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Design was rank-deficient; the model predicts the feature mean.
    pub intercept_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    /// Training levels per protected attribute; the first is the reference.
    levels: Vec<Vec<String>>,
    features: Vec<FeatureModel>,
}

impl CorrelationModel {
    pub fn features(&self) -> &[FeatureModel] {
        &self.features
    }

    fn design_row(&self, tuple: &[String]) -> Vec<f64> {
        let mut row = Vec::new();
        for (lv, v) in self.levels.iter().zip(tuple) {
            row.extend(lv.iter().skip(1).map(|l| if l == v { 1.0 } else { 0.0 }));
        }
        row
    }

    /// Predicted value of feature `k` for a protected tuple.
    pub fn predict(&self, k: usize, tuple: &[String]) -> f64 {
        let f = &self.features[k];
        if f.intercept_only {
            return f.intercept;
        }
        let row = self.design_row(tuple);
        f.intercept + f.coefficients.iter().zip(&row).map(|(c, x)| c * x).sum::<f64>()
    }

    fn adjust(&self, mutant: &mut Instance, from: &[String], to: &[String]) {
        for (k, f) in self.features.iter().enumerate() {
            let delta = self.predict(k, to) - self.predict(k, from);
            if let Value::Numeric(v) = &mut mutant.values[f.index] {
                *v = (*v + delta).clamp(f.min, f.max);
            }
        }
    }
}

/// Ordinary least squares for every numeric non-protected feature, with the
/// protected attributes (dummy-coded) as predictors.
pub fn fit_extrapolation_models(train: &Dataset) -> Result<CorrelationModel> {
    if train.len() < 2 {
        return Err(Error::Usage(format!(
            "need at least 2 rows to fit correlation models, got {}",
            train.len()
        )));
    }
    let schema: &Schema = train.schema();
    let idx = schema.protected_indices();
    let targets: Vec<usize> = schema
        .attributes()
        .iter()
        .enumerate()
        .filter(|(i, a)| a.kind == AttributeKind::Numeric && !schema.is_protected(*i))
        .map(|(i, _)| i)
        .collect();
    if targets.is_empty() {
        return Err(Error::Usage(
            "no numeric non-protected features to model".into(),
        ));
    }
    let tuples: Vec<Vec<String>> = train.rows().iter().map(|r| r.protected_tuple(idx)).collect();
    let levels: Vec<Vec<String>> = (0..idx.len())
        .map(|a| {
            let mut v: Vec<String> = tuples.iter().map(|t| t[a].clone()).collect();
            v.sort();
            v.dedup();
            v
        })
        .collect();
    let mut model = CorrelationModel {
        levels,
        features: Vec::new(),
    };

    let n = train.len();
    let k = model.levels.iter().map(|l| l.len() - 1).sum::<usize>();
    let mut x = DMatrix::<f64>::zeros(n, k + 1);
    for (r, t) in tuples.iter().enumerate() {
        x[(r, 0)] = 1.0;
        for (c, v) in model.design_row(t).into_iter().enumerate() {
            x[(r, c + 1)] = v;
        }
    }
    let svd = (k > 0).then(|| x.clone().svd(true, true));
    let full_rank = svd.as_ref().is_some_and(|s| s.rank(1e-9 * n as f64) == k + 1);

    for &j in &targets {
        let y: Vec<f64> = train
            .rows()
            .iter()
            .map(|r| r.values[j].as_f64().expect("numeric column"))
            .collect();
        let (min, max) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let name = schema.attributes()[j].name.clone();
        let fm = match (&svd, full_rank) {
            (Some(s), true) => {
                let beta = s
                    .solve(&DVector::from_vec(y), 1e-12)
                    .map_err(|e| Error::Training(format!("least squares for `{name}`: {e}")))?;
                FeatureModel {
                    attribute: name,
                    index: j,
                    intercept: beta[0],
                    coefficients: beta.iter().skip(1).copied().collect(),
                    min,
                    max,
                    intercept_only: false,
                }
            }
            _ => {
                log::warn!("correlation model for `{name}`: degenerate design, using the mean");
                FeatureModel {
                    attribute: name,
                    index: j,
                    intercept: y.iter().sum::<f64>() / n as f64,
                    coefficients: vec![0.0; k],
                    min,
                    max,
                    intercept_only: true,
                }
            }
        };
        model.features.push(fm);
    }
    Ok(model)
}

/// Audit dump: one CSV row per original and per mutant.
pub fn write_mutant_dump<W: Write>(writer: W, schema: &Schema, sets: &[MutantSet]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["instance".to_string(), "role".to_string()];
    header.extend(schema.attributes().iter().map(|a| a.name.clone()));
    w.write_record(&header)?;
    for (i, set) in sets.iter().enumerate() {
        for (j, m) in set.members().enumerate() {
            let role = if j == 0 { "original".to_string() } else { format!("mutant{j}") };
            let mut rec = vec![i.to_string(), role];
            rec.extend(m.values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("<mutant dump>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;
    use std::sync::Arc;

    use super::*;
    use crate::data::{protected_domains, Attribute};

    fn domains(d: usize, missing: &[Vec<&str>]) -> ProtectedDomains {
        let attrs: Vec<String> = (0..d).map(|i| format!("p{i}")).collect();
        let mut combos = vec![vec![]];
        for _ in 0..d {
            combos = combos
                .into_iter()
                .flat_map(|c: Vec<String>| {
                    ["a", "b"].iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(v.to_string());
                        c
                    })
                })
                .collect();
        }
        let combos = combos
            .into_iter()
            .filter(|c| !missing.iter().any(|m| m.iter().zip(c).all(|(x, y)| x == y)));
        ProtectedDomains::from_combos(attrs, (0..d).collect(), combos).unwrap()
    }

    fn instance(protected: &[&str]) -> Instance {
        let mut v: Vec<Value> = protected.iter().map(|&s| s.into()).collect();
        v.push(Value::Numeric(3.5));
        v.push("keep".into());
        Instance::new(v)
    }

    #[test]
    fn two_binary_attributes_give_three_mutants() {
        let d = domains(2, &[]);
        let set = generate_mutants(&instance(&["a", "b"]), &d, MutationStrategy::ProtectedOnly, None).unwrap();
        assert_eq!(set.len(), 3);
        for m in &set.mutants {
            assert_eq!(m.values[2..], set.original.values[2..]);
            assert_ne!(m.values[..2], set.original.values[..2]);
        }
    }

    #[test]
    fn hamming_partition_of_three_attributes() {
        let d = domains(3, &[]);
        let x = instance(&["a", "b", "a"]);
        let count = |s| generate_mutants(&x, &d, s, None).unwrap().len();
        assert_eq!(count(MutationStrategy::SingleAttributeOnly), 3);
        assert_eq!(count(MutationStrategy::MultiAttributeOnly), 4);
        assert_eq!(count(MutationStrategy::ProtectedOnly), 7);
    }

    #[test]
    fn unobserved_original_combo_keeps_all_observed() {
        let d = domains(2, &[vec!["b", "b"]]);
        assert_eq!(d.joint_combos().len(), 3);
        let set = generate_mutants(&instance(&["b", "b"]), &d, MutationStrategy::ProtectedOnly, None).unwrap();
        assert_eq!(set.len(), 3);
        let d = domains(3, &[vec!["b", "b", "b"], vec!["a", "a", "a"], vec!["a", "b", "a"], vec!["b", "a", "a"]]);
        let set = generate_mutants(&instance(&["b", "b", "b"]), &d, MutationStrategy::ProtectedOnly, None).unwrap();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn mutants_are_ordered_and_unique() {
        let d = domains(3, &[]);
        let set = generate_mutants(&instance(&["b", "a", "b"]), &d, MutationStrategy::ProtectedOnly, None).unwrap();
        let tuples: Vec<Vec<String>> = set.mutants.iter().map(|m| m.protected_tuple(&[0, 1, 2])).collect();
        let mut sorted = tuples.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(tuples, sorted);
    }

    #[test]
    fn correlated_without_model_is_usage_error() {
        let d = domains(2, &[]);
        let err = generate_mutants(&instance(&["a", "a"]), &d, MutationStrategy::CorrelatedFeatures, None).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    fn corr_data(feature: impl Fn(usize, &str) -> f64, n: usize) -> Dataset {
        let schema = Schema::new(
            vec![
                Attribute::categorical("sex"),
                Attribute::categorical("race"),
                Attribute::numeric("f"),
                Attribute::categorical("c"),
            ],
            vec!["sex".into(), "race".into()],
            "y",
            "1",
        )
        .unwrap();
        let rows = (0..n)
            .map(|i| {
                let sex = if i % 2 == 0 { "F" } else { "M" };
                let race = if (i / 2) % 2 == 0 { "W" } else { "NW" };
                Instance::new(vec![sex.into(), race.into(), feature(i, sex).into(), "z".into()])
            })
            .collect();
        let labels = (0..n).map(|i| (i % 3 == 0) as u8).collect();
        Dataset::new(Arc::new(schema), rows, labels).unwrap()
    }

    #[test]
    fn extrapolation_recovers_indicator() {
        let d = corr_data(|_, sex| if sex == "F" { 1.0 } else { 0.0 }, 40);
        let m = fit_extrapolation_models(&d).unwrap();
        let f = |s: &str, r: &str| m.predict(0, &[s.to_string(), r.to_string()]);
        assert!((f("F", "W") - 1.0).abs() < 1e-12);
        assert!((f("F", "NW") - 1.0).abs() < 1e-12);
        assert!(f("M", "W").abs() < 1e-12);
        assert!(!m.features()[0].intercept_only);
    }

    #[test]
    fn independent_feature_has_small_coefficients() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let vals: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let d = corr_data(|i, _| vals[i], vals.len());
        let m = fit_extrapolation_models(&d).unwrap();
        let f = &m.features()[0];
        assert!(f.coefficients.iter().all(|c| c.abs() < 0.05), "{:?}", f.coefficients);
        assert!((f.intercept - mean).abs() < 0.05);
    }

    #[test]
    fn single_level_falls_back_to_mean() {
        let schema = Schema::new(
            vec![Attribute::categorical("sex"), Attribute::numeric("f")],
            vec!["sex".into()],
            "y",
            "1",
        )
        .unwrap();
        let rows = (0..4).map(|i| Instance::new(vec!["M".into(), (i as f64).into()])).collect();
        let d = Dataset::new(Arc::new(schema), rows, vec![0, 1, 0, 1]).unwrap();
        let m = fit_extrapolation_models(&d).unwrap();
        assert!(m.features()[0].intercept_only);
        assert_eq!(m.predict(0, &["M".to_string()]), 1.5);
    }

    #[test]
    fn correlated_mutants_shift_numeric_and_clamp() {
        let d = corr_data(|i, sex| if sex == "F" { 10.0 + (i % 5) as f64 } else { (i % 5) as f64 }, 40);
        let m = fit_extrapolation_models(&d).unwrap();
        let dom = protected_domains(&d).unwrap();
        let x = Instance::new(vec!["M".into(), "W".into(), 3.0.into(), "z".into()]);
        let set = generate_mutants(&x, &dom, MutationStrategy::CorrelatedFeatures, Some(&m)).unwrap();
        assert_eq!(set.len(), 3);
        for mutant in &set.mutants {
            let v = mutant.values[2].as_f64().unwrap();
            if mutant.values[0] == Value::from("F") {
                assert!((v - 13.0).abs() < 1e-9, "{v}");
            } else {
                assert!((v - 3.0).abs() < 1e-9, "{v}");
            }
            assert_eq!(mutant.values[3], Value::from("z"));
        }
        // near the top of the range the shift is clamped
        let x = Instance::new(vec!["M".into(), "W".into(), 7.0.into(), "z".into()]);
        let set = generate_mutants(&x, &dom, MutationStrategy::CorrelatedFeatures, Some(&m)).unwrap();
        let max = set.mutants.iter().map(|m| m.values[2].as_f64().unwrap()).fold(0.0, f64::max);
        assert_eq!(max, 14.0);
    }

    #[test]
    fn dump_has_one_row_per_member() {
        let d = corr_data(|_, _| 1.0, 8);
        let dom = protected_domains(&d).unwrap();
        let sets: Vec<MutantSet> = d
            .rows()
            .iter()
            .take(2)
            .map(|r| generate_mutants(r, &dom, MutationStrategy::ProtectedOnly, None).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_mutant_dump(&mut buf, d.schema(), &sets).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 4);
        let roles: BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert!(roles.contains("original") && roles.contains("mutant3"));
    }
}
