//! Output ensembling over the original input and its mutants.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Instance, ProtectedDomains};
use crate::error::{Error, Result};
use crate::model::{decide, ProbabilisticClassifier};
use crate::mutate::{generate_mutants, CorrelationModel, MutationStrategy};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleStrategy {
    #[default]
    MajorityVote,
    Averaging,
    WeightedAveraging,
}

impl FromStr for EnsembleStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority_vote" | "vote" => Ok(Self::MajorityVote),
            "averaging" | "mean" => Ok(Self::Averaging),
            "weighted_averaging" | "weighted" => Ok(Self::WeightedAveraging),
            other => Err(Error::Usage(format!("unknown ensemble strategy `{other}`"))),
        }
    }
}

impl fmt::Display for EnsembleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MajorityVote => "majority_vote",
            Self::Averaging => "averaging",
            Self::WeightedAveraging => "weighted_averaging",
        })
    }
}

/// Combine favorable-class probabilities (index 0 is the original input)
/// into one decision.
///
/// * majority vote: unfavorable only if strictly more than half of the
///   member decisions are unfavorable;
/// * averaging: favorable iff the mean probability is at least 0.5;
/// * weighted averaging: weights `|p - 0.5|`, favorable iff the weighted
///   mean is at least 0.5; when every weight is zero the plain mean is used.
///
/// Inputs are sorted before summation so the result does not depend on
/// member order, not even through rounding.
pub fn aggregate(probabilities: &[f64], strategy: EnsembleStrategy) -> Result<u8> {
    if probabilities.is_empty() {
        return Err(Error::Usage("cannot aggregate an empty ensemble".into()));
    }
    if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Usage(format!("probability {p} is outside [0, 1]")));
    }
    let mut p = probabilities.to_vec();
    p.sort_by(f64::total_cmp);
    let decision = match strategy {
        EnsembleStrategy::MajorityVote => {
            let unfavorable = p.iter().filter(|&&v| decide(v) == 0).count();
            u8::from(2 * unfavorable <= p.len())
        }
        EnsembleStrategy::Averaging => decide(mean(&p)),
        EnsembleStrategy::WeightedAveraging => decide(weighted_mean(&p)),
    };
    Ok(decision)
}

fn mean(p: &[f64]) -> f64 {
    p.iter().sum::<f64>() / p.len() as f64
}

fn weighted_mean(p: &[f64]) -> f64 {
    let weights = boundary_weights(p);
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return mean(p);
    }
    p.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() / total
}

/// `|p - 0.5|` for each member.
pub fn boundary_weights(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| (v - 0.5).abs()).collect()
}

/// Member probabilities, weights and decision for one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAudit {
    pub strategy: EnsembleStrategy,
    pub mutation: MutationStrategy,
    pub probabilities: Vec<f64>,
    pub weights: Vec<f64>,
    pub decision: u8,
}

impl EnsembleAudit {
    /// Append as one JSON line.
    pub fn write_line<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n").map_err(|e| Error::io("<audit log>", e))
    }
}

/// Query the classifier on `instance` and all its mutants and aggregate.
pub fn fairhome_predict<C: ProbabilisticClassifier + ?Sized>(
    classifier: &C,
    instance: &Instance,
    domains: &ProtectedDomains,
    mutation: MutationStrategy,
    ensemble: EnsembleStrategy,
    corr: Option<&CorrelationModel>,
) -> Result<u8> {
    fairhome_explain(classifier, instance, domains, mutation, ensemble, corr).map(|a| a.decision)
}

/// As [`fairhome_predict`], returning the full audit record.
pub fn fairhome_explain<C: ProbabilisticClassifier + ?Sized>(
    classifier: &C,
    instance: &Instance,
    domains: &ProtectedDomains,
    mutation: MutationStrategy,
    ensemble: EnsembleStrategy,
    corr: Option<&CorrelationModel>,
) -> Result<EnsembleAudit> {
    let set = generate_mutants(instance, domains, mutation, corr)?;
    let probabilities = set
        .members()
        .map(|m| classifier.predict_proba(m))
        .collect::<Result<Vec<_>>>()?;
    let decision = aggregate(&probabilities, ensemble)?;
    Ok(EnsembleAudit {
        strategy: ensemble,
        mutation,
        weights: boundary_weights(&probabilities),
        probabilities,
        decision,
    })
}
