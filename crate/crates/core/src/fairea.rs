//! Fairea fairness/performance trade-off baseline.
//!
//! The baseline is a polyline of "mutated models": for each degree `t`, a
//! random `floor(t * n)` subset of the original predictions is replaced by
//! the test-set majority class and all metrics are recomputed, averaged
//! over several draws. A mitigation result is then placed in one of five
//! regions relative to the original model and that polyline.

use std::fmt;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{FairnessMetric, LabeledPredictions, MetricReport, PerformanceMetric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// Lower is fairer.
    pub fairness: f64,
    /// Higher is better.
    pub performance: f64,
    pub fairness_metric: FairnessMetric,
    pub performance_metric: PerformanceMetric,
}

impl TradeoffPoint {
    pub fn from_report(r: &MetricReport, f: FairnessMetric, p: PerformanceMetric) -> Self {
        TradeoffPoint {
            fairness: r.fairness(f),
            performance: r.performance(p),
            fairness_metric: f,
            performance_metric: p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TradeoffRegion {
    WinWin,
    Good,
    Poor,
    LoseLose,
    Inverted,
}

impl TradeoffRegion {
    pub const ALL: [TradeoffRegion; 5] = [
        TradeoffRegion::WinWin,
        TradeoffRegion::Good,
        TradeoffRegion::Poor,
        TradeoffRegion::LoseLose,
        TradeoffRegion::Inverted,
    ];

    /// Win-win and good both beat the baseline.
    pub fn beats_baseline(self) -> bool {
        matches!(self, TradeoffRegion::WinWin | TradeoffRegion::Good)
    }

    pub fn key(self) -> &'static str {
        match self {
            TradeoffRegion::WinWin => "win_win",
            TradeoffRegion::Good => "good",
            TradeoffRegion::Poor => "poor",
            TradeoffRegion::LoseLose => "lose_lose",
            TradeoffRegion::Inverted => "inverted",
        }
    }
}

impl fmt::Display for TradeoffRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Default degree grid `0.0, 0.1, ..., 1.0`.
pub fn default_degrees() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

pub const DEFAULT_REPS: usize = 10;

/// Mean metric values for every degree; one baseline per metric pair can
/// be read off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineGrid {
    pub degrees: Vec<f64>,
    pub reps_per_degree: usize,
    /// `fairness[d][m]` in [`FairnessMetric::ALL`] order.
    pub fairness: Vec<Vec<f64>>,
    /// `performance[d][m]` in [`PerformanceMetric::ALL`] order.
    pub performance: Vec<Vec<f64>>,
}

impl BaselineGrid {
    pub fn baseline(&self, f: FairnessMetric, p: PerformanceMetric) -> TradeoffBaseline {
        let fi = FairnessMetric::ALL.iter().position(|&m| m == f).expect("listed");
        let pi = PerformanceMetric::ALL.iter().position(|&m| m == p).expect("listed");
        TradeoffBaseline {
            points: self
                .fairness
                .iter()
                .zip(&self.performance)
                .map(|(fr, pr)| TradeoffPoint {
                    fairness: fr[fi],
                    performance: pr[pi],
                    fairness_metric: f,
                    performance_metric: p,
                })
                .collect(),
            degrees: self.degrees.clone(),
            reps_per_degree: self.reps_per_degree,
        }
    }
}

/// Majority class of the true labels; a tie goes to the favorable class.
pub fn majority_class(y_true: &[u8]) -> u8 {
    let ones = y_true.iter().filter(|&&y| y == 1).count();
    u8::from(2 * ones >= y_true.len())
}

fn check_degrees(degrees: &[f64]) -> Result<()> {
    if degrees.first() != Some(&0.0) || degrees.last() != Some(&1.0) {
        return Err(Error::Usage("degrees must start at 0.0 and end at 1.0".into()));
    }
    if degrees.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Usage("degrees must be strictly increasing".into()));
    }
    Ok(())
}

/// Simulate every degree `reps` times and average all metrics.
pub fn build_baseline_grid(
    original: &LabeledPredictions,
    degrees: &[f64],
    reps: usize,
    seed: u64,
) -> Result<BaselineGrid> {
    check_degrees(degrees)?;
    if reps == 0 {
        return Err(Error::Usage("reps per degree must be at least 1".into()));
    }
    let n = original.len();
    let majority = majority_class(original.y_true());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fairness = Vec::with_capacity(degrees.len());
    let mut performance = Vec::with_capacity(degrees.len());
    for &t in degrees {
        // tolerance keeps e.g. 0.3 * 10 from flooring to 2
        let k = ((t * n as f64) + 1e-9).floor() as usize;
        let k = k.min(n);
        let mut f_mean = vec![0.0; FairnessMetric::ALL.len()];
        let mut p_mean = vec![0.0; PerformanceMetric::ALL.len()];
        for rep in 0..reps {
            let mut pred = original.y_pred().to_vec();
            for i in rand::seq::index::sample(&mut rng, n, k) {
                pred[i] = majority;
            }
            let report = MetricReport::compute(&original.with_predictions(pred)?)?;
            // running mean: exact when every draw gives the same value
            let w = 1.0 / (rep + 1) as f64;
            for (m, acc) in FairnessMetric::ALL.iter().zip(&mut f_mean) {
                *acc += (report.fairness(*m) - *acc) * w;
            }
            for (m, acc) in PerformanceMetric::ALL.iter().zip(&mut p_mean) {
                *acc += (report.performance(*m) - *acc) * w;
            }
        }
        fairness.push(f_mean);
        performance.push(p_mean);
    }
    Ok(BaselineGrid {
        degrees: degrees.to_vec(),
        reps_per_degree: reps,
        fairness,
        performance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffBaseline {
    pub points: Vec<TradeoffPoint>,
    pub degrees: Vec<f64>,
    pub reps_per_degree: usize,
}

/// Baseline for one (fairness, performance) metric pair, by name.
pub fn build_baseline(
    original: &LabeledPredictions,
    fairness_metric: &str,
    performance_metric: &str,
    degrees: &[f64],
    reps: usize,
    seed: u64,
) -> Result<TradeoffBaseline> {
    let f: FairnessMetric = fairness_metric.parse()?;
    let p: PerformanceMetric = performance_metric.parse()?;
    Ok(build_baseline_grid(original, degrees, reps, seed)?.baseline(f, p))
}

impl TradeoffBaseline {
    /// Baseline fairness at `performance`, linearly interpolated along the
    /// polyline in degree order. The flag is set when `performance` lies
    /// below every baseline point and the last point was used instead.
    pub fn fairness_at(&self, performance: f64) -> (f64, bool) {
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (lo, hi) = if a.performance <= b.performance {
                (a.performance, b.performance)
            } else {
                (b.performance, a.performance)
            };
            if performance < lo || performance > hi {
                continue;
            }
            if hi == lo {
                return (a.fairness.min(b.fairness), false);
            }
            let s = (performance - a.performance) / (b.performance - a.performance);
            return (a.fairness + s * (b.fairness - a.fairness), false);
        }
        if let Some(p) = self.points.iter().find(|p| p.performance == performance) {
            return (p.fairness, false);
        }
        let last = self.points.last().expect("baseline has points");
        (last.fairness, true)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let (f, p) = self
            .points
            .first()
            .map(|pt| (pt.fairness_metric.key(), pt.performance_metric.key()))
            .unwrap_or(("fairness", "performance"));
        w.write_record(["degree", f, p])?;
        for (d, pt) in self.degrees.iter().zip(&self.points) {
            w.write_record([d.to_string(), pt.fairness.to_string(), pt.performance.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<baseline csv>", e))?;
        Ok(())
    }
}

/// Region of a mitigation result, plus whether the baseline comparison had
/// to be clamped to the final segment.
pub fn classify_case_flagged(
    method: &TradeoffPoint,
    original: &TradeoffPoint,
    baseline: &TradeoffBaseline,
) -> Result<(TradeoffRegion, bool)> {
    let same = |p: &TradeoffPoint| {
        p.fairness_metric == original.fairness_metric
            && p.performance_metric == original.performance_metric
    };
    if !same(method) || !baseline.points.iter().all(same) {
        return Err(Error::Usage("trade-off points use different metrics".into()));
    }
    if !(method.fairness.is_finite() && method.performance.is_finite()) {
        return Err(Error::Usage("trade-off point is not finite".into()));
    }
    let fairer = method.fairness < original.fairness;
    let same_fairness = method.fairness == original.fairness;
    let r = if method.performance > original.performance {
        if fairer || same_fairness {
            TradeoffRegion::WinWin
        } else {
            TradeoffRegion::Inverted
        }
    } else if method.performance == original.performance {
        if fairer {
            TradeoffRegion::WinWin
        } else if same_fairness {
            TradeoffRegion::Good
        } else {
            TradeoffRegion::Inverted
        }
    } else if !fairer {
        TradeoffRegion::LoseLose
    } else {
        let (limit, clamped) = baseline.fairness_at(method.performance);
        if clamped {
            log::debug!(
                "{} below the baseline's lowest {}; compared against the final point",
                method.performance,
                method.performance_metric
            );
        }
        let region = if method.fairness < limit {
            TradeoffRegion::Good
        } else {
            TradeoffRegion::Poor
        };
        return Ok((region, clamped));
    };
    Ok((r, false))
}

pub fn classify_case(
    method: &TradeoffPoint,
    original: &TradeoffPoint,
    baseline: &TradeoffBaseline,
) -> Result<TradeoffRegion> {
    classify_case_flagged(method, original, baseline).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SubgroupKey;

    fn pt(f: f64, p: f64) -> TradeoffPoint {
        TradeoffPoint {
            fairness: f,
            performance: p,
            fairness_metric: FairnessMetric::WcSpd,
            performance_metric: PerformanceMetric::Accuracy,
        }
    }

    fn three_point() -> TradeoffBaseline {
        TradeoffBaseline {
            points: vec![pt(0.4, 0.8), pt(0.2, 0.7), pt(0.0, 0.6)],
            degrees: vec![0.0, 0.5, 1.0],
            reps_per_degree: 1,
        }
    }

    #[test]
    fn definitional_regions() {
        let b = three_point();
        let o = pt(0.4, 0.8);
        assert_eq!(classify_case(&pt(0.3, 0.85), &o, &b).unwrap(), TradeoffRegion::WinWin);
        assert_eq!(classify_case(&pt(0.5, 0.75), &o, &b).unwrap(), TradeoffRegion::LoseLose);
        assert_eq!(classify_case(&pt(0.5, 0.85), &o, &b).unwrap(), TradeoffRegion::Inverted);
        assert_eq!(classify_case(&o, &o, &b).unwrap(), TradeoffRegion::Good);
    }

    #[test]
    fn interpolated_good_and_poor() {
        let b = three_point();
        let o = pt(0.4, 0.8);
        // midway between (0.8, 0.4) and (0.7, 0.2): baseline fairness 0.3
        assert!((b.fairness_at(0.75).0 - 0.3).abs() < 1e-12);
        assert_eq!(classify_case(&pt(0.29, 0.75), &o, &b).unwrap(), TradeoffRegion::Good);
        assert_eq!(classify_case(&pt(0.31, 0.75), &o, &b).unwrap(), TradeoffRegion::Poor);
        // on the second segment: 0.65 -> 0.1
        assert!((b.fairness_at(0.65).0 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn below_baseline_is_clamped() {
        let b = three_point();
        let (f, clamped) = b.fairness_at(0.5);
        assert!(clamped);
        assert_eq!(f, 0.0);
        let (r, flag) = classify_case_flagged(&pt(0.1, 0.5), &pt(0.4, 0.8), &b).unwrap();
        assert_eq!(r, TradeoffRegion::Poor);
        assert!(flag);
    }

    #[test]
    fn mismatched_metrics_are_rejected() {
        let b = three_point();
        let mut m = pt(0.1, 0.7);
        m.performance_metric = PerformanceMetric::Mcc;
        assert!(classify_case(&m, &pt(0.4, 0.8), &b).is_err());
    }

    fn preds(n: usize) -> LabeledPredictions {
        let attrs = vec!["g".to_string()];
        let keys = (0..n)
            .map(|i| SubgroupKey::new(&attrs, vec![if i % 3 == 0 { "a" } else { "b" }.into()]))
            .collect();
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 5 < 2)).collect();
        let p: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0 || i % 7 == 0)).collect();
        LabeledPredictions::new(y, p, keys).unwrap()
    }

    #[test]
    fn degenerate_ends() {
        let data = preds(60);
        let original = MetricReport::compute(&data).unwrap();
        let grid = build_baseline_grid(&data, &default_degrees(), 5, 3).unwrap();
        for (k, &m) in FairnessMetric::ALL.iter().enumerate() {
            assert_eq!(grid.fairness[0][k], original.fairness(m));
            assert_eq!(grid.fairness[10][k], 0.0);
        }
        let majority = majority_class(data.y_true());
        assert_eq!(majority, 0);
        let rate = data.y_true().iter().filter(|&&y| y == majority).count() as f64 / 60.0;
        assert_eq!(grid.performance[10][0], rate);
        assert_eq!(grid.performance[0][0], original.accuracy);
    }

    #[test]
    fn degrees_are_validated() {
        let data = preds(10);
        assert!(build_baseline_grid(&data, &[0.0, 0.5], 1, 0).is_err());
        assert!(build_baseline_grid(&data, &[0.0, 0.6, 0.5, 1.0], 1, 0).is_err());
        assert!(build_baseline_grid(&data, &[0.0, 1.0], 0, 0).is_err());
        assert!(matches!(
            build_baseline(&data, "wc_spd", "auc", &[0.0, 1.0], 1, 0),
            Err(Error::UnknownMetric(_))
        ));
    }

    #[test]
    fn baseline_csv() {
        let mut buf = Vec::new();
        three_point().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "degree,wc_spd,accuracy");
        assert_eq!(s.lines().count(), 4);
    }
}
