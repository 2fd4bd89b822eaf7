//! Mann-Whitney U test and win/tie/loss comparison.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 12;

/// Default significance level.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `min(u_a, u_b)`.
    pub u: f64,
    /// Number of (a, b) pairs with a > b, ties counted as one half.
    pub u_a: f64,
    pub u_b: f64,
    pub p_value: f64,
    pub method: PValueMethod,
}

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Two-sided Mann-Whitney U test.
///
/// The exact null distribution is used when the samples have no ties and
/// `|a| + |b| <= 12`; otherwise the normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney_u(sample_a: &[f64], sample_b: &[f64]) -> Result<MannWhitney> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::Usage("Mann-Whitney U needs two non-empty samples".into()));
    }
    if sample_a.iter().chain(sample_b).any(|v| v.is_nan()) {
        return Err(Error::Usage("Mann-Whitney U samples contain NaN".into()));
    }
    let na = sample_a.len();
    let nb = sample_b.len();
    let n = na + nb;
    let combined: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    let ranks = midranks(&combined);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u_a = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u_a;

    let mut sorted = combined;
    sorted.sort_by(f64::total_cmp);
    let tie_term: f64 = sorted
        .chunk_by(|x, y| x == y)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum();

    let (p_value, method) = if n <= EXACT_MAX_N && tie_term == 0.0 {
        (exact_p(na, nb, u_a), PValueMethod::Exact)
    } else {
        (normal_p(na, nb, u_a, tie_term), PValueMethod::Normal)
    };
    Ok(MannWhitney {
        u: u_a.min(u_b),
        u_a,
        u_b,
        p_value,
        method,
    })
}

/// Counts of each U value under the null, `counts[u]` for `u = 0..=na*nb`.
fn null_counts(na: usize, nb: usize) -> Vec<u64> {
    // table[i][j] holds the distribution for samples of size i and j
    let mut table: Vec<Vec<Vec<u64>>> = vec![vec![Vec::new(); nb + 1]; na + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = vec![1];
        if i == 0 {
            for cell in row.iter_mut().skip(1) {
                *cell = vec![1];
            }
        }
    }
    for i in 1..=na {
        for j in 1..=nb {
            // the largest observation belongs to a (adds j to U) or to b
            let mut dist = vec![0u64; i * j + 1];
            for (u, &c) in table[i - 1][j].iter().enumerate() {
                dist[u + j] += c;
            }
            for (u, &c) in table[i][j - 1].iter().enumerate() {
                dist[u] += c;
            }
            table[i][j] = dist;
        }
    }
    std::mem::take(&mut table[na][nb])
}

fn exact_p(na: usize, nb: usize, u_a: f64) -> f64 {
    let counts = null_counts(na, nb);
    let total: u64 = counts.iter().sum();
    let u = u_a.round() as usize;
    let lower: u64 = counts[..=u].iter().sum();
    let upper: u64 = counts[u..].iter().sum();
    let tail = lower.min(upper) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}

fn normal_p(na: usize, nb: usize, u_a: f64, tie_term: f64) -> f64 {
    let n = (na + nb) as f64;
    let (na, nb) = (na as f64, nb as f64);
    let mu = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u_a - mu).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wtl {
    Win,
    Tie,
    Loss,
}

impl fmt::Display for Wtl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wtl::Win => "win",
            Wtl::Tie => "tie",
            Wtl::Loss => "loss",
        })
    }
}

/// Which sample sits lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    MethodLower,
    BaselineLower,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WtlOutcome {
    pub outcome: Wtl,
    pub p_value: f64,
    pub direction: Direction,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Tie unless the test is significant at `alpha`; otherwise the method wins
/// when its median lies on the better side. Equal medians are resolved by
/// the U statistics.
pub fn win_tie_loss(
    method_values: &[f64],
    baseline_values: &[f64],
    alpha: f64,
    lower_is_better: bool,
) -> Result<WtlOutcome> {
    let test = mann_whitney_u(method_values, baseline_values)?;
    let (mm, mb) = (median(method_values), median(baseline_values));
    let direction = if mm < mb || (mm == mb && test.u_a < test.u_b) {
        Direction::MethodLower
    } else if mm > mb || (mm == mb && test.u_a > test.u_b) {
        Direction::BaselineLower
    } else {
        Direction::Equal
    };
    let outcome = if test.p_value >= alpha {
        Wtl::Tie
    } else {
        match (direction, lower_is_better) {
            (Direction::MethodLower, true) | (Direction::BaselineLower, false) => Wtl::Win,
            (Direction::BaselineLower, true) | (Direction::MethodLower, false) => Wtl::Loss,
            (Direction::Equal, _) => Wtl::Tie,
        }
    };
    Ok(WtlOutcome {
        outcome,
        p_value: test.p_value,
        direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_with_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(midranks(&[3.0, 3.0, 3.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn separated_triples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, PValueMethod::Exact);
        assert!((r.p_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn fully_tied_samples() {
        let r = mann_whitney_u(&[3.0; 3], &[3.0; 3]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, PValueMethod::Normal);
    }

    #[test]
    fn null_distribution_sums_to_binomial() {
        let c = null_counts(3, 3);
        assert_eq!(c.iter().sum::<u64>(), 20);
        assert_eq!(c, vec![1, 1, 2, 3, 3, 3, 3, 2, 1, 1]);
        assert_eq!(null_counts(6, 6).iter().sum::<u64>(), 924);
    }

    #[test]
    fn empty_sample_is_error() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
        assert!(mann_whitney_u(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn wtl_basic() {
        let w = win_tie_loss(&[0.1; 20], &[0.3; 20], ALPHA, true).unwrap();
        assert_eq!(w.outcome, Wtl::Win);
        let l = win_tie_loss(&[0.3; 20], &[0.1; 20], ALPHA, true).unwrap();
        assert_eq!(l.outcome, Wtl::Loss);
        let same: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert_eq!(win_tie_loss(&same, &same, ALPHA, true).unwrap().outcome, Wtl::Tie);
        // higher-is-better flips the reading
        let w = win_tie_loss(&[0.3; 20], &[0.1; 20], ALPHA, false).unwrap();
        assert_eq!(w.outcome, Wtl::Win);
    }
}
