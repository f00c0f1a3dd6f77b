//! Ground-truth scoring of predictions: top-1 precision under a performance
//! gap or a McNemar significance level, NDCG@K, and the hardness `H1`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::state::MethodIndex;

pub const DEFAULT_EPSILONS: [f64; 2] = [0.001, 0.01];
pub const DEFAULT_P_LEVELS: [f64; 2] = [0.01, 0.1];
pub const DEFAULT_NDCG_K: usize = 10;

/// Fully observed score matrix and the quantities derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub methods: usize,
    pub examples: usize,
    /// Row-major `methods x examples`.
    pub scores: Vec<f64>,
    pub means: Vec<f64>,
    /// Lowest index attaining the maximum mean.
    pub best_index: MethodIndex,
    /// `None` when every method has the same mean.
    pub hardness: Option<f64>,
}

impl GroundTruth {
    pub fn from_scores(methods: usize, examples: usize, scores: Vec<f64>) -> Result<Self> {
        if methods == 0 || examples == 0 || scores.len() != methods * examples {
            return Err(Error::Input(format!(
                "expected {methods}x{examples} scores, got {}",
                scores.len()
            )));
        }
        let means: Vec<f64> = scores
            .chunks_exact(examples)
            .map(|row| row.iter().sum::<f64>() / examples as f64)
            .collect();
        let best_index = best_of(&means);
        let hardness = hardness_from_means(&means).ok();
        Ok(Self {
            methods,
            examples,
            scores,
            means,
            best_index,
            hardness,
        })
    }

    pub fn best_mean(&self) -> f64 {
        self.means[self.best_index]
    }

    pub fn row(&self, i: MethodIndex) -> &[f64] {
        &self.scores[i * self.examples..(i + 1) * self.examples]
    }

    fn check(&self, i: MethodIndex) -> Result<()> {
        if i >= self.methods {
            return Err(Error::Input(format!(
                "method index {i} out of range for {} methods",
                self.methods
            )));
        }
        Ok(())
    }
}

fn best_of(means: &[f64]) -> MethodIndex {
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = i;
        }
    }
    best
}

/// `H1 = sum over methods not tied with the best of 1 / gap^2`.
pub fn hardness_from_means(means: &[f64]) -> Result<f64> {
    if means.is_empty() {
        return Err(Error::DegenerateHardness);
    }
    let top = means[best_of(means)];
    let mut total = 0.0;
    let mut any = false;
    for &m in means {
        if m != top {
            total += 1.0 / ((m - top) * (m - top));
            any = true;
        }
    }
    if any {
        Ok(total)
    } else {
        Err(Error::DegenerateHardness)
    }
}

pub fn hardness_h1(truth: &GroundTruth) -> Result<f64> {
    hardness_from_means(&truth.means)
}

/// 1 when the predicted method's mean is within `epsilon` of the best.
pub fn precision_gap(truth: &GroundTruth, predicted: MethodIndex, epsilon: f64) -> Result<u8> {
    truth.check(predicted)?;
    if !(epsilon >= 0.0) {
        return Err(Error::Input(format!("epsilon {epsilon} must be >= 0")));
    }
    Ok(u8::from(truth.means[predicted] >= truth.best_mean() - epsilon))
}

/// Discordant example counts `(wins_i, wins_j)` under strict comparison.
pub fn discordant_counts(row_i: &[f64], row_j: &[f64]) -> (usize, usize) {
    row_i
        .iter()
        .zip(row_j)
        .fold((0, 0), |(wi, wj), (a, b)| {
            if a > b {
                (wi + 1, wj)
            } else if b > a {
                (wi, wj + 1)
            } else {
                (wi, wj)
            }
        })
}

/// Continuity-corrected McNemar p-value from discordant counts.
pub fn mcnemar_from_counts(wins_i: usize, wins_j: usize) -> f64 {
    let d = wins_i + wins_j;
    if d == 0 {
        return 1.0;
    }
    let diff = wins_i.abs_diff(wins_j) as f64 - 1.0;
    let statistic = diff * diff / d as f64;
    chi_squared_1_sf(statistic)
}

fn chi_squared_1_sf(x: f64) -> f64 {
    let dist = ChiSquared::new(1.0).expect("one degree of freedom is valid");
    dist.sf(x).clamp(0.0, 1.0)
}

pub fn mcnemar_p(truth: &GroundTruth, i: MethodIndex, j: MethodIndex) -> Result<f64> {
    truth.check(i)?;
    truth.check(j)?;
    if i == j {
        return Err(Error::Input("McNemar test needs two distinct methods".into()));
    }
    let (wi, wj) = discordant_counts(truth.row(i), truth.row(j));
    Ok(mcnemar_from_counts(wi, wj))
}

/// 1 when the predicted method is the best, ties it exactly, or McNemar
/// against the best fails to reject at `p_level`.
pub fn precision_significance(
    truth: &GroundTruth,
    predicted: MethodIndex,
    p_level: f64,
) -> Result<u8> {
    truth.check(predicted)?;
    if !(p_level > 0.0 && p_level < 1.0) {
        return Err(Error::Input(format!("p level {p_level} must lie in (0, 1)")));
    }
    if predicted == truth.best_index || truth.means[predicted] == truth.best_mean() {
        return Ok(1);
    }
    let p = mcnemar_p(truth, predicted, truth.best_index)?;
    Ok(u8::from(p > p_level))
}

/// NDCG@k with the true mean of each method as its gain.
pub fn ndcg_at_k(truth: &GroundTruth, predicted_ranking: &[MethodIndex], k: usize) -> Result<f64> {
    ndcg_from_means(&truth.means, predicted_ranking, k)
}

pub fn ndcg_from_means(means: &[f64], predicted_ranking: &[MethodIndex], k: usize) -> Result<f64> {
    if k == 0 || k > means.len() {
        return Err(Error::Input(format!(
            "k = {k} must lie in 1..={}",
            means.len()
        )));
    }
    if predicted_ranking.len() < k {
        return Err(Error::Input(format!(
            "ranking has {} entries, need at least {k}",
            predicted_ranking.len()
        )));
    }
    let top = &predicted_ranking[..k];
    let mut seen = vec![false; means.len()];
    for &i in top {
        if i >= means.len() {
            return Err(Error::Input(format!("method index {i} out of range")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Input(format!("method {i} appears twice in the top {k}")));
        }
    }
    let discount = |p: usize| (p as f64 + 2.0).log2();
    let dcg: f64 = top
        .iter()
        .enumerate()
        .map(|(p, &i)| means[i] / discount(p))
        .sum();
    let mut ideal = means.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal[..k]
        .iter()
        .enumerate()
        .map(|(p, &g)| g / discount(p))
        .sum();
    if idcg == 0.0 {
        return Ok(1.0);
    }
    Ok((dcg / idcg).clamp(0.0, 1.0))
}
