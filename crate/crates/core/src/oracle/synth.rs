//! Synthetic score matrices with known ground truth.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ScoreMatrix, ScoreOracle};
use crate::error::{Error, Result};
use crate::metrics::GroundTruth;
use crate::rng::derive_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Noise {
    /// Scores equal the planted probabilities.
    None,
    /// `S_ij ~ Bernoulli(p_ij)`.
    Bernoulli,
    /// Binary scores with exactly `round(p * k)` ones, placed uniformly at
    /// random, among the `k` examples of a row that share the probability
    /// `p`. Realized row means then match the planted means up to rounding.
    /// Needs a profile with repeated factor values.
    #[serde(rename = "bernoulli-exact")]
    BernoulliExact,
    /// `S_ij = clamp(p_ij + sigma * N(0, 1), 0, 1)`.
    Gaussian { sigma: f64 },
}

/// A generated matrix together with its exact ground truth.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub oracle: ScoreOracle,
    pub truth: GroundTruth,
}

impl PlantedInstance {
    fn build(methods: usize, examples: usize, scores: Vec<f64>) -> Result<Self> {
        let matrix = ScoreMatrix::from_scores(methods, examples, scores)?;
        let truth = matrix.ground_truth()?;
        Ok(Self {
            oracle: ScoreOracle::from_matrix(matrix),
            truth,
        })
    }
}

fn check_means(means: &[f64], noise: Noise) -> Result<()> {
    if means.is_empty() {
        return Err(Error::Input("at least one method mean is required".into()));
    }
    if let Some(bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::Input(format!("mean {bad} is outside [0, 1]")));
    }
    if let Noise::Gaussian { sigma } = noise {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Input(format!("sigma {sigma} must be >= 0")));
        }
    }
    Ok(())
}

fn draw<R: Rng + ?Sized>(p: f64, noise: Noise, rng: &mut R) -> f64 {
    match noise {
        Noise::None => p,
        Noise::BernoulliExact => unreachable!("exact rows are drawn whole"),
        Noise::Bernoulli => f64::from(u8::from(rng.random::<f64>() < p)),
        Noise::Gaussian { sigma } => {
            let z: f64 = StandardNormal.sample(rng);
            (p + sigma * z).clamp(0.0, 1.0)
        }
    }
}

/// Examples grouped by identical factor, groups in order of first appearance.
fn factor_groups(factors: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (j, &v) in factors.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == v) {
            Some(g) => g.1.push(j),
            None => groups.push((v, vec![j])),
        }
    }
    groups
}

/// Binary row with exactly `round(mean * v * k)` ones in each group of `k`
/// examples sharing factor `v`.
fn exact_row<R: Rng + ?Sized>(mean: f64, groups: &[(f64, Vec<usize>)], examples: usize, rng: &mut R) -> Vec<f64> {
    let mut row = vec![0.0; examples];
    for (v, members) in groups {
        let k = members.len();
        let ones = ((mean * v * k as f64).round() as usize).min(k);
        for pick in index::sample(rng, k, ones) {
            row[members[pick]] = 1.0;
        }
    }
    row
}

/// Matrix whose row `i` is drawn around `means[i]`, independently per cell.
pub fn synth_planted<R: Rng + ?Sized>(
    examples: usize,
    means: &[f64],
    noise: Noise,
    rng: &mut R,
) -> Result<PlantedInstance> {
    check_means(means, noise)?;
    if examples == 0 {
        return Err(Error::Input("at least one example is required".into()));
    }
    let mut scores = Vec::with_capacity(means.len() * examples);
    for &mean in means {
        if noise == Noise::BernoulliExact {
            scores.extend(exact_row(mean, &[(1.0, (0..examples).collect())], examples, rng));
        } else {
            for _ in 0..examples {
                scores.push(draw(mean, noise, rng));
            }
        }
    }
    PlantedInstance::build(means.len(), examples, scores)
}

/// Rank-1 planted matrix: cell probabilities `means[i] * v_j`, where the
/// example factors `v_j` are uniform in `[1 - spread, 1 + spread]` rescaled to
/// average exactly 1, so row `i` has expected mean `means[i]`.
pub fn synth_rank1<R: Rng + ?Sized>(
    examples: usize,
    means: &[f64],
    spread: f64,
    noise: Noise,
    rng: &mut R,
) -> Result<PlantedInstance> {
    check_means(means, noise)?;
    if examples == 0 {
        return Err(Error::Input("at least one example is required".into()));
    }
    if !(0.0..1.0).contains(&spread) {
        return Err(Error::Input(format!("spread {spread} must lie in [0, 1)")));
    }
    let factors: Vec<f64> = (0..examples)
        .map(|_| 1.0 + spread * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    synth_rank1_factors(&factors, means, noise, rng)
}

/// Rank-1 planted matrix with caller-supplied example factors. The factors are
/// rescaled to average 1, so row `i` has expected mean `means[i]`.
pub fn synth_rank1_factors<R: Rng + ?Sized>(
    factors: &[f64],
    means: &[f64],
    noise: Noise,
    rng: &mut R,
) -> Result<PlantedInstance> {
    check_means(means, noise)?;
    if factors.is_empty() {
        return Err(Error::Input("at least one example is required".into()));
    }
    if factors.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Input("example factors must be positive".into()));
    }
    let avg = factors.iter().sum::<f64>() / factors.len() as f64;
    let factors: Vec<f64> = factors.iter().map(|v| v / avg).collect();

    let top = means.iter().cloned().fold(0.0, f64::max);
    let peak = factors.iter().cloned().fold(0.0, f64::max);
    if top * peak > 1.0 {
        return Err(Error::Input(format!(
            "largest planted probability {:.4} exceeds 1; lower the spread",
            top * peak
        )));
    }
    let groups = factor_groups(&factors);
    if noise == Noise::BernoulliExact && 2 * groups.len() > factors.len() {
        return Err(Error::Input(
            "exact Bernoulli rows need repeated example factors, e.g. a two-level profile".into(),
        ));
    }
    let mut scores = Vec::with_capacity(means.len() * factors.len());
    for &mean in means {
        if noise == Noise::BernoulliExact {
            scores.extend(exact_row(mean, &groups, factors.len(), rng));
        } else {
            for &v in &factors {
                scores.push(draw(mean * v, noise, rng));
            }
        }
    }
    PlantedInstance::build(means.len(), factors.len(), scores)
}

/// How example difficulty varies in a rank-1 instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    /// Every example has factor 1; rows are i.i.d. around their means.
    Flat,
    /// Factors uniform in `[1 - spread, 1 + spread]`.
    Uniform { spread: f64 },
    /// A share `hard_fraction` of examples, chosen at random, has factor
    /// `hard_factor`; the rest share the factor that makes the average 1.
    TwoLevel { hard_fraction: f64, hard_factor: f64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Flat
    }
}

/// Parameters of a generated instance, reproducible from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub examples: usize,
    pub means: Vec<f64>,
    #[serde(default)]
    pub profile: Profile,
    pub noise: Noise,
    pub seed: u64,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<PlantedInstance> {
        let mut rng = derive_rng(self.seed, "synth");
        match self.profile {
            Profile::Flat => synth_planted(self.examples, &self.means, self.noise, &mut rng),
            Profile::Uniform { spread } => {
                synth_rank1(self.examples, &self.means, spread, self.noise, &mut rng)
            }
            Profile::TwoLevel {
                hard_fraction,
                hard_factor,
            } => {
                let n = self.examples;
                let hard = (hard_fraction * n as f64).round() as usize;
                if !(0.0..=1.0).contains(&hard_fraction) || hard == n {
                    return Err(Error::Input(format!(
                        "hard fraction {hard_fraction} must leave at least one easy example"
                    )));
                }
                let easy = (n as f64 - hard_factor * hard as f64) / (n - hard) as f64;
                if !(hard_factor > 0.0) || !(easy > 0.0) {
                    return Err(Error::Input(format!(
                        "hard factor {hard_factor} must lie in (0, {})",
                        n as f64 / hard.max(1) as f64
                    )));
                }
                let mut factors = vec![easy; n];
                for j in index::sample(&mut rng, n, hard) {
                    factors[j] = hard_factor;
                }
                synth_rank1_factors(&factors, &self.means, self.noise, &mut rng)
            }
        }
    }
}
