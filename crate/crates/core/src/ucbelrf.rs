//! Factorization-guided selection: UCB-E-LRF, its score-only ablation, and
//! the passive LRF baseline.
//!
//! After a uniform warm-up, every round refits the ensemble once, scores each
//! method by `B_i = (1/n) sum_j (O_ij S_ij + (1 - O_ij) S_hat_ij + eta R_ij)`,
//! and spends the round on the argmax method. The full variant evaluates that
//! method's most uncertain unobserved examples; the score-only variant draws
//! them uniformly. Predictions drop the uncertainty term.

use rand::Rng;

use crate::bandit::UniformPairs;
use crate::config::AlgorithmConfig;
use crate::error::{Error, Result};
use crate::lrf::{gated_means, FactorEnsemble};
use crate::oracle::ScoreOracle;
use crate::rng::{argmax_tie_break, SeedPath};
use crate::runner::{draw_without_replacement, EnsembleCache, RunOptions, Runner};
use crate::state::{ExampleIndex, MethodIndex, ScoringState};
use crate::trajectory::Trajectory;

/// Upper confidence bounds built from an ensemble fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LrfBounds {
    pub bounds: Vec<f64>,
    pub gated_means: Vec<f64>,
}

impl LrfBounds {
    pub fn compute(state: &ScoringState, ensemble: &FactorEnsemble, eta: f64) -> Result<Self> {
        let n = state.examples();
        let gated = gated_means(state, &ensemble.estimate)?;
        let bounds = gated
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let spread: f64 = ensemble.uncertainty[i * n..(i + 1) * n].iter().sum();
                g + eta * spread / n as f64
            })
            .collect();
        Ok(Self {
            bounds,
            gated_means: gated,
        })
    }

    pub fn select<R: Rng + ?Sized>(&self, state: &ScoringState, rng: &mut R) -> Result<MethodIndex> {
        argmax_tie_break(
            self.bounds
                .iter()
                .enumerate()
                .filter(|(i, _)| !state.row_is_full(*i))
                .map(|(i, &b)| (i, b)),
            rng,
        )
        .ok_or(Error::Exhausted)
    }
}

/// Evaluates `t0` uniformly drawn pairs from `pairs`.
fn warmup<P>(runner: &mut Runner<'_>, pairs: &mut UniformPairs, t0: usize, rng: &mut impl Rng, predict: &mut P) -> Result<()>
where
    P: FnMut(&ScoringState) -> Result<crate::trajectory::Prediction>,
{
    let batch = pairs.draw(t0.min(runner.remaining()), rng);
    runner.evaluate(&batch, true, predict)
}

/// Unobserved examples of row `i` by descending uncertainty, ties in random
/// order. One key is drawn per candidate regardless of how many are taken.
pub fn top_uncertain<R: Rng + ?Sized>(
    state: &ScoringState,
    uncertainty: &[f64],
    i: MethodIndex,
    take: usize,
    rng: &mut R,
) -> Vec<ExampleIndex> {
    let n = state.examples();
    let mut keyed: Vec<(f64, u64, ExampleIndex)> = state
        .unobserved_in_row(i)
        .iter()
        .map(|&j| (uncertainty[i * n + j], rng.random::<u64>(), j))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(take).map(|k| k.2).collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ExampleRule {
    MostUncertain,
    Uniform,
}

fn run_guided(
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    seed: &SeedPath,
    options: &RunOptions,
    rule: ExampleRule,
    name: &str,
) -> Result<Trajectory> {
    let (m, n) = (oracle.methods(), oracle.examples());
    config.validate_warmup(m, n)?;
    let mut runner = Runner::new(oracle, config.budget_total, options);
    let mut rng = seed.child("select").rng();
    let mut cache = EnsembleCache::new(seed, config);
    let mut uniform = UniformPairs::new(m, n);

    warmup(&mut runner, &mut uniform, config.warmup_budget, &mut rng, &mut |s| cache.predict(s))?;

    while runner.remaining() > 0 {
        let ensemble = cache.get(&runner.state)?;
        let bounds = LrfBounds::compute(&runner.state, ensemble, config.uncertainty_scale)?;
        let i = bounds.select(&runner.state, &mut rng)?;
        let take = config
            .batch_size
            .min(runner.remaining())
            .min(runner.state.unobserved_in_row(i).len());
        let examples = match rule {
            ExampleRule::MostUncertain => {
                top_uncertain(&runner.state, &ensemble.uncertainty, i, take, &mut rng)
            }
            ExampleRule::Uniform => {
                let mut pool = runner.state.unobserved_in_row(i).to_vec();
                draw_without_replacement(&mut pool, take, &mut rng)
            }
        };
        runner.selection_fits += 1;
        let pairs: Vec<_> = examples.into_iter().map(|j| (i, j)).collect();
        runner.evaluate(&pairs, false, &mut |s| cache.predict(s))?;
    }
    Ok(runner.finish(name))
}

pub fn run_ucb_e_lrf(
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    seed: &SeedPath,
    options: &RunOptions,
) -> Result<Trajectory> {
    run_guided(oracle, config, seed, options, ExampleRule::MostUncertain, "ucb-e-lrf")
}

pub fn run_ucb_e_lrf_score_only(
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    seed: &SeedPath,
    options: &RunOptions,
) -> Result<Trajectory> {
    run_guided(oracle, config, seed, options, ExampleRule::Uniform, "ucb-e-lrf-score-only")
}

/// Uniform pairs throughout (the same draws as row-mean imputation under the
/// same seed); predictions use gated means from an ensemble fit at each
/// checkpoint.
pub fn run_lrf_baseline(
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    seed: &SeedPath,
    options: &RunOptions,
) -> Result<Trajectory> {
    let (m, n) = (oracle.methods(), oracle.examples());
    config.validate_warmup(m, n)?;
    let mut runner = Runner::new(oracle, config.budget_total, options);
    let mut rng = seed.child("select").rng();
    let mut cache = EnsembleCache::new(seed, config);
    let mut uniform = UniformPairs::new(m, n);
    let mut predict = |s: &ScoringState| cache.predict(s);
    while runner.remaining() > 0 {
        let pairs = uniform.draw(config.batch_size.min(runner.remaining()), &mut rng);
        runner.evaluate(&pairs, false, &mut predict)?;
    }
    Ok(runner.finish("lrf"))
}
