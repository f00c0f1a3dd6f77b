//! UCB-E and the two estimator-free baselines (row-mean imputation and
//! filled subset).
//!
//! UCB-E keeps, per method, `B_i = mean_i + sqrt(a / count_i)` (`+inf` before
//! the first observation). Each round evaluates the method with the largest
//! bound on up to `batch_size` of its unobserved examples, drawn uniformly
//! without replacement, and only then refreshes that method's bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::AlgorithmConfig;
use crate::error::{Error, Result};
use crate::oracle::ScoreOracle;
use crate::rng::{argmax_tie_break, SeedPath};
use crate::runner::{draw_without_replacement, row_mean_prediction, RunOptions, Runner};
use crate::state::{ExampleIndex, MethodIndex, ScoringState};
use crate::trajectory::Trajectory;

/// Upper confidence bounds and per-method observation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbState {
    pub bounds: Vec<f64>,
    pub counts: Vec<usize>,
}

impl UcbState {
    pub fn new(methods: usize) -> Self {
        Self {
            bounds: vec![f64::INFINITY; methods],
            counts: vec![0; methods],
        }
    }
}

/// Method with the largest bound among rows that still have unobserved
/// examples.
pub fn ucb_select_method<R: Rng + ?Sized>(
    state: &ScoringState,
    ucb: &UcbState,
    rng: &mut R,
) -> Result<MethodIndex> {
    argmax_tie_break(
        ucb.bounds
            .iter()
            .enumerate()
            .filter(|(i, _)| !state.row_is_full(*i))
            .map(|(i, &b)| (i, b)),
        rng,
    )
    .ok_or(Error::Exhausted)
}

/// One UCB-E selection: the argmax method and a uniform unobserved example.
pub fn ucb_select<R: Rng + ?Sized>(
    state: &ScoringState,
    ucb: &UcbState,
    rng: &mut R,
) -> Result<(MethodIndex, ExampleIndex)> {
    let i = ucb_select_method(state, ucb, rng)?;
    let row = state.unobserved_in_row(i);
    Ok((i, row[rng.random_range(0..row.len())]))
}

/// Refreshes `B_i` from row `i` of `state`.
pub fn ucb_update(state: &ScoringState, ucb: &mut UcbState, i: MethodIndex, a: f64) -> Result<()> {
    let count = state.row_count(i);
    let mean = state.row_mean(i)?;
    ucb.counts[i] = count;
    ucb.bounds[i] = mean + (a / count as f64).sqrt();
    Ok(())
}

pub fn run_ucb_e(
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    seed: &SeedPath,
    options: &RunOptions,
) -> Result<Trajectory> {
    config.validate(oracle.methods(), oracle.examples())?;
    let mut runner = Runner::new(oracle, config.budget_total, options);
    let mut ucb = UcbState::new(oracle.methods());
    let mut rng = seed.child("select").rng();
    let mut predict = |s: &ScoringState| row_mean_prediction(s, seed);

    while runner.remaining() > 0 {
        let i = ucb_select_method(&runner.state, &ucb, &mut rng)?;
        let take = config
            .batch_size
            .min(runner.remaining())
            .min(runner.state.unobserved_in_row(i).len());
        let mut pool = runner.state.unobserved_in_row(i).to_vec();
        let pairs: Vec<_> = draw_without_replacement(&mut pool, take, &mut rng)
            .into_iter()
            .map(|j| (i, j))
            .collect();
        runner.evaluate(&pairs, false, &mut predict)?;
        ucb_update(&runner.state, &mut ucb, i, config.exploration_a)?;
    }
    Ok(runner.finish("ucb-e"))
}

/// Uniformly random pairs without replacement over the whole matrix, in
/// rounds of `batch_size`. Shared with the passive factorization baseline and
/// the warm-up of the factorization-guided algorithms.
pub(crate) struct UniformPairs {
    pool: Vec<usize>,
    examples: usize,
}

impl UniformPairs {
    pub fn new(methods: usize, examples: usize) -> Self {
        Self {
            pool: (0..methods * examples).collect(),
            examples,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Vec<(MethodIndex, ExampleIndex)> {
        let n = self.examples;
        draw_without_replacement(&mut self.pool, k, rng)
            .into_iter()
            .map(|c| (c / n, c % n))
            .collect()
    }
}

pub fn run_row_mean_imputation(
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    seed: &SeedPath,
    options: &RunOptions,
) -> Result<Trajectory> {
    config.validate(oracle.methods(), oracle.examples())?;
    let mut runner = Runner::new(oracle, config.budget_total, options);
    let mut uniform = UniformPairs::new(oracle.methods(), oracle.examples());
    let mut rng = seed.child("select").rng();
    let mut predict = |s: &ScoringState| row_mean_prediction(s, seed);
    while runner.remaining() > 0 {
        let pairs = uniform.draw(config.batch_size.min(runner.remaining()), &mut rng);
        runner.evaluate(&pairs, false, &mut predict)?;
    }
    Ok(runner.finish("row-mean"))
}

/// Completes one uniformly chosen example column at a time, visiting methods
/// in uniformly random order within the column.
pub fn run_filled_subset(
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    seed: &SeedPath,
    options: &RunOptions,
) -> Result<Trajectory> {
    config.validate(oracle.methods(), oracle.examples())?;
    let m = oracle.methods();
    let mut runner = Runner::new(oracle, config.budget_total, options);
    let mut rng = seed.child("select").rng();
    let mut columns: Vec<ExampleIndex> = (0..oracle.examples()).collect();
    let mut predict = |s: &ScoringState| row_mean_prediction(s, seed);

    let mut current: Vec<MethodIndex> = Vec::new();
    let mut column = 0;
    while runner.remaining() > 0 {
        let mut pairs = Vec::new();
        let want = config.batch_size.min(runner.remaining());
        while pairs.len() < want {
            if current.is_empty() {
                column = draw_without_replacement(&mut columns, 1, &mut rng)[0];
                current = (0..m).collect();
            }
            let i = draw_without_replacement(&mut current, 1, &mut rng)[0];
            pairs.push((i, column));
        }
        runner.evaluate(&pairs, false, &mut predict)?;
    }
    Ok(runner.finish("filled-subset"))
}
