//! Budget accounting, batch evaluation and checkpointing shared by every
//! algorithm.

use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lrf::{fit_ensemble, gated_means, FactorEnsemble};
use crate::oracle::ScoreOracle;
use crate::rng::{argmax_tie_break, SeedPath};
use crate::state::{ExampleIndex, MethodIndex, ScoringState};
use crate::config::AlgorithmConfig;
use crate::trajectory::{Batch, Checkpoint, Prediction, Trajectory};

/// Options that do not change which pairs an algorithm evaluates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Evaluation counts at which to record a prediction. The final budget is
    /// always recorded; values above it are ignored.
    pub checkpoints: Vec<usize>,
    /// Record seconds since start at each checkpoint.
    pub record_timing: bool,
}

pub(crate) struct Runner<'a> {
    oracle: &'a ScoreOracle,
    pub state: ScoringState,
    budget: usize,
    checkpoints: Vec<usize>,
    next_checkpoint: usize,
    pairs: Vec<(MethodIndex, ExampleIndex)>,
    batches: Vec<Batch>,
    records: Vec<Checkpoint>,
    started: Instant,
    record_timing: bool,
    pub selection_fits: usize,
}

impl<'a> Runner<'a> {
    pub fn new(oracle: &'a ScoreOracle, budget: usize, options: &RunOptions) -> Self {
        let mut checkpoints: Vec<usize> = options
            .checkpoints
            .iter()
            .copied()
            .filter(|&c| c > 0 && c < budget)
            .collect();
        checkpoints.push(budget);
        checkpoints.sort_unstable();
        checkpoints.dedup();
        Self {
            oracle,
            state: ScoringState::new(oracle.methods(), oracle.examples()),
            budget,
            checkpoints,
            next_checkpoint: 0,
            pairs: Vec::with_capacity(budget),
            batches: Vec::new(),
            records: Vec::new(),
            started: Instant::now(),
            record_timing: options.record_timing,
            selection_fits: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.state.evaluations_used()
    }

    /// Queries and records `pairs`, taking a prediction whenever the running
    /// count crosses a checkpoint.
    pub fn evaluate<P>(&mut self, pairs: &[(MethodIndex, ExampleIndex)], warmup: bool, predict: &mut P) -> Result<()>
    where
        P: FnMut(&ScoringState) -> Result<Prediction>,
    {
        if pairs.is_empty() {
            return Ok(());
        }
        if pairs.len() > self.remaining() {
            return Err(Error::Input(format!(
                "batch of {} exceeds the remaining budget {}",
                pairs.len(),
                self.remaining()
            )));
        }
        let scores = self.oracle.query_batch(pairs)?;
        self.batches.push(Batch {
            start: self.pairs.len(),
            len: pairs.len(),
            warmup,
        });
        for (&(i, j), &s) in pairs.iter().zip(&scores) {
            self.state.record(i, j, s)?;
            self.pairs.push((i, j));
            if self.checkpoints.get(self.next_checkpoint) == Some(&self.state.evaluations_used()) {
                let prediction = predict(&self.state)?;
                let wall_time_secs = self
                    .record_timing
                    .then(|| self.started.elapsed().as_secs_f64());
                self.records.push(Checkpoint {
                    evaluations_used: self.state.evaluations_used(),
                    prediction,
                    wall_time_secs,
                });
                self.next_checkpoint += 1;
            }
        }
        Ok(())
    }

    pub fn finish(self, algorithm: &str) -> Trajectory {
        let prediction = self
            .records
            .last()
            .map(|c| c.prediction.clone())
            .expect("the final budget is always a checkpoint");
        Trajectory {
            algorithm: algorithm.to_string(),
            budget: self.budget,
            pairs: self.pairs,
            batches: self.batches,
            selection_fits: self.selection_fits,
            checkpoints: self.records,
            prediction,
        }
    }
}

/// Stream for the tie-break of the prediction taken after `t` evaluations.
pub(crate) fn prediction_seed(seed: &SeedPath, t: usize) -> SeedPath {
    seed.child(&format!("predict@{t}"))
}

pub(crate) fn fit_seed(seed: &SeedPath, t: usize) -> SeedPath {
    seed.child(&format!("fit@{t}"))
}

/// Argmax of `estimates` over methods that have one; ties drawn from `seed`.
pub(crate) fn predict_from(estimates: Vec<Option<f64>>, seed: &SeedPath) -> Result<Prediction> {
    let mut rng = seed.rng();
    let top = estimates
        .iter()
        .flatten()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let tied = estimates.iter().filter(|e| **e == Some(top)).count();
    let best_index = argmax_tie_break(
        estimates.iter().enumerate().filter_map(|(i, e)| e.map(|v| (i, v))),
        &mut rng,
    )
    .ok_or_else(|| Error::Input("no method has an estimate".into()))?;
    let missing = estimates.iter().filter(|e| e.is_none()).count();
    let mut warnings = Vec::new();
    if missing > 0 {
        warnings.push(format!(
            "{missing} method(s) were never evaluated and are excluded from the prediction"
        ));
    }
    Ok(Prediction {
        best_index,
        estimated_means: estimates,
        tied,
        warnings,
    })
}

/// Prediction from per-method empirical means.
pub(crate) fn row_mean_prediction(state: &ScoringState, seed: &SeedPath) -> Result<Prediction> {
    predict_from(state.row_means(), &prediction_seed(seed, state.evaluations_used()))
}

/// Caches the ensemble for the most recent evaluation count so a checkpoint
/// prediction and the following batch selection share one fit.
pub(crate) struct EnsembleCache {
    seed: SeedPath,
    config: AlgorithmConfig,
    cached: Option<(usize, FactorEnsemble)>,
    pub fits: usize,
}

impl EnsembleCache {
    pub fn new(seed: &SeedPath, config: &AlgorithmConfig) -> Self {
        Self {
            seed: seed.clone(),
            config: config.clone(),
            cached: None,
            fits: 0,
        }
    }

    pub fn get(&mut self, state: &ScoringState) -> Result<&FactorEnsemble> {
        let t = state.evaluations_used();
        if self.cached.as_ref().map(|c| c.0) != Some(t) {
            let ensemble = fit_ensemble(state, &self.config, &fit_seed(&self.seed, t))?;
            self.fits += 1;
            self.cached = Some((t, ensemble));
        }
        Ok(&self.cached.as_ref().expect("just filled").1)
    }

    /// Prediction from gated means. A saturated state needs no fit.
    pub fn predict(&mut self, state: &ScoringState) -> Result<Prediction> {
        let means = if state.is_saturated() {
            gated_means(state, &vec![0.0; state.cells()])?
        } else {
            let estimate = &self.get(state)?.estimate;
            gated_means(state, estimate)?
        };
        let seed = prediction_seed(&self.seed, state.evaluations_used());
        predict_from(means.into_iter().map(Some).collect(), &seed)
    }
}

/// Draws `k` distinct entries of `pool` uniformly, one at a time, so the first
/// `k' < k` draws are the same as a `k'`-draw call on the same stream.
pub(crate) fn draw_without_replacement<T: Copy, R: Rng + ?Sized>(pool: &mut Vec<T>, k: usize, rng: &mut R) -> Vec<T> {
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(pool.len()) {
        let at = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(at));
    }
    out
}
