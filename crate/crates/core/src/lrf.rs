//! Low-rank completion of the observed score matrix.
//!
//! [`als_fit`] solves the masked, ridge-regularized factorization
//! `min ||O * (U V^T - S_obs)||_F^2 + ridge (||U||_F^2 + ||V||_F^2)` by
//! alternating exact row-wise least-squares solves. [`fit_ensemble`] fits `C`
//! such models, each on a random subset of the observations, and reduces them
//! to an estimate `S_hat` (member mean, clamped to `[0, 1]`) and an
//! uncertainty matrix `R` (root-mean-square member deviation on unobserved
//! cells, zero on observed ones).

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AlgorithmConfig, AlsSettings};
use crate::error::{Error, Result};
use crate::rng::SeedPath;
use crate::state::{ExampleIndex, MethodIndex, ScoringState};

/// Rank-`r` factors of one fit, plus the fallback used for rows and columns
/// that had no observations in the fit's support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    pub rank: usize,
    /// `methods x rank`, row-major.
    pub u: Vec<f64>,
    /// `examples x rank`, row-major.
    pub v: Vec<f64>,
    pub row_support: Vec<bool>,
    pub col_support: Vec<bool>,
    /// Mean observed score over the fit's support.
    pub fallback: f64,
}

impl FactorPair {
    pub fn methods(&self) -> usize {
        self.row_support.len()
    }

    pub fn examples(&self) -> usize {
        self.col_support.len()
    }

    #[inline]
    pub fn predict(&self, i: MethodIndex, j: ExampleIndex) -> f64 {
        if !(self.row_support[i] && self.col_support[j]) {
            return self.fallback;
        }
        let r = self.rank;
        let ui = &self.u[i * r..(i + 1) * r];
        let vj = &self.v[j * r..(j + 1) * r];
        ui.iter().zip(vj).map(|(a, b)| a * b).sum()
    }

    /// Predictions for row `i` written into `out` (length `n`).
    pub fn predict_row(&self, i: MethodIndex, out: &mut [f64]) {
        if !self.row_support[i] {
            out.iter_mut().for_each(|x| *x = self.fallback);
            return;
        }
        let r = self.rank;
        if r == 1 {
            let ui = self.u[i];
            for ((x, &vj), &seen) in out.iter_mut().zip(&self.v).zip(&self.col_support) {
                *x = if seen { ui * vj } else { self.fallback };
            }
            return;
        }
        let ui = &self.u[i * r..(i + 1) * r];
        for (j, x) in out.iter_mut().enumerate() {
            *x = if self.col_support[j] {
                let vj = &self.v[j * r..(j + 1) * r];
                ui.iter().zip(vj).map(|(a, b)| a * b).sum()
            } else {
                self.fallback
            };
        }
    }

    /// All predictions, row-major.
    pub fn predictions(&self) -> Vec<f64> {
        let n = self.examples();
        (0..self.methods() * n).map(|k| self.predict(k / n, k % n)).collect()
    }
}

/// Result of one ALS solve.
#[derive(Debug, Clone)]
pub struct AlsFit {
    pub factors: FactorPair,
    /// Objective at initialization and after every full alternation.
    pub objective_trace: Vec<f64>,
}

impl AlsFit {
    pub fn iterations(&self) -> usize {
        self.objective_trace.len() - 1
    }
}

/// Observations in both row-major and column-major compressed form.
struct Support {
    methods: usize,
    row_ptr: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
}

impl Support {
    /// `entries` must be sorted row-major.
    fn new(methods: usize, examples: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut row_ptr = vec![0; methods + 1];
        let mut col_ptr = vec![0; examples + 1];
        for &(i, j, _) in entries {
            row_ptr[i + 1] += 1;
            col_ptr[j + 1] += 1;
        }
        for k in 0..methods {
            row_ptr[k + 1] += row_ptr[k];
        }
        for k in 0..examples {
            col_ptr[k + 1] += col_ptr[k];
        }
        let row_col = entries.iter().map(|e| e.1).collect();
        let row_val = entries.iter().map(|e| e.2).collect();
        let mut fill = col_ptr.clone();
        let mut col_row = vec![0; entries.len()];
        let mut col_val = vec![0.0; entries.len()];
        for &(i, j, s) in entries {
            let at = fill[j];
            col_row[at] = i;
            col_val[at] = s;
            fill[j] += 1;
        }
        Self {
            methods,
            row_ptr,
            row_col,
            row_val,
            col_ptr,
            col_row,
            col_val,
        }
    }
}

/// Fits rank-`rank` factors to the observed entries selected by `member_mask`.
///
/// `member_mask` is row-major `m x n` and must only select observed pairs.
pub fn als_fit<R: Rng + ?Sized>(
    state: &ScoringState,
    member_mask: &[bool],
    rank: usize,
    settings: &AlsSettings,
    rng: &mut R,
) -> Result<AlsFit> {
    let (m, n) = (state.methods(), state.examples());
    if member_mask.len() != m * n {
        return Err(Error::Input(format!(
            "member mask has {} entries, expected {}",
            member_mask.len(),
            m * n
        )));
    }
    let mut entries = Vec::new();
    for (k, &keep) in member_mask.iter().enumerate() {
        if keep {
            let (i, j) = (k / n, k % n);
            let s = state.get(i, j).ok_or_else(|| {
                Error::Input(format!("member mask selects unobserved pair ({i}, {j})"))
            })?;
            entries.push((i, j, s));
        }
    }
    fit_entries(m, n, &entries, rank, settings, rng)
}

fn fit_entries<R: Rng + ?Sized>(
    methods: usize,
    examples: usize,
    entries: &[(usize, usize, f64)],
    rank: usize,
    settings: &AlsSettings,
    rng: &mut R,
) -> Result<AlsFit> {
    if entries.is_empty() {
        return Err(Error::DegenerateFactorization);
    }
    if rank == 0 {
        return Err(Error::Config("rank must be positive".into()));
    }
    let support = Support::new(methods, examples, entries);
    let fallback = entries.iter().map(|e| e.2).sum::<f64>() / entries.len() as f64;

    let scale = (fallback / rank as f64).sqrt();
    let mut u: Vec<f64> = (0..methods * rank).map(|_| scale * rng.random::<f64>()).collect();
    let mut v: Vec<f64> = (0..examples * rank).map(|_| scale * rng.random::<f64>()).collect();

    let ridge = settings.ridge;
    let mut solver = RidgeSolver::new(rank);
    let mut trace = vec![objective(&support, &u, &v, rank, ridge)];
    for _ in 0..settings.max_iterations {
        solve_side(
            &support.row_ptr,
            &support.row_col,
            &support.row_val,
            &v,
            &mut u,
            rank,
            ridge,
            &mut solver,
        );
        solve_side(
            &support.col_ptr,
            &support.col_row,
            &support.col_val,
            &u,
            &mut v,
            rank,
            ridge,
            &mut solver,
        );
        let current = objective(&support, &u, &v, rank, ridge);
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(current);
        let drop = previous - current;
        if previous <= f64::MIN_POSITIVE || drop <= settings.tolerance * previous {
            break;
        }
    }

    let row_support = (0..methods)
        .map(|i| support.row_ptr[i + 1] > support.row_ptr[i])
        .collect();
    let col_support = (0..examples)
        .map(|j| support.col_ptr[j + 1] > support.col_ptr[j])
        .collect();
    Ok(AlsFit {
        factors: FactorPair {
            rank,
            u,
            v,
            row_support,
            col_support,
            fallback,
        },
        objective_trace: trace,
    })
}

/// Masked squared residual plus the ridge penalty on both factors.
fn objective(support: &Support, u: &[f64], v: &[f64], rank: usize, ridge: f64) -> f64 {
    let mut total = 0.0;
    if rank == 1 {
        for i in 0..support.methods {
            let range = support.row_ptr[i]..support.row_ptr[i + 1];
            for (&j, &s) in support.row_col[range.clone()].iter().zip(&support.row_val[range]) {
                let e = u[i] * v[j] - s;
                total += e * e;
            }
        }
    }
    for i in (0..support.methods).filter(|_| rank > 1) {
        let ui = &u[i * rank..(i + 1) * rank];
        for k in support.row_ptr[i]..support.row_ptr[i + 1] {
            let j = support.row_col[k];
            let vj = &v[j * rank..(j + 1) * rank];
            let pred: f64 = ui.iter().zip(vj).map(|(a, b)| a * b).sum();
            let e = pred - support.row_val[k];
            total += e * e;
        }
    }
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>();
    total + ridge * (norm(u) + norm(v))
}

/// Row-wise ridge solves: for each target row `t`,
/// `x_t = (sum_k y_k y_k^T + ridge I)^-1 sum_k s_tk y_k` over `t`'s entries.
#[allow(clippy::too_many_arguments)]
fn solve_side(
    ptr: &[usize],
    idx: &[usize],
    val: &[f64],
    fixed: &[f64],
    target: &mut [f64],
    rank: usize,
    ridge: f64,
    solver: &mut RidgeSolver,
) {
    let rows = ptr.len() - 1;
    if rank == 1 {
        for t in 0..rows {
            let (mut gram, mut rhs) = (ridge, 0.0);
            for k in ptr[t]..ptr[t + 1] {
                let y = fixed[idx[k]];
                gram += y * y;
                rhs += val[k] * y;
            }
            target[t] = if gram > 0.0 { rhs / gram } else { 0.0 };
        }
        return;
    }
    for t in 0..rows {
        solver.reset(ridge);
        for k in ptr[t]..ptr[t + 1] {
            let y = &fixed[idx[k] * rank..(idx[k] + 1) * rank];
            solver.accumulate(y, val[k]);
        }
        solver.solve_into(&mut target[t * rank..(t + 1) * rank]);
    }
}

/// Dense `r x r` normal-equation accumulator with a Cholesky solve.
struct RidgeSolver {
    rank: usize,
    gram: Vec<f64>,
    rhs: Vec<f64>,
}

impl RidgeSolver {
    fn new(rank: usize) -> Self {
        Self {
            rank,
            gram: vec![0.0; rank * rank],
            rhs: vec![0.0; rank],
        }
    }

    fn reset(&mut self, ridge: f64) {
        self.gram.iter_mut().for_each(|g| *g = 0.0);
        self.rhs.iter_mut().for_each(|b| *b = 0.0);
        for d in 0..self.rank {
            self.gram[d * self.rank + d] = ridge;
        }
    }

    fn accumulate(&mut self, y: &[f64], s: f64) {
        let r = self.rank;
        for a in 0..r {
            self.rhs[a] += s * y[a];
            for b in 0..=a {
                self.gram[a * r + b] += y[a] * y[b];
            }
        }
    }

    /// Solves in place; a singular system (no data and no ridge) yields zeros
    /// in the null directions.
    fn solve_into(&mut self, out: &mut [f64]) {
        let r = self.rank;
        let l = &mut self.gram;
        // lower-triangular Cholesky, in place
        for a in 0..r {
            for b in 0..=a {
                let mut sum = l[a * r + b];
                for k in 0..b {
                    sum -= l[a * r + k] * l[b * r + k];
                }
                if a == b {
                    l[a * r + a] = if sum > 1e-300 { sum.sqrt() } else { 0.0 };
                } else {
                    let d = l[b * r + b];
                    l[a * r + b] = if d > 0.0 { sum / d } else { 0.0 };
                }
            }
        }
        // forward then back substitution
        let y = &mut self.rhs;
        for a in 0..r {
            let mut sum = y[a];
            for k in 0..a {
                sum -= l[a * r + k] * y[k];
            }
            let d = l[a * r + a];
            y[a] = if d > 0.0 { sum / d } else { 0.0 };
        }
        for a in (0..r).rev() {
            let mut sum = y[a];
            for k in a + 1..r {
                sum -= l[k * r + a] * out[k];
            }
            let d = l[a * r + a];
            out[a] = if d > 0.0 { sum / d } else { 0.0 };
        }
    }
}

/// `C` bootstrap-style factorizations reduced to an estimate and uncertainty.
#[derive(Debug, Clone)]
pub struct FactorEnsemble {
    pub members: Vec<FactorPair>,
    /// Unclamped member mean, row-major.
    pub raw_mean: Vec<f64>,
    /// `raw_mean` clamped to `[0, 1]`.
    pub estimate: Vec<f64>,
    /// RMS member deviation from `raw_mean`, zero on observed cells.
    pub uncertainty: Vec<f64>,
    /// ALS alternations per member.
    pub iterations: Vec<usize>,
}

/// Fits `config.ensemble_size` members, each hiding a uniformly random
/// `config.dropout_fraction` of the observed entries. Member `c` draws from
/// `seed.child("member-c")`, so the result is independent of scheduling.
pub fn fit_ensemble(
    state: &ScoringState,
    config: &AlgorithmConfig,
    seed: &SeedPath,
) -> Result<FactorEnsemble> {
    let (m, n) = (state.methods(), state.examples());
    let observed: Vec<(usize, usize, f64)> = state
        .mask()
        .iter()
        .enumerate()
        .filter(|(_, seen)| **seen)
        .map(|(k, _)| (k / n, k % n, state.raw_scores()[k]))
        .collect();
    if observed.is_empty() {
        return Err(Error::DegenerateFactorization);
    }
    let total = observed.len();
    let hidden = ((config.dropout_fraction * total as f64).round() as usize).min(total - 1);

    let fits: Vec<AlsFit> = (0..config.ensemble_size)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(&format!("member-{c}")).rng();
            let entries: Vec<(usize, usize, f64)> = if hidden == 0 {
                observed.clone()
            } else {
                let mut drop = vec![false; total];
                for k in index::sample(&mut rng, total, hidden) {
                    drop[k] = true;
                }
                observed
                    .iter()
                    .zip(&drop)
                    .filter(|(_, &d)| !d)
                    .map(|(e, _)| *e)
                    .collect()
            };
            fit_entries(m, n, &entries, config.rank, &config.als, &mut rng)
        })
        .collect::<Result<_>>()?;

    let iterations = fits.iter().map(AlsFit::iterations).collect();
    let members: Vec<FactorPair> = fits.into_iter().map(|f| f.factors).collect();
    let (raw_mean, uncertainty) = reduce_members(&members, state.mask(), m, n);
    let estimate = raw_mean.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    Ok(FactorEnsemble {
        members,
        raw_mean,
        estimate,
        uncertainty,
        iterations,
    })
}

/// Member mean and masked RMS deviation, reduced per row in member order.
fn reduce_members(members: &[FactorPair], mask: &[bool], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let count = members.len() as f64;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut preds = vec![0.0; members.len() * n];
            for (member, row) in members.iter().zip(preds.chunks_exact_mut(n)) {
                member.predict_row(i, row);
            }
            let mut mean = vec![0.0; n];
            for row in preds.chunks_exact(n) {
                mean.iter_mut().zip(row).for_each(|(acc, p)| *acc += p);
            }
            mean.iter_mut().for_each(|x| *x /= count);
            let mut spread = vec![0.0; n];
            for row in preds.chunks_exact(n) {
                for (((acc, p), mu), seen) in spread.iter_mut().zip(row).zip(&mean).zip(&mask[i * n..(i + 1) * n]) {
                    if !seen {
                        let d = p - mu;
                        *acc += d * d;
                    }
                }
            }
            spread.iter_mut().for_each(|x| *x = (*x / count).sqrt());
            (mean, spread)
        })
        .collect();
    let mut raw_mean = Vec::with_capacity(m * n);
    let mut uncertainty = Vec::with_capacity(m * n);
    for (mean, spread) in rows {
        raw_mean.extend(mean);
        uncertainty.extend(spread);
    }
    (raw_mean, uncertainty)
}

/// Per-method mean of observed scores, with `estimate` filling unobserved cells.
pub fn gated_means(state: &ScoringState, estimate: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (state.methods(), state.examples());
    if estimate.len() != m * n {
        return Err(Error::Input(format!(
            "estimate has {} entries, expected {}",
            estimate.len(),
            m * n
        )));
    }
    let mask = state.mask();
    let scores = state.raw_scores();
    Ok((0..m)
        .map(|i| {
            let row = i * n..(i + 1) * n;
            let sum: f64 = row
                .map(|k| if mask[k] { scores[k] } else { estimate[k] })
                .sum();
            sum / n as f64
        })
        .collect())
}
