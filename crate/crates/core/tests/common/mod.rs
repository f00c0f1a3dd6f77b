#![allow(dead_code)]

use bestarm::oracle::{synth_planted, synth_rank1, Noise, PlantedInstance, Profile, SynthSpec};
use bestarm::lrf::FactorPair;
use bestarm::{derive_rng, Algorithm, AlgorithmConfig, RunOptions, ScoreOracle, ScoringState, SeedPath};
use rand::Rng;

/// Row means used by the near-tie benchmark: 80 methods spread over
/// [0.30, 0.685], concentrated towards the top, plus 20 methods within 0.01
/// of each other at the top.
pub fn near_tie_means() -> Vec<f64> {
    let rest = (0..80).map(|k| 0.30 + 0.385 * (1.0 - (1.0 - k as f64 / 79.0).powi(5)));
    let top = (0..20).map(|k| 0.69 + 0.01 * k as f64 / 19.0);
    rest.chain(top).collect()
}

pub fn near_tie_spec() -> SynthSpec {
    SynthSpec {
        examples: 800,
        means: near_tie_means(),
        profile: Profile::Flat,
        noise: Noise::Bernoulli,
        seed: 2024,
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

pub fn planted(examples: usize, means: &[f64], noise: Noise, seed: u64) -> PlantedInstance {
    synth_planted(examples, means, noise, &mut derive_rng(seed, "instance")).unwrap()
}

pub fn rank1(examples: usize, means: &[f64], noise: Noise, seed: u64) -> PlantedInstance {
    synth_rank1(examples, means, 0.3, noise, &mut derive_rng(seed, "instance")).unwrap()
}

/// Small configuration that keeps factorization runs cheap.
pub fn small_config(m: usize, n: usize, budget: usize) -> AlgorithmConfig {
    AlgorithmConfig {
        ensemble_size: 8,
        batch_size: 8,
        ..AlgorithmConfig::with_defaults(m, n, budget)
    }
}

/// State with every `(i, j, s)` recorded.
pub fn state_from(m: usize, n: usize, entries: &[(usize, usize, f64)]) -> ScoringState {
    let mut state = ScoringState::new(m, n);
    for &(i, j, s) in entries {
        state.record(i, j, s).unwrap();
    }
    state
}

/// Member prediction written out from its factors and support flags.
pub fn member_value(f: &FactorPair, i: usize, j: usize) -> f64 {
    if f.row_support[i] && f.col_support[j] {
        (0..f.rank).map(|k| f.u[i * f.rank + k] * f.v[j * f.rank + k]).sum()
    } else {
        f.fallback
    }
}

/// Ensemble mean, clamped estimate and masked RMS spread, by direct loops
/// over `i`, `j` and members.
pub fn brute_force_reduce(state: &ScoringState, members: &[FactorPair]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (m, n) = (state.methods(), state.examples());
    let c = members.len() as f64;
    let mut raw = vec![0.0; m * n];
    let mut estimate = vec![0.0; m * n];
    let mut spread = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut sum = 0.0;
            for f in members {
                sum += member_value(f, i, j);
            }
            let mean = sum / c;
            let mut sq = 0.0;
            for f in members {
                sq += (member_value(f, i, j) - mean).powi(2);
            }
            let gate = if state.is_observed(i, j) { 0.0 } else { 1.0 };
            raw[i * n + j] = mean;
            estimate[i * n + j] = mean.clamp(0.0, 1.0);
            spread[i * n + j] = gate * (sq / c).sqrt();
        }
    }
    (raw, estimate, spread)
}

/// `(1/n) sum_j (O S + (1 - O) S_hat)` by direct loops.
pub fn brute_force_gated(state: &ScoringState, estimate: &[f64]) -> Vec<f64> {
    let (m, n) = (state.methods(), state.examples());
    (0..m)
        .map(|i| {
            let mut total = 0.0;
            for j in 0..n {
                let o = if state.is_observed(i, j) { 1.0 } else { 0.0 };
                let s = state.get(i, j).unwrap_or(0.0);
                total += o * s + (1.0 - o) * estimate[i * n + j];
            }
            total / n as f64
        })
        .collect()
}

/// Exact rank-1 nonnegative `m x n` matrix with factors in `[0.3, 1]`.
pub fn rank1_matrix(m: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, "rank1");
    let u: Vec<f64> = (0..m).map(|_| 0.3 + 0.7 * rng.random::<f64>()).collect();
    let v: Vec<f64> = (0..n).map(|_| 0.3 + 0.7 * rng.random::<f64>()).collect();
    (0..m * n).map(|k| u[k / n] * v[k % n]).collect()
}

/// State observing each cell of `full` independently with probability `p`.
pub fn observe_fraction(m: usize, n: usize, full: &[f64], p: f64, seed: u64) -> ScoringState {
    let mut rng = derive_rng(seed, "observe");
    let mut state = ScoringState::new(m, n);
    for (k, &s) in full.iter().enumerate() {
        if rng.random::<f64>() < p {
            state.record(k / n, k % n, s).unwrap();
        }
    }
    state
}

pub fn relative_error(pred: &[f64], full: &[f64]) -> f64 {
    let err: f64 = pred.iter().zip(full).map(|(p, s)| (p - s).powi(2)).sum();
    let norm: f64 = full.iter().map(|s| s * s).sum();
    (err / norm).sqrt()
}

/// Objective trace never rises beyond round-off.
pub fn is_non_increasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

/// Runs `algorithm` at budgets `long` and `short` (same seed and settings) and
/// reports whether the short run is a prefix of the long one, prediction
/// included.
pub fn prefix_holds(
    algorithm: Algorithm,
    oracle: &ScoreOracle,
    config: &AlgorithmConfig,
    long: usize,
    short: usize,
    seed: &SeedPath,
) -> bool {
    let options = RunOptions {
        checkpoints: vec![short],
        record_timing: false,
    };
    let full = algorithm.run(oracle, &config.with_budget(long), seed, &options).unwrap();
    let part = algorithm.run(oracle, &config.with_budget(short), seed, &RunOptions::default()).unwrap();
    let at_short = full.checkpoints.iter().find(|c| c.evaluations_used == short).unwrap();
    full.pairs[..short] == part.pairs[..] && at_short.prediction == part.prediction
}

/// Chi-squared(1) upper tail by Simpson's rule on the half-normal form
/// `P(Z^2 > x) = 2 * int_{sqrt x}^inf phi(s) ds`.
pub fn chi2_sf_by_quadrature(x: f64) -> f64 {
    let (a, b) = (x.sqrt(), x.sqrt() + 40.0);
    let steps = 200_000;
    let h = (b - a) / steps as f64;
    let f = |s: f64| 2.0 * (-s * s / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = f(a) + f(b);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f(a + k as f64 * h);
    }
    total * h / 3.0
}

pub fn mcnemar_by_hand(wi: usize, wj: usize) -> f64 {
    let d = wi + wj;
    if d == 0 {
        return 1.0;
    }
    let stat = ((wi as f64 - wj as f64).abs() - 1.0).powi(2) / d as f64;
    chi2_sf_by_quadrature(stat)
}

/// DCG of the first `k` entries of `ranking`, gains taken from `means`.
pub fn dcg(means: &[f64], ranking: &[usize], k: usize) -> f64 {
    ranking[..k]
        .iter()
        .enumerate()
        .map(|(p, &i)| means[i] / ((p + 2) as f64).log2())
        .sum()
}

/// Every ordered selection of `k` distinct indices from `0..m`.
pub fn arrangements(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for prefix in arrangements(m, k - 1) {
        for i in 0..m {
            if !prefix.contains(&i) {
                let mut next = prefix.clone();
                next.push(i);
                out.push(next);
            }
        }
    }
    out
}
