mod common;

use bestarm::bandit::{
    run_filled_subset, run_row_mean_imputation, run_ucb_e, ucb_update, UcbState,
};
use bestarm::oracle::Noise;
use bestarm::rng::argmax_tie_break;
use bestarm::{AlgorithmConfig, RunOptions, ScoreOracle, ScoringState, SeedPath};
use rand::Rng;

use common::{planted, state_from};

/// UCB-E with `a = 0`, written out directly: the method with the highest
/// empirical mean (unvisited methods first), then uniform examples in its row.
fn greedy(oracle: &ScoreOracle, budget: usize, batch: usize, seed: &SeedPath) -> Vec<(usize, usize)> {
    let (m, n) = (oracle.methods(), oracle.examples());
    let mut state = ScoringState::new(m, n);
    let mut rng = seed.child("select").rng();
    let mut bounds = vec![f64::INFINITY; m];
    let mut pairs = Vec::new();
    while pairs.len() < budget {
        let open = (0..m).filter(|&i| state.row_count(i) < n).map(|i| (i, bounds[i]));
        let i = argmax_tie_break(open, &mut rng).unwrap();
        let mut pool = state.unobserved_in_row(i).to_vec();
        let take = batch.min(budget - pairs.len()).min(pool.len());
        for _ in 0..take {
            let at = rng.random_range(0..pool.len());
            let j = pool.swap_remove(at);
            pairs.push((i, j));
            state.record(i, j, oracle.query(i, j).unwrap()).unwrap();
        }
        bounds[i] = state.row_mean(i).unwrap();
    }
    pairs
}

#[test]
fn zero_exploration_is_greedy() {
    let instance = planted(12, &[0.3, 0.5, 0.45, 0.6, 0.2], Noise::Bernoulli, 4);
    for seed in 0..20 {
        for batch in [1, 3] {
            let config = AlgorithmConfig {
                exploration_a: 0.0,
                batch_size: batch,
                ..AlgorithmConfig::with_defaults(5, 12, 40)
            };
            let seed = SeedPath::root(seed);
            let run = run_ucb_e(&instance.oracle, &config, &seed, &RunOptions::default()).unwrap();
            assert_eq!(run.pairs, greedy(&instance.oracle, 40, batch, &seed));
        }
    }
}

#[test]
fn update_examples() {
    let state = state_from(1, 5, &[(0, 0, 1.0), (0, 1, 0.0), (0, 2, 1.0)]);
    let mut ucb = UcbState::new(1);
    ucb_update(&state, &mut ucb, 0, 0.25).unwrap();
    assert!((ucb.bounds[0] - (2.0 / 3.0 + (1.0f64 / 12.0).sqrt())).abs() < 1e-12);
    assert!((ucb.bounds[0] - 0.95534).abs() < 1e-5);
    ucb_update(&state, &mut ucb, 0, 0.0).unwrap();
    assert_eq!(ucb.bounds[0], 2.0 / 3.0);
    assert_eq!(ucb.counts[0], 3);
}

#[test]
fn dominant_arm_is_found_within_one_batch_per_method() {
    let mut means = vec![0.0; 8];
    means[0] = 1.0;
    let instance = planted(50, &means, Noise::None, 0);
    let config = AlgorithmConfig::with_defaults(8, 50, 8 * 32);
    for seed in 0..50 {
        let run = run_ucb_e(&instance.oracle, &config, &SeedPath::root(seed), &RunOptions::default()).unwrap();
        assert_eq!(run.prediction.best_index, 0);
    }
}

#[test]
fn ucb_spends_little_on_a_clearly_worse_arm() {
    let instance = planted(200, &[0.8, 0.3], Noise::Bernoulli, 11);
    let budget = 200;
    let share = |run_fn: fn(&ScoreOracle, &AlgorithmConfig, &SeedPath, &RunOptions) -> bestarm::Result<bestarm::Trajectory>| {
        let config = AlgorithmConfig {
            batch_size: 1,
            ..AlgorithmConfig::with_defaults(2, 200, budget)
        };
        let mut inferior = 0;
        for seed in 0..50 {
            let run = run_fn(&instance.oracle, &config, &SeedPath::root(seed), &RunOptions::default()).unwrap();
            inferior += run.pairs.iter().filter(|p| p.0 == 1).count();
        }
        inferior as f64 / (50 * budget) as f64
    };
    let ucb = share(run_ucb_e);
    let uniform = share(run_row_mean_imputation);
    assert!(ucb < 0.3, "inferior share {ucb}");
    assert!((uniform - 0.5).abs() < 0.05, "uniform share {uniform}");
}

#[test]
fn row_mean_separates_a_large_gap() {
    let instance = planted(200, &[0.9, 0.1], Noise::Bernoulli, 5);
    let config = AlgorithmConfig::with_defaults(2, 200, 200);
    let wins = (0..200)
        .filter(|&seed| {
            let run = run_row_mean_imputation(&instance.oracle, &config, &SeedPath::root(seed), &RunOptions::default())
                .unwrap();
            run.prediction.best_index == instance.truth.best_index
        })
        .count();
    assert!(wins as f64 / 200.0 >= 0.99, "{wins}/200");
}

#[test]
fn row_mean_estimates_are_unbiased() {
    let instance = planted(40, &[0.2, 0.5, 0.7], Noise::Bernoulli, 8);
    let config = AlgorithmConfig::with_defaults(3, 40, 30);
    let trials = 10_000;
    let mut samples = vec![Vec::with_capacity(trials); 3];
    for seed in 0..trials as u64 {
        let run = run_row_mean_imputation(&instance.oracle, &config, &SeedPath::root(seed), &RunOptions::default())
            .unwrap();
        for (i, est) in run.prediction.estimated_means.iter().enumerate() {
            samples[i].push(est.expect("every row is sampled at this budget"));
        }
    }
    for (i, xs) in samples.iter().enumerate() {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let se = (var / k).sqrt();
        let truth = instance.truth.means[i];
        assert!((mean - truth).abs() < 3.0 * se, "row {i}: {mean} vs {truth} (se {se})");
    }
}

#[test]
fn filled_subset_keeps_at_most_one_partial_column() {
    let instance = planted(15, &[0.2, 0.4, 0.6, 0.8, 0.5], Noise::Bernoulli, 2);
    let (m, n) = (5, 15);
    for budget in [2 * m, 37, m * n] {
        let config = AlgorithmConfig {
            batch_size: 4,
            ..AlgorithmConfig::with_defaults(m, n, budget)
        };
        let run = run_filled_subset(&instance.oracle, &config, &SeedPath::root(9), &RunOptions::default()).unwrap();
        let mut fill = vec![0; n];
        for &(_, j) in &run.pairs {
            fill[j] += 1;
            let partial = fill.iter().filter(|&&c| c != 0 && c != m).count();
            assert!(partial <= 1);
        }
        if budget == 2 * m {
            assert_eq!(fill.iter().filter(|&&c| c == m).count(), 2);
        }
        if budget == m * n {
            assert_eq!(run.prediction.best_index, instance.truth.best_index);
        }
    }
}

#[test]
fn short_budget_warns_about_unsampled_methods() {
    let instance = planted(10, &[0.2, 0.4, 0.6, 0.8], Noise::None, 1);
    let config = AlgorithmConfig {
        batch_size: 1,
        ..AlgorithmConfig::with_defaults(4, 10, 2)
    };
    let run = run_row_mean_imputation(&instance.oracle, &config, &SeedPath::root(0), &RunOptions::default()).unwrap();
    let p = &run.prediction;
    assert_eq!(p.estimated_means.iter().filter(|e| e.is_none()).count(), 2);
    assert!(p.estimated_means[p.best_index].is_some());
    assert_eq!(p.warnings.len(), 1);
}
