mod common;

use bestarm::metrics::{
    discordant_counts, hardness_from_means, hardness_h1, mcnemar_from_counts, mcnemar_p,
    ndcg_from_means, precision_gap, precision_significance, GroundTruth,
};
use bestarm::derive_rng;
use proptest::prelude::*;
use rand::Rng;

use common::{arrangements, dcg, mcnemar_by_hand};

fn truth_from_means(means: &[f64]) -> GroundTruth {
    GroundTruth::from_scores(means.len(), 1, means.to_vec()).unwrap()
}

#[test]
fn mcnemar_worked_examples() {
    assert!((mcnemar_from_counts(6, 2) - 0.2888).abs() < 1e-4);
    assert!((mcnemar_from_counts(6, 2) - mcnemar_by_hand(6, 2)).abs() < 1e-4);
    assert!(mcnemar_from_counts(20, 0) < 1e-4);
    assert_eq!(mcnemar_from_counts(0, 0), 1.0);
    let rows = GroundTruth::from_scores(2, 3, vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
    assert_eq!(mcnemar_p(&rows, 0, 1).unwrap(), 1.0);
}

#[test]
fn mcnemar_matches_quadrature_over_a_grid() {
    for wi in 0..25 {
        for wj in 0..25 {
            let got = mcnemar_from_counts(wi, wj);
            let want = mcnemar_by_hand(wi, wj);
            assert!((got - want).abs() < 1e-4, "({wi}, {wj}): {got} vs {want}");
        }
    }
}

#[test]
fn significance_levels_follow_the_p_value() {
    // method 1 beats the best on 2 examples and loses on 6: p ~ 0.289
    let mut scores = vec![0.0; 2 * 10];
    for j in 0..8 {
        scores[j] = 1.0;
    }
    for j in 6..10 {
        scores[10 + j] = 1.0;
    }
    let truth = GroundTruth::from_scores(2, 10, scores).unwrap();
    assert_eq!(truth.best_index, 0);
    assert_eq!(discordant_counts(truth.row(1), truth.row(0)), (2, 6));
    assert_eq!(precision_significance(&truth, 1, 0.1).unwrap(), 1);
    assert_eq!(precision_significance(&truth, 1, 0.3).unwrap(), 0);
    assert_eq!(precision_significance(&truth, 0, 0.3).unwrap(), 1);
}

#[test]
fn gap_precision_examples() {
    let truth = truth_from_means(&[0.80, 0.795, 0.60]);
    assert_eq!(precision_gap(&truth, 1, 0.01).unwrap(), 1);
    assert_eq!(precision_gap(&truth, 1, 0.001).unwrap(), 0);
    assert_eq!(precision_gap(&truth, 0, 0.0).unwrap(), 1);
    assert_eq!(precision_gap(&truth, 2, 0.5).unwrap(), 1);
}

#[test]
fn ndcg_worked_example() {
    let means = [0.9, 0.8, 0.5];
    let got = ndcg_from_means(&means, &[2, 0, 1], 2).unwrap();
    assert!((got - 0.7602).abs() < 1e-4, "{got}");
    assert!((ndcg_from_means(&means, &[0, 1, 2], 2).unwrap() - 1.0).abs() < 1e-15);
    assert!(ndcg_from_means(&means, &[0, 0, 1], 2).is_err());
}

#[test]
fn hardness_examples() {
    assert!((hardness_from_means(&[0.9, 0.8, 0.5]).unwrap() - 106.25).abs() < 1e-9);
    assert!((hardness_from_means(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!(hardness_from_means(&[0.4, 0.4]).is_err());
    let mut planted = vec![0.4; 10];
    planted[0] = 0.7;
    assert!((hardness_from_means(&planted).unwrap() - 100.0).abs() < 1e-9);
}

#[test]
fn ndcg_agrees_with_brute_force_over_all_rankings() {
    let mut rng = derive_rng(1, "ndcg");
    for m in 1..=6 {
        for _ in 0..5 {
            let mut means: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            if m > 2 {
                means[1] = means[0];
            }
            for k in 1..=m.min(3) {
                let ideal = arrangements(m, k)
                    .iter()
                    .map(|r| dcg(&means, r, k))
                    .fold(f64::NEG_INFINITY, f64::max);
                for ranking in arrangements(m, k) {
                    let want = dcg(&means, &ranking, k) / ideal;
                    let got = ndcg_from_means(&means, &ranking, k).unwrap();
                    assert!((got - want).abs() < 1e-4, "m={m} k={k} {ranking:?}");
                    assert!((0.0..=1.0 + 1e-12).contains(&got));
                    let perfect = (dcg(&means, &ranking, k) - ideal).abs() < 1e-12;
                    assert_eq!((got - 1.0).abs() < 1e-12, perfect);
                }
            }
        }
    }
}

#[test]
fn discordant_counts_match_enumeration() {
    let mut rng = derive_rng(2, "binary");
    for _ in 0..200 {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..20).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect())
            .collect();
        for i in 0..5 {
            for j in 0..5 {
                let (mut wi, mut wj) = (0, 0);
                for k in 0..20 {
                    match (rows[i][k] as u8, rows[j][k] as u8) {
                        (1, 0) => wi += 1,
                        (0, 1) => wj += 1,
                        _ => {}
                    }
                }
                assert_eq!(discordant_counts(&rows[i], &rows[j]), (wi, wj));
            }
        }
    }
}

proptest! {
    #[test]
    fn mcnemar_is_symmetric(scores in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0]), 2 * 15)) {
        let truth = GroundTruth::from_scores(2, 15, scores).unwrap();
        prop_assert_eq!(mcnemar_p(&truth, 0, 1).unwrap(), mcnemar_p(&truth, 1, 0).unwrap());
        let p = mcnemar_p(&truth, 0, 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn gap_precision_is_monotone_in_epsilon(
        means in prop::collection::vec(0.0f64..=1.0, 2..8),
        pick in 0usize..8,
        a in 0.0f64..0.5,
        b in 0.0f64..0.5,
    ) {
        let truth = truth_from_means(&means);
        let i = pick % means.len();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(precision_gap(&truth, i, lo).unwrap() <= precision_gap(&truth, i, hi).unwrap());
    }

    #[test]
    fn hardness_ignores_method_order(mut means in prop::collection::vec(0.0f64..=1.0, 2..10), seed in 0u64..100) {
        let truth = truth_from_means(&means);
        prop_assume!(truth.hardness.is_some());
        let h = hardness_h1(&truth).unwrap();
        let mut rng = derive_rng(seed, "shuffle");
        for k in (1..means.len()).rev() {
            means.swap(k, rng.random_range(0..=k));
        }
        let shuffled = hardness_h1(&truth_from_means(&means)).unwrap();
        prop_assert!((h - shuffled).abs() <= 1e-9 * h.max(1.0));
    }

    #[test]
    fn ndcg_stays_in_unit_interval(means in prop::collection::vec(0.0f64..=1.0, 1..9), seed in 0u64..1000) {
        let m = means.len();
        let mut ranking: Vec<usize> = (0..m).collect();
        let mut rng = derive_rng(seed, "ranking");
        for k in (1..m).rev() {
            ranking.swap(k, rng.random_range(0..=k));
        }
        for k in 1..=m {
            let v = ndcg_from_means(&means, &ranking, k).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}
