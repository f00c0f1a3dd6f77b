//! The partially observed score matrix shared by every selection algorithm.

use crate::error::{Error, Result};

pub type MethodIndex = usize;
pub type ExampleIndex = usize;

/// Observed scores, observation mask and evaluation count.
///
/// All mutation goes through [`ScoringState::record`]. Alongside the mask the
/// state keeps, per method, the list of still-unobserved examples so that
/// uniform draws within a row are O(1).
#[derive(Debug, Clone)]
pub struct ScoringState {
    methods: usize,
    examples: usize,
    scores: Vec<f64>,
    mask: Vec<bool>,
    row_counts: Vec<usize>,
    col_counts: Vec<usize>,
    evaluations_used: usize,
    unobserved: Vec<Vec<ExampleIndex>>,
    // position of (i, j) inside unobserved[i], valid while unobserved
    slot: Vec<usize>,
}

impl ScoringState {
    pub fn new(methods: usize, examples: usize) -> Self {
        let cells = methods * examples;
        Self {
            methods,
            examples,
            scores: vec![0.0; cells],
            mask: vec![false; cells],
            row_counts: vec![0; methods],
            col_counts: vec![0; examples],
            evaluations_used: 0,
            unobserved: (0..methods).map(|_| (0..examples).collect()).collect(),
            slot: (0..cells).map(|c| c % examples.max(1)).collect(),
        }
    }

    pub fn methods(&self) -> usize {
        self.methods
    }

    pub fn examples(&self) -> usize {
        self.examples
    }

    pub fn cells(&self) -> usize {
        self.methods * self.examples
    }

    pub fn evaluations_used(&self) -> usize {
        self.evaluations_used
    }

    pub fn is_saturated(&self) -> bool {
        self.evaluations_used == self.cells()
    }

    #[inline]
    fn offset(&self, i: MethodIndex, j: ExampleIndex) -> usize {
        i * self.examples + j
    }

    fn check_index(&self, i: MethodIndex, j: ExampleIndex) -> Result<()> {
        if i >= self.methods || j >= self.examples {
            return Err(Error::IndexOutOfRange {
                method: i,
                example: j,
                rows: self.methods,
                cols: self.examples,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn is_observed(&self, i: MethodIndex, j: ExampleIndex) -> bool {
        self.mask[self.offset(i, j)]
    }

    /// Observed score at `(i, j)`, or `None` when the pair is unobserved.
    #[inline]
    pub fn get(&self, i: MethodIndex, j: ExampleIndex) -> Option<f64> {
        let k = self.offset(i, j);
        self.mask[k].then(|| self.scores[k])
    }

    /// Row-major mask, `m * n` entries.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Row-major scores; entries where the mask is false are meaningless.
    pub fn raw_scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn row_count(&self, i: MethodIndex) -> usize {
        self.row_counts[i]
    }

    pub fn col_count(&self, j: ExampleIndex) -> usize {
        self.col_counts[j]
    }

    pub fn row_is_full(&self, i: MethodIndex) -> bool {
        self.row_counts[i] == self.examples
    }

    /// Unobserved examples of row `i`, in an order that depends on history.
    pub fn unobserved_in_row(&self, i: MethodIndex) -> &[ExampleIndex] {
        &self.unobserved[i]
    }

    /// Mean of the observed scores in row `i`, summed in column order.
    pub fn row_mean(&self, i: MethodIndex) -> Result<f64> {
        let count = self.row_counts[i];
        if count == 0 {
            return Err(Error::EmptyRow { method: i });
        }
        let row = self.offset(i, 0)..self.offset(i, 0) + self.examples;
        let sum: f64 = self.mask[row.clone()]
            .iter()
            .zip(&self.scores[row])
            .filter(|(seen, _)| **seen)
            .map(|(_, s)| *s)
            .sum();
        Ok(sum / count as f64)
    }

    /// Row means for every method; `None` for rows without observations.
    pub fn row_means(&self) -> Vec<Option<f64>> {
        (0..self.methods).map(|i| self.row_mean(i).ok()).collect()
    }

    /// Store the score for a previously unobserved pair.
    pub fn record(&mut self, i: MethodIndex, j: ExampleIndex, score: f64) -> Result<()> {
        self.check_index(i, j)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreRange {
                method: i,
                example: j,
                value: score,
            });
        }
        let k = self.offset(i, j);
        if self.mask[k] {
            return Err(Error::DuplicateObservation {
                method: i,
                example: j,
            });
        }
        self.mask[k] = true;
        self.scores[k] = score;
        self.row_counts[i] += 1;
        self.col_counts[j] += 1;
        self.evaluations_used += 1;

        let pos = self.slot[k];
        let row = &mut self.unobserved[i];
        row.swap_remove(pos);
        if let Some(&moved) = row.get(pos) {
            self.slot[i * self.examples + moved] = pos;
        }
        Ok(())
    }

    /// Number of true mask entries, counted directly.
    pub fn count_mask(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn row_mean_examples() {
        let mut s = ScoringState::new(1, 3);
        s.record(0, 0, 1.0).unwrap();
        s.record(0, 1, 0.0).unwrap();
        s.record(0, 2, 1.0).unwrap();
        assert_eq!(s.row_mean(0).unwrap(), 2.0 / 3.0);

        let mut s = ScoringState::new(1, 10);
        s.record(0, 3, 0.25).unwrap();
        s.record(0, 8, 0.75).unwrap();
        assert_eq!(s.row_mean(0).unwrap(), 0.5);

        let mut s = ScoringState::new(1, 7);
        for j in 0..7 {
            s.record(0, j, 0.3).unwrap();
        }
        assert!((s.row_mean(0).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn row_mean_of_empty_row_fails() {
        let s = ScoringState::new(2, 2);
        assert!(matches!(s.row_mean(1), Err(Error::EmptyRow { method: 1 })));
    }

    #[test]
    fn record_updates_mask_and_count() {
        let mut s = ScoringState::new(2, 2);
        s.record(0, 1, 0.5).unwrap();
        assert_eq!(s.evaluations_used(), 1);
        assert!(s.is_observed(0, 1));
        assert_eq!(s.get(0, 1), Some(0.5));
        assert_eq!(s.get(0, 0), None);
        assert!(matches!(
            s.record(0, 1, 0.5),
            Err(Error::DuplicateObservation { .. })
        ));
        assert!(matches!(s.record(1, 1, 1.5), Err(Error::ScoreRange { .. })));
        assert!(matches!(s.record(2, 0, 0.5), Err(Error::IndexOutOfRange { .. })));
        assert_eq!(s.evaluations_used(), 1);
    }

    #[test]
    fn saturation() {
        let mut s = ScoringState::new(3, 4);
        for i in 0..3 {
            for j in 0..4 {
                s.record(i, j, 0.1).unwrap();
            }
        }
        assert_eq!(s.evaluations_used(), 12);
        assert!(s.mask().iter().all(|b| *b));
        assert!(s.is_saturated());
        assert!((0..3).all(|i| s.unobserved_in_row(i).is_empty()));
    }

    #[test]
    fn full_row_mean_matches_direct_average() {
        let row = [0.1, 0.7, 0.3, 0.9, 0.0, 0.55];
        let mut s = ScoringState::new(1, row.len());
        for j in [3, 0, 5, 1, 4, 2] {
            s.record(0, j, row[j]).unwrap();
        }
        let direct = row.iter().sum::<f64>() / row.len() as f64;
        assert_eq!(s.row_mean(0).unwrap(), direct);
    }

    proptest! {
        #[test]
        fn counters_track_mask(ops in proptest::collection::vec((0usize..4, 0usize..5, 0.0f64..=1.0), 0..40)) {
            let mut s = ScoringState::new(4, 5);
            for (i, j, v) in ops {
                let _ = s.record(i, j, v);
                prop_assert_eq!(s.evaluations_used(), s.count_mask());
                for r in 0..4 {
                    let row_true = (0..5).filter(|&c| s.is_observed(r, c)).count();
                    prop_assert_eq!(s.row_count(r), row_true);
                    let mut listed: Vec<_> = s.unobserved_in_row(r).to_vec();
                    listed.sort();
                    let expect: Vec<_> = (0..5).filter(|&c| !s.is_observed(r, c)).collect();
                    prop_assert_eq!(listed, expect);
                }
            }
        }
    }
}
