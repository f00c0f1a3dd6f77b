//! Run records: the pairs an algorithm evaluated, its batch boundaries and the
//! predictions taken at budget checkpoints.

use serde::{Deserialize, Serialize};

use crate::state::{ExampleIndex, MethodIndex};

/// Predicted best method plus the per-method estimates it was taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub best_index: MethodIndex,
    /// `None` for methods the estimator has nothing to say about (no
    /// observations under a row-mean estimator).
    pub estimated_means: Vec<Option<f64>>,
    /// Number of methods tied for the maximum; above 1 the winner was drawn.
    pub tied: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Prediction {
    /// Methods ordered by estimate, best first; methods without an estimate go
    /// last. Equal estimates keep index order, except that the predicted best
    /// always leads its tie group.
    pub fn ranking(&self) -> Vec<MethodIndex> {
        let mut order: Vec<MethodIndex> = (0..self.estimated_means.len()).collect();
        let key = |i: MethodIndex| self.estimated_means[i].unwrap_or(f64::NEG_INFINITY);
        order.sort_by(|&a, &b| {
            key(b)
                .total_cmp(&key(a))
                .then_with(|| (b == self.best_index).cmp(&(a == self.best_index)))
                .then(a.cmp(&b))
        });
        order
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub evaluations_used: usize,
    pub prediction: Prediction,
    /// Seconds since the run started; only meaningful on one machine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

/// One selection round: `len` consecutive entries of [`Trajectory::pairs`]
/// starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub start: usize,
    pub len: usize,
    /// `true` for uniformly drawn warm-up rounds.
    pub warmup: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub algorithm: String,
    pub budget: usize,
    pub pairs: Vec<(MethodIndex, ExampleIndex)>,
    pub batches: Vec<Batch>,
    /// Ensemble fits used for selection (one per post-warm-up batch).
    pub selection_fits: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub prediction: Prediction,
}

impl Trajectory {
    /// The same run with wall-clock times removed, for equality checks.
    pub fn without_timing(&self) -> Self {
        let mut t = self.clone();
        for c in &mut t.checkpoints {
            c.wall_time_secs = None;
        }
        t
    }
}
