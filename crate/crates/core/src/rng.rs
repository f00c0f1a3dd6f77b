//! Labeled random streams derived from a single master seed.
//!
//! Every consumer of randomness (selection, ensemble members, tie-breaks at a
//! checkpoint, individual trials) draws from its own stream, keyed by a text
//! label. Changing how much randomness one consumer uses never shifts another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

/// Deterministic stream for `(master_seed, stream_label)`.
pub fn derive_rng(master_seed: u64, stream_label: &str) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((stream_label.len() as u64).to_le_bytes());
    hasher.update(stream_label.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// A master seed plus a hierarchical label, e.g. `ucb-e/trial-3/select`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPath {
    pub seed: u64,
    pub label: String,
}

impl SeedPath {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        Self {
            seed,
            label: label.into(),
        }
    }

    pub fn root(seed: u64) -> Self {
        Self::new(seed, "")
    }

    pub fn child(&self, part: &str) -> Self {
        let label = if self.label.is_empty() {
            part.to_string()
        } else {
            format!("{}/{}", self.label, part)
        };
        Self::new(self.seed, label)
    }

    pub fn rng(&self) -> Stream {
        derive_rng(self.seed, &self.label)
    }
}

/// Index of the maximum value, ties broken uniformly at random.
///
/// Candidates are `(index, value)` pairs; NaN values never win. Returns `None`
/// when there are no non-NaN candidates. Infinite values compare equal to each
/// other and beat every finite value.
pub fn argmax_tie_break<R, I>(candidates: I, rng: &mut R) -> Option<usize>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut best = f64::NEG_INFINITY;
    let mut tied: Vec<usize> = Vec::new();
    for (index, value) in candidates {
        if value.is_nan() {
            continue;
        }
        if tied.is_empty() || value > best {
            best = value;
            tied.clear();
            tied.push(index);
        } else if value == best {
            tied.push(index);
        }
    }
    match tied.len() {
        0 => None,
        1 => Some(tied[0]),
        len => Some(tied[rng.random_range(0..len)]),
    }
}
