//! Budgeted identification of the best method among `m` candidates scored on
//! `n` examples.
//!
//! The crate evaluates method/example pairs one batch at a time against a
//! [`ScoreOracle`](oracle::ScoreOracle) and predicts the method with the highest
//! mean score after a fixed number of evaluations. Two adaptive strategies are
//! provided:
//!
//! - [`bandit::run_ucb_e`]: an upper-confidence-bound rule on per-method
//!   empirical means, drawing examples uniformly within the chosen row.
//! - [`ucbelrf::run_ucb_e_lrf`]: the same bound computed from a bootstrapped
//!   ensemble of low-rank factorizations, with examples ordered by ensemble
//!   disagreement.
//!
//! Passive baselines ([`bandit::run_row_mean_imputation`],
//! [`bandit::run_filled_subset`], [`ucbelrf::run_lrf_baseline`]), ground-truth
//! metrics ([`metrics`]) and a seeded multi-trial harness ([`harness`]) round
//! out the experiment tooling.

pub mod algorithm;
pub mod bandit;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod lrf;
pub mod metrics;
pub mod oracle;
pub mod rng;
mod runner;
pub mod state;
pub mod trajectory;
pub mod ucbelrf;

pub use algorithm::Algorithm;
pub use config::{AlgorithmConfig, AlsSettings, ConfigOverrides};
pub use error::{Error, Result};
pub use oracle::ScoreOracle;
pub use rng::{derive_rng, SeedPath};
pub use runner::RunOptions;
pub use state::{ExampleIndex, MethodIndex, ScoringState};
pub use trajectory::{Checkpoint, Prediction, Trajectory};
