use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandit::{run_filled_subset, run_row_mean_imputation, run_ucb_e};
use crate::config::AlgorithmConfig;
use crate::error::{Error, Result};
use crate::oracle::ScoreOracle;
use crate::rng::SeedPath;
use crate::runner::RunOptions;
use crate::trajectory::Trajectory;
use crate::ucbelrf::{run_lrf_baseline, run_ucb_e_lrf, run_ucb_e_lrf_score_only};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ucb-e")]
    UcbE,
    #[serde(rename = "ucb-e-lrf")]
    UcbELrf,
    #[serde(rename = "ucb-e-lrf-score-only")]
    UcbELrfScoreOnly,
    #[serde(rename = "lrf")]
    Lrf,
    #[serde(rename = "row-mean")]
    RowMean,
    #[serde(rename = "filled-subset")]
    FilledSubset,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::UcbE,
        Algorithm::UcbELrf,
        Algorithm::UcbELrfScoreOnly,
        Algorithm::Lrf,
        Algorithm::RowMean,
        Algorithm::FilledSubset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::UcbE => "ucb-e",
            Algorithm::UcbELrf => "ucb-e-lrf",
            Algorithm::UcbELrfScoreOnly => "ucb-e-lrf-score-only",
            Algorithm::Lrf => "lrf",
            Algorithm::RowMean => "row-mean",
            Algorithm::FilledSubset => "filled-subset",
        }
    }

    /// Whether the algorithm has a uniform warm-up phase.
    pub fn uses_warmup(self) -> bool {
        matches!(
            self,
            Algorithm::UcbELrf | Algorithm::UcbELrfScoreOnly | Algorithm::Lrf
        )
    }

    pub fn run(
        self,
        oracle: &ScoreOracle,
        config: &AlgorithmConfig,
        seed: &SeedPath,
        options: &RunOptions,
    ) -> Result<Trajectory> {
        let run = match self {
            Algorithm::UcbE => run_ucb_e,
            Algorithm::UcbELrf => run_ucb_e_lrf,
            Algorithm::UcbELrfScoreOnly => run_ucb_e_lrf_score_only,
            Algorithm::Lrf => run_lrf_baseline,
            Algorithm::RowMean => run_row_mean_imputation,
            Algorithm::FilledSubset => run_filled_subset,
        };
        run(oracle, config, seed, options)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::Input(format!("unknown algorithm {s:?}; expected one of {}", names.join(", ")))
            })
    }
}
