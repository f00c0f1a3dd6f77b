use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inner alternating-least-squares solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlsSettings {
    pub max_iterations: usize,
    /// Stop once the relative decrease of the objective falls below this.
    pub tolerance: f64,
    /// Ridge strength applied to both factors.
    pub ridge: f64,
}

impl Default for AlsSettings {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-6,
            ridge: 1e-6,
        }
    }
}

pub const DEFAULT_EXPLORATION: f64 = 1.0;
pub const DEFAULT_RANK: usize = 1;
pub const DEFAULT_ENSEMBLE: usize = 64;
pub const DEFAULT_WARMUP_FRACTION: f64 = 0.05;
pub const DEFAULT_UNCERTAINTY_SCALE: f64 = 5.0;
pub const DEFAULT_BATCH: usize = 32;
pub const DEFAULT_DROPOUT: f64 = 0.1;

/// Hyperparameters for every algorithm; each algorithm reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    /// Number of pair evaluations `T`.
    pub budget_total: usize,
    /// UCB-E exploration parameter `a`.
    pub exploration_a: f64,
    pub rank: usize,
    pub ensemble_size: usize,
    /// Uniform warm-up evaluations `T0` before factorization-guided selection.
    pub warmup_budget: usize,
    /// Weight `eta` on the ensemble uncertainty in the selection bound.
    pub uncertainty_scale: f64,
    pub batch_size: usize,
    /// Fraction of observed entries hidden from each ensemble member.
    pub dropout_fraction: f64,
    pub als: AlsSettings,
}

/// `ceil(fraction * cells)`, at least 1.
pub fn warmup_from_fraction(fraction: f64, cells: usize) -> usize {
    ((fraction * cells as f64).ceil() as usize).max(1)
}

/// `floor(fraction * cells)`, at least 1.
pub fn budget_from_fraction(fraction: f64, cells: usize) -> usize {
    ((fraction * cells as f64).floor() as usize).clamp(1, cells.max(1))
}

impl AlgorithmConfig {
    /// Default hyperparameters for an `m x n` problem with budget `T`.
    pub fn with_defaults(methods: usize, examples: usize, budget_total: usize) -> Self {
        Self {
            budget_total,
            exploration_a: DEFAULT_EXPLORATION,
            rank: DEFAULT_RANK,
            ensemble_size: DEFAULT_ENSEMBLE,
            warmup_budget: warmup_from_fraction(DEFAULT_WARMUP_FRACTION, methods * examples),
            uncertainty_scale: DEFAULT_UNCERTAINTY_SCALE,
            batch_size: DEFAULT_BATCH.min(budget_total.max(1)),
            dropout_fraction: DEFAULT_DROPOUT,
            als: AlsSettings::default(),
        }
    }

    pub fn with_budget(&self, budget_total: usize) -> Self {
        Self {
            budget_total,
            ..self.clone()
        }
    }

    /// Checks the settings shared by all algorithms.
    pub fn validate(&self, methods: usize, examples: usize) -> Result<()> {
        let cells = methods * examples;
        let fail = |msg: String| Err(Error::Config(msg));
        if cells == 0 {
            return fail("score matrix is empty".into());
        }
        if self.budget_total == 0 || self.budget_total > cells {
            return fail(format!(
                "budget {} must lie in 1..={cells}",
                self.budget_total
            ));
        }
        if self.batch_size == 0 || self.batch_size > self.budget_total {
            return fail(format!(
                "batch size {} must lie in 1..={}",
                self.batch_size, self.budget_total
            ));
        }
        if !(self.exploration_a >= 0.0) || !self.exploration_a.is_finite() {
            return fail(format!("exploration a = {} must be >= 0", self.exploration_a));
        }
        if self.rank == 0 || self.ensemble_size == 0 {
            return fail("rank and ensemble size must be positive".into());
        }
        if !(self.uncertainty_scale >= 0.0) || !self.uncertainty_scale.is_finite() {
            return fail(format!("eta = {} must be >= 0", self.uncertainty_scale));
        }
        if !(0.0..1.0).contains(&self.dropout_fraction) {
            return fail(format!(
                "dropout fraction {} must lie in [0, 1)",
                self.dropout_fraction
            ));
        }
        if self.als.max_iterations == 0 || !(self.als.ridge >= 0.0) || !(self.als.tolerance >= 0.0) {
            return fail("ALS settings need max_iterations > 0, ridge >= 0, tolerance >= 0".into());
        }
        Ok(())
    }

    /// Additional checks for algorithms with a warm-up phase.
    pub fn validate_warmup(&self, methods: usize, examples: usize) -> Result<()> {
        self.validate(methods, examples)?;
        if self.warmup_budget == 0 || self.warmup_budget >= self.budget_total {
            return Err(Error::Config(format!(
                "warm-up budget {} must be positive and below the total budget {}",
                self.warmup_budget, self.budget_total
            )));
        }
        Ok(())
    }
}

/// Optional replacements for the defaults of [`AlgorithmConfig::with_defaults`].
/// The warm-up is given as a fraction of `m * n`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigOverrides {
    pub exploration_a: Option<f64>,
    pub rank: Option<usize>,
    pub ensemble_size: Option<usize>,
    pub warmup_fraction: Option<f64>,
    pub uncertainty_scale: Option<f64>,
    pub batch_size: Option<usize>,
    pub dropout_fraction: Option<f64>,
    pub als: Option<AlsSettings>,
}

impl ConfigOverrides {
    pub fn apply(&self, methods: usize, examples: usize, budget_total: usize) -> Result<AlgorithmConfig> {
        let mut config = AlgorithmConfig::with_defaults(methods, examples, budget_total);
        if let Some(a) = self.exploration_a {
            config.exploration_a = a;
        }
        if let Some(r) = self.rank {
            config.rank = r;
        }
        if let Some(c) = self.ensemble_size {
            config.ensemble_size = c;
        }
        if let Some(f) = self.warmup_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("warm-up fraction {f} must lie in (0, 1)")));
            }
            config.warmup_budget = warmup_from_fraction(f, methods * examples);
        }
        if let Some(eta) = self.uncertainty_scale {
            config.uncertainty_scale = eta;
        }
        if let Some(b) = self.batch_size {
            config.batch_size = b;
        }
        if let Some(d) = self.dropout_fraction {
            config.dropout_fraction = d;
        }
        if let Some(als) = self.als {
            config.als = als;
        }
        Ok(config)
    }
}
