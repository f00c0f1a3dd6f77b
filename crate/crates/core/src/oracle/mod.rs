//! Sources of per-pair scores: an in-memory matrix, a score file, or a remote
//! scoring endpoint.

mod io;
mod remote;
mod synth;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::GroundTruth;
use crate::state::{ExampleIndex, MethodIndex};

pub use io::{load_matrix, save_matrix, MatrixFormat};
pub use remote::{RemoteClient, RemoteConfig, ScoreRequest, ScoreResponse};
pub use synth::{synth_planted, synth_rank1, synth_rank1_factors, Noise, Profile, SynthSpec, PlantedInstance};

/// Dense `methods x examples` score matrix with display names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub methods: Vec<String>,
    pub examples: Vec<String>,
    /// Row-major scores, one row per method.
    pub scores: Vec<f64>,
}

impl ScoreMatrix {
    /// Builds a matrix with generated names, validating the score range.
    pub fn from_scores(rows: usize, cols: usize, scores: Vec<f64>) -> Result<Self> {
        Self::with_names(
            (0..rows).map(|i| format!("m{i}")).collect(),
            (0..cols).map(|j| format!("x{j}")).collect(),
            scores,
        )
    }

    pub fn with_names(methods: Vec<String>, examples: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        let (rows, cols) = (methods.len(), examples.len());
        if rows == 0 || cols == 0 || scores.len() != rows * cols {
            return Err(Error::Input(format!(
                "expected {rows}x{cols} scores, got {}",
                scores.len()
            )));
        }
        if let Some(k) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::ScoreRange {
                method: k / cols,
                example: k % cols,
                value: scores[k],
            });
        }
        Ok(Self {
            methods,
            examples,
            scores,
        })
    }

    pub fn rows(&self) -> usize {
        self.methods.len()
    }

    pub fn cols(&self) -> usize {
        self.examples.len()
    }

    pub fn get(&self, i: MethodIndex, j: ExampleIndex) -> f64 {
        self.scores[i * self.cols() + j]
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        GroundTruth::from_scores(self.rows(), self.cols(), self.scores.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Matrix,
    File,
    Remote,
}

#[derive(Debug, Clone)]
enum Backend {
    Dense(Arc<ScoreMatrix>),
    Remote(Arc<RemoteClient>),
}

/// A fixed underlying score matrix queried one pair at a time.
#[derive(Debug, Clone)]
pub struct ScoreOracle {
    kind: BackendKind,
    methods: Vec<String>,
    examples: Vec<String>,
    backend: Backend,
}

impl ScoreOracle {
    pub fn from_matrix(matrix: ScoreMatrix) -> Self {
        Self::dense(BackendKind::Matrix, matrix)
    }

    pub(crate) fn dense(kind: BackendKind, matrix: ScoreMatrix) -> Self {
        Self {
            kind,
            methods: matrix.methods.clone(),
            examples: matrix.examples.clone(),
            backend: Backend::Dense(Arc::new(matrix)),
        }
    }

    pub fn remote(client: RemoteClient) -> Self {
        Self {
            kind: BackendKind::Remote,
            methods: client.methods().to_vec(),
            examples: client.examples().to_vec(),
            backend: Backend::Remote(Arc::new(client)),
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn methods(&self) -> usize {
        self.methods.len()
    }

    pub fn examples(&self) -> usize {
        self.examples.len()
    }

    pub fn method_names(&self) -> &[String] {
        &self.methods
    }

    pub fn example_ids(&self) -> &[String] {
        &self.examples
    }

    /// The backing matrix, when the whole matrix is held locally.
    pub fn matrix(&self) -> Option<&ScoreMatrix> {
        match &self.backend {
            Backend::Dense(m) => Some(m),
            Backend::Remote(_) => None,
        }
    }

    pub fn query(&self, i: MethodIndex, j: ExampleIndex) -> Result<f64> {
        if i >= self.methods() || j >= self.examples() {
            return Err(Error::IndexOutOfRange {
                method: i,
                example: j,
                rows: self.methods(),
                cols: self.examples(),
            });
        }
        match &self.backend {
            Backend::Dense(m) => Ok(m.get(i, j)),
            Backend::Remote(client) => client.score(i, j),
        }
    }

    /// Scores for a batch of pairs, in order. Remote queries run concurrently.
    pub fn query_batch(&self, pairs: &[(MethodIndex, ExampleIndex)]) -> Result<Vec<f64>> {
        match &self.backend {
            Backend::Dense(_) => pairs.iter().map(|&(i, j)| self.query(i, j)).collect(),
            Backend::Remote(client) => {
                for &(i, j) in pairs {
                    if i >= self.methods() || j >= self.examples() {
                        return Err(Error::IndexOutOfRange {
                            method: i,
                            example: j,
                            rows: self.methods(),
                            cols: self.examples(),
                        });
                    }
                }
                client.score_batch(pairs)
            }
        }
    }

    /// Queries every pair once and returns the full matrix.
    pub fn materialize(&self) -> Result<ScoreMatrix> {
        if let Some(m) = self.matrix() {
            return Ok(m.clone());
        }
        let pairs: Vec<_> = (0..self.methods())
            .flat_map(|i| (0..self.examples()).map(move |j| (i, j)))
            .collect();
        let scores = self.query_batch(&pairs)?;
        ScoreMatrix::with_names(self.methods.clone(), self.examples.clone(), scores)
    }
}
