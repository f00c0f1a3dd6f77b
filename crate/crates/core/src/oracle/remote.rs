//! HTTP scoring endpoint client.
//!
//! Each unseen pair is sent as a JSON POST `{"run_id", "method", "example"}`
//! and answered with `{"score": <real>}`. Transport failures are retried with
//! exponential backoff; answers are cached per pair for the lifetime of the
//! client so a pair is never paid for twice.

use std::collections::HashMap;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{ExampleIndex, MethodIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub url: String,
    pub run_id: String,
    pub timeout_secs: f64,
    /// Retries after the first failed attempt.
    pub retries: usize,
    pub backoff_initial_ms: u64,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>, run_id: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            run_id: run_id.into(),
            timeout_secs: 30.0,
            retries: 3,
            backoff_initial_ms: 200,
            max_in_flight: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub run_id: String,
    pub method: String,
    pub example: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub score: f64,
}

pub struct RemoteClient {
    config: RemoteConfig,
    methods: Vec<String>,
    examples: Vec<String>,
    agent: ureq::Agent,
    cache: Mutex<HashMap<(MethodIndex, ExampleIndex), f64>>,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient")
            .field("config", &self.config)
            .field("methods", &self.methods.len())
            .field("examples", &self.examples.len())
            .finish()
    }
}

impl RemoteClient {
    pub fn new(config: RemoteConfig, methods: Vec<String>, examples: Vec<String>) -> Result<Self> {
        if methods.is_empty() || examples.is_empty() {
            return Err(Error::Config("remote oracle needs at least one method and example".into()));
        }
        if !(config.timeout_secs > 0.0) || config.max_in_flight == 0 {
            return Err(Error::Config("remote timeout and max_in_flight must be positive".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(true)
            .build()
            .into();
        Ok(Self {
            config,
            methods,
            examples,
            agent,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Client with generated names `m{i}` / `x{j}` for an `m x n` problem.
    pub fn with_dims(config: RemoteConfig, methods: usize, examples: usize) -> Result<Self> {
        Self::new(
            config,
            (0..methods).map(|i| format!("m{i}")).collect(),
            (0..examples).map(|j| format!("x{j}")).collect(),
        )
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn examples(&self) -> &[String] {
        &self.examples
    }

    pub fn cached_pairs(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn score(&self, i: MethodIndex, j: ExampleIndex) -> Result<f64> {
        if let Some(&s) = self.cache.lock().expect("cache lock").get(&(i, j)) {
            return Ok(s);
        }
        let score = self.fetch(i, j)?;
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(*cache.entry((i, j)).or_insert(score))
    }

    pub fn score_batch(&self, pairs: &[(MethodIndex, ExampleIndex)]) -> Result<Vec<f64>> {
        let workers = self.config.max_in_flight.min(pairs.len()).max(1);
        if workers == 1 {
            return pairs.iter().map(|&(i, j)| self.score(i, j)).collect();
        }
        let chunk = pairs.len().div_ceil(workers);
        let parts: Vec<Result<Vec<f64>>> = thread::scope(|scope| {
            let handles: Vec<_> = pairs
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(|&(i, j)| self.score(i, j)).collect()))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scoring worker panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(pairs.len());
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    }

    fn fetch(&self, i: MethodIndex, j: ExampleIndex) -> Result<f64> {
        let request = ScoreRequest {
            run_id: self.config.run_id.clone(),
            method: self.methods[i].clone(),
            example: self.examples[j].clone(),
        };
        let attempts = self.config.retries + 1;
        let mut delay = Duration::from_millis(self.config.backoff_initial_ms);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match self.post(&request) {
                Ok(resp) => {
                    if !(0.0..=1.0).contains(&resp.score) {
                        return Err(Error::ScoreRange {
                            method: i,
                            example: j,
                            value: resp.score,
                        });
                    }
                    return Ok(resp.score);
                }
                Err(e) => {
                    log::warn!("scoring ({i}, {j}) attempt {} failed: {e}", attempt + 1);
                    last = e.to_string();
                }
            }
        }
        Err(Error::Remote {
            method: i,
            example: j,
            attempts,
            message: last,
        })
    }

    fn post(&self, request: &ScoreRequest) -> std::result::Result<ScoreResponse, ureq::Error> {
        self.agent
            .post(&self.config.url)
            .send_json(request)?
            .body_mut()
            .read_json::<ScoreResponse>()
    }
}
