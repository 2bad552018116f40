//! Common result type for all pricers.

use crate::error::{Error, Result};
use crate::simulation::Scheme;

/// Price estimate with its Monte Carlo standard error and optional per-date
/// components (call strips, per-date call prices).
#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub value: f64,
    /// Zero for deterministic (Fourier) prices.
    pub std_error: f64,
    /// Zero for deterministic prices.
    pub n_paths: usize,
    pub scheme: Option<Scheme>,
    pub per_date: Vec<f64>,
}

impl PricingResult {
    pub fn deterministic(value: f64, per_date: Vec<f64>) -> Self {
        PricingResult { value, std_error: 0.0, n_paths: 0, scheme: None, per_date }
    }

    /// Whether `other` lies within `k` standard errors of this estimate.
    pub fn within(&self, other: f64, k: f64) -> bool {
        (self.value - other).abs() <= k * self.std_error
    }
}

/// Path count and random stream assignment of a Monte Carlo run. Path `i`
/// draws from stream `first_stream + i` of `seed`, so results do not depend
/// on the number of worker threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub first_stream: u64,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        McConfig { n_paths, seed, first_stream: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::param("n_paths", format!("need at least 2 paths, got {}", self.n_paths)));
        }
        Ok(())
    }
}
