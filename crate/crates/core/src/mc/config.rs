use serde::{Deserialize, Serialize};

use crate::contract::DEFAULT_MAX_DT;
use crate::error::{Error, Result};

fn default_truncation_bound() -> f64 {
    1e-3
}

/// Monte Carlo settings shared by every simulation entry point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub dt: f64,
    /// Hard cap on random horizons.
    pub t_cap: f64,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
    /// Initial output `X_0`.
    #[serde(default)]
    pub x0: f64,
    /// Largest admissible fraction of paths still running at `t_cap`.
    #[serde(default = "default_truncation_bound")]
    pub max_truncated_fraction: f64,
    /// Keep every sampled path in the batch.
    #[serde(default)]
    pub record_paths: bool,
}

impl SimulationConfig {
    pub fn new(n_paths: usize, dt: f64, t_cap: f64, seed: u64) -> Self {
        SimulationConfig {
            n_paths,
            dt,
            t_cap,
            seed,
            antithetic: false,
            x0: 0.0,
            max_truncated_fraction: default_truncation_bound(),
            record_paths: false,
        }
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn with_paths_recorded(mut self) -> Self {
        self.record_paths = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Domain("n_paths must be at least 1".into()));
        }
        if !(self.dt > 0.0) || self.dt > DEFAULT_MAX_DT {
            return Err(Error::Domain(format!("dt must lie in (0, {DEFAULT_MAX_DT}], got {}", self.dt)));
        }
        if !(self.t_cap > 0.0) || !self.t_cap.is_finite() {
            return Err(Error::Domain(format!("t_cap must be positive and finite, got {}", self.t_cap)));
        }
        if !(0.0..=1.0).contains(&self.max_truncated_fraction) {
            return Err(Error::Domain(format!(
                "max_truncated_fraction must lie in [0, 1], got {}",
                self.max_truncated_fraction
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::Domain("x0 must be finite".into()));
        }
        Ok(())
    }

    /// Number of Euler steps that reach `t_cap`.
    pub fn steps(&self) -> usize {
        (self.t_cap / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}
