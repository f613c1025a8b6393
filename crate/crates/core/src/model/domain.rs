use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed real interval `[lo, hi]`. Either bound may be infinite for
/// models that register a closed-form maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn real_line() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

/// Action sets `A` (drift) and `B` (volatility) available to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortDomain {
    pub drift_actions: Interval,
    pub vol_actions: Interval,
    /// Points per axis used by the grid search when no closed form exists.
    pub grid_resolution: usize,
}

impl EffortDomain {
    pub fn new(drift_actions: Interval, vol_actions: Interval, grid_resolution: usize) -> Result<Self> {
        if grid_resolution < 2 {
            return Err(Error::Domain(format!("grid_resolution must be at least 2, got {grid_resolution}")));
        }
        if !vol_actions.is_bounded() {
            return Err(Error::Domain("volatility action set must be bounded".into()));
        }
        Ok(EffortDomain { drift_actions, vol_actions, grid_resolution })
    }

    pub fn check(&self, a: f64, b: f64) -> Result<()> {
        if !self.drift_actions.contains(a) {
            return Err(Error::Domain(format!(
                "drift action {a} outside [{}, {}]",
                self.drift_actions.lo, self.drift_actions.hi
            )));
        }
        if !self.vol_actions.contains(b) {
            return Err(Error::Domain(format!(
                "vol action {b} outside [{}, {}]",
                self.vol_actions.lo, self.vol_actions.hi
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_reversed_interval() {
        assert!(Interval::new(1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_coarse_grid() {
        let a = Interval::new(0.0, 1.0).unwrap();
        assert!(EffortDomain::new(a, Interval::point(0.0), 1).is_err());
    }

    #[test]
    fn check_flags_out_of_domain_action() {
        let d = EffortDomain::new(Interval::new(0.0, 1.0).unwrap(), Interval::point(0.0), 8).unwrap();
        assert!(d.check(0.5, 0.0).is_ok());
        assert!(matches!(d.check(1.5, 0.0), Err(Error::Domain(_))));
    }
}
