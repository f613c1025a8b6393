//! Agent running reward, Hamiltonian and its maximizer for a scalar state.

use serde::{Deserialize, Serialize};

use super::domain::Interval;
use super::primitives::ModelPrimitives;
use crate::error::{Error, Result};
use crate::numeric::golden_max;

const VALUE_GUARD: f64 = 1e100;
const WINDOW_GUARD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianQuery {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub gamma: f64,
}

impl HamiltonianQuery {
    pub fn new(t: f64, x: f64, y: f64, z: f64, gamma: f64) -> Result<Self> {
        let q = HamiltonianQuery { t, x, y, z, gamma };
        q.check()?;
        Ok(q)
    }

    /// Query at `t = x = 0` with `gamma = 0`.
    pub fn at(y: f64, z: f64) -> Self {
        HamiltonianQuery { t: 0.0, x: 0.0, y, z, gamma: 0.0 }
    }

    fn check(&self) -> Result<()> {
        if [self.t, self.x, self.y, self.z, self.gamma].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain(format!("non-finite Hamiltonian query {self:?}")))
        }
    }
}

/// A pair of drift and volatility actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effort {
    pub drift: f64,
    pub vol: f64,
}

fn reward_unchecked(m: &ModelPrimitives, q: &HamiltonianQuery, a: f64, b: f64) -> f64 {
    let s = (m.vol)(q.t, q.x, b);
    -(m.cost)(q.t, q.x, a, b) - (m.discount_rate)(q.t, q.x, a, b) * q.y
        + s * (m.drift)(q.t, q.x, a) * q.z
        + 0.5 * s * s * q.gamma
}

pub fn running_reward(m: &ModelPrimitives, q: &HamiltonianQuery, a: f64, b: f64) -> Result<f64> {
    m.effort.check(a, b)?;
    Ok(reward_unchecked(m, q, a, b))
}

pub fn hamiltonian(m: &ModelPrimitives, q: &HamiltonianQuery) -> Result<f64> {
    maximize(m, q).map(|(_, v)| v)
}

pub fn maximizer(m: &ModelPrimitives, q: &HamiltonianQuery) -> Result<Effort> {
    maximize(m, q).map(|(e, _)| e)
}

/// Argmax and value of the running reward over the action set.
pub fn maximize(m: &ModelPrimitives, q: &HamiltonianQuery) -> Result<(Effort, f64)> {
    q.check()?;
    match m.closed_form {
        Some(cf) if m.effort.vol_actions.is_point() => {
            let b = m.effort.vol_actions.lo;
            let a = m.effort.drift_actions.clamp(cf.volatility * q.z / cf.cost_scale);
            Ok((Effort { drift: a, vol: b }, reward_unchecked(m, q, a, b)))
        }
        _ => search(m, q),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn search(m: &ModelPrimitives, q: &HamiltonianQuery) -> Result<(Effort, f64)> {
    let n = m.effort.grid_resolution;
    let dom: Interval = m.effort.drift_actions;
    let vols = linspace(m.effort.vol_actions.lo, m.effort.vol_actions.hi, n);
    let mut lo = if dom.lo.is_finite() { dom.lo } else { dom.hi.min(0.0) - 1.0 };
    let mut hi = if dom.hi.is_finite() { dom.hi } else { dom.lo.max(0.0) + 1.0 };
    loop {
        let drifts = linspace(lo, hi, n);
        let mut best = (0usize, 0usize, f64::NEG_INFINITY);
        for (i, &a) in drifts.iter().enumerate() {
            for (j, &b) in vols.iter().enumerate() {
                let v = reward_unchecked(m, q, a, b);
                if v.is_nan() {
                    return Err(Error::Domain(format!("running reward is NaN at a={a}, b={b}")));
                }
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 > VALUE_GUARD {
            return Err(Error::Unbounded(format!("running reward exceeds {VALUE_GUARD:e} at z={}", q.z)));
        }
        let (i, j, v) = best;
        let width = hi - lo;
        let grow_hi = i + 1 == drifts.len() && hi < dom.hi;
        let grow_lo = i == 0 && lo > dom.lo && drifts.len() > 1;
        if grow_hi || grow_lo {
            if width > WINDOW_GUARD {
                return Err(Error::Unbounded(format!(
                    "no interior maximizer in a window of width {width:e} at z={}",
                    q.z
                )));
            }
            if grow_hi {
                hi = (hi + width).min(dom.hi);
            } else {
                lo = (lo - width).max(dom.lo);
            }
            continue;
        }
        let mut a = drifts[i];
        let mut b = vols[j];
        let mut value = v;
        if drifts.len() > 1 {
            let c_lo = drifts[i.saturating_sub(1)];
            let c_hi = drifts[(i + 1).min(drifts.len() - 1)];
            let (a_ref, v_ref) = golden_max(|s| reward_unchecked(m, q, s, b), c_lo, c_hi, 1e-12);
            if v_ref > value {
                a = a_ref;
                value = v_ref;
            }
        }
        if vols.len() > 1 {
            let c_lo = vols[j.saturating_sub(1)];
            let c_hi = vols[(j + 1).min(vols.len() - 1)];
            let (b_ref, v_ref) = golden_max(|s| reward_unchecked(m, q, a, s), c_lo, c_hi, 1e-12);
            if v_ref > value {
                b = b_ref;
                value = v_ref;
            }
        }
        return Ok((Effort { drift: a, vol: b }, value));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interval;
    use std::sync::Arc;

    fn euro() -> ModelPrimitives {
        ModelPrimitives::euro_quadratic(0.25, 0.0).unwrap()
    }

    #[test]
    fn running_reward_examples() {
        let m = euro();
        let q = HamiltonianQuery::at(0.0, 1.0);
        assert!((running_reward(&m, &q, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(running_reward(&m, &HamiltonianQuery::at(0.0, 0.0), 0.0, 0.0).unwrap(), 0.0);
        let s = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 2.0).unwrap(), 0.0).unwrap();
        let q = HamiltonianQuery::at(2.0, 1.0);
        assert!((running_reward(&s, &q, 1.0, 0.0).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn running_reward_rejects_foreign_action() {
        let s = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
        let q = HamiltonianQuery::at(0.0, 1.0);
        assert!(matches!(running_reward(&s, &q, 2.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn hamiltonian_examples() {
        let m = euro();
        assert!((hamiltonian(&m, &HamiltonianQuery::at(0.0, 2.0)).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(hamiltonian(&m, &HamiltonianQuery::at(0.0, 0.0)).unwrap(), 0.0);
        let boxed = euro().with_drift_actions(Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert!((hamiltonian(&boxed, &HamiltonianQuery::at(0.0, 2.0)).unwrap() - 1.5).abs() < 1e-12);
        let grid = boxed.without_closed_form();
        assert!((hamiltonian(&grid, &HamiltonianQuery::at(0.0, 2.0)).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn maximizer_examples() {
        let m = euro();
        assert!((maximizer(&m, &HamiltonianQuery::at(0.0, 1.3)).unwrap().drift - 1.3).abs() < 1e-14);
        assert_eq!(maximizer(&m, &HamiltonianQuery::at(0.0, 0.0)).unwrap().drift, 0.0);
        let grid = euro().with_drift_actions(Interval::new(0.0, 1.0).unwrap()).unwrap().without_closed_form();
        assert_eq!(maximizer(&grid, &HamiltonianQuery::at(0.0, 2.0)).unwrap().drift, 1.0);
    }

    #[test]
    fn tie_keeps_smallest_action() {
        let mut m = euro().with_drift_actions(Interval::new(-1.0, 1.0).unwrap()).unwrap().without_closed_form();
        m.cost = Arc::new(|_, _, _, _| 0.0);
        let e = maximizer(&m, &HamiltonianQuery::at(0.0, 0.0)).unwrap();
        assert_eq!(e.drift, -1.0);
    }

    #[test]
    fn linear_reward_on_real_line_is_unbounded() {
        let mut m = euro().without_closed_form();
        m.cost = Arc::new(|_, _, _, _| 0.0);
        assert!(matches!(hamiltonian(&m, &HamiltonianQuery::at(0.0, 1.0)), Err(Error::Unbounded(_))));
        assert!(matches!(maximizer(&m, &HamiltonianQuery::at(0.0, -1.0)), Err(Error::Unbounded(_))));
    }

    #[test]
    fn grid_search_on_real_line_finds_interior_max() {
        let m = euro().without_closed_form();
        for z in [-4.2, -0.3, 0.7, 3.9] {
            let (e, v) = maximize(&m, &HamiltonianQuery::at(0.0, z)).unwrap();
            assert!((e.drift - z).abs() < 1e-5, "z={z} a={}", e.drift);
            assert!((v - 0.5 * z * z).abs() < 1e-9);
        }
    }

    #[test]
    fn non_finite_query_rejected() {
        assert!(HamiltonianQuery::new(0.0, 0.0, f64::NAN, 0.0, 0.0).is_err());
        let m = euro();
        let q = HamiltonianQuery { t: 0.0, x: 0.0, y: 0.0, z: f64::INFINITY, gamma: 0.0 };
        assert!(hamiltonian(&m, &q).is_err());
    }
}
