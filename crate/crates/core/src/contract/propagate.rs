use serde::{Deserialize, Serialize};

use super::{EffortPolicy, RevealingContract, Termination};
use crate::error::{Error, Result};
use crate::model::{maximize, Effort, ModelPrimitives};

pub const DEFAULT_MAX_DT: f64 = 1e-2;

/// A propagated path, truncated at the termination index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedPath {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub discount: Vec<f64>,
    /// Index of the sample at which the termination rule fired.
    pub stopped_at: Option<usize>,
    /// Termination time, interpolated for hitting rules.
    pub stop_time: Option<f64>,
    /// Promised value delivered at termination; equals the level for hits.
    pub terminal_y: f64,
    pub hit: bool,
}

impl DiscretizedPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One Euler step of the promised value under the maximizing effort.
/// Returns `(Y_next, maximizing effort, agent discount rate at it)`.
pub(crate) fn y_step(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    t: f64,
    x: f64,
    y: f64,
    dx: f64,
    dt: f64,
) -> Result<(f64, Effort, f64)> {
    let q = contract.query(t, x, y);
    let (effort, h) = maximize(model, &q)?;
    let pay = model.agent_utility.value((contract.payment_rate)(t, x, y));
    let next = euler_increment(y, q.z, q.gamma, h + pay, dx, dt);
    let k = (model.discount_rate)(t, x, effort.drift, effort.vol);
    Ok((next, effort, k))
}

/// `Y + Z dX + Gamma dX^2 / 2 - drift dt`.
pub(crate) fn euler_increment(y: f64, z: f64, gamma: f64, drift: f64, dx: f64, dt: f64) -> f64 {
    y + z * dx + 0.5 * gamma * dx * dx - drift * dt
}

/// Interpolated crossing time in `[t0, t0 + dt]` of `level` between `y0 > level >= y1`.
pub(crate) fn crossing(t0: f64, dt: f64, y0: f64, y1: f64, level: f64) -> f64 {
    let w = if y0 > y1 { (y0 - level) / (y0 - y1) } else { 1.0 };
    t0 + dt * w.clamp(0.0, 1.0)
}

fn fires(termination: &Termination, t: f64, y: f64, dt: f64) -> (bool, bool) {
    let due = termination.horizon().is_some_and(|h| t >= h - 1e-9 * dt.max(1e-12));
    let hit = termination.level().is_some_and(|l| y <= l);
    (due || hit, hit)
}

pub fn propagate_y(
    contract: &RevealingContract,
    times: &[f64],
    x: &[f64],
    model: &ModelPrimitives,
) -> Result<DiscretizedPath> {
    propagate_y_with(contract, times, x, model, DEFAULT_MAX_DT)
}

/// Runs the promised-value recursion along a given output path.
pub fn propagate_y_with(
    contract: &RevealingContract,
    times: &[f64],
    x: &[f64],
    model: &ModelPrimitives,
    max_dt: f64,
) -> Result<DiscretizedPath> {
    if times.is_empty() || times.len() != x.len() {
        return Err(Error::Grid(format!("{} times for {} states", times.len(), x.len())));
    }
    let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    if times.len() > 1 {
        if !(dt > 0.0) || dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::Grid(format!("step {dt} not in (0, {max_dt}]")));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-8 * dt {
                return Err(Error::Grid(format!("non-uniform grid near t = {}", w[0])));
            }
        }
    }
    let mut path = DiscretizedPath {
        times: Vec::with_capacity(times.len()),
        x: Vec::with_capacity(times.len()),
        y: Vec::with_capacity(times.len()),
        discount: Vec::with_capacity(times.len()),
        stopped_at: None,
        stop_time: None,
        terminal_y: contract.y0,
        hit: false,
    };
    let mut y = contract.y0;
    let mut log_k: f64 = 0.0;
    for i in 0..times.len() {
        path.times.push(times[i]);
        path.x.push(x[i]);
        path.y.push(y);
        path.discount.push((-log_k).exp());
        let (stop, hit) = fires(&contract.termination, times[i], y, dt);
        if stop {
            path.stopped_at = Some(i);
            path.hit = hit;
            if hit {
                let level = contract.termination.level().unwrap_or(y);
                path.stop_time =
                    Some(if i == 0 { times[0] } else { crossing(times[i - 1], dt, path.y[i - 1], y, level) });
                path.terminal_y = level;
            } else {
                path.stop_time = Some(times[i]);
                path.terminal_y = y;
            }
            return Ok(path);
        }
        if i + 1 == times.len() {
            path.terminal_y = y;
            return Ok(path);
        }
        let (next, _, k) = y_step(model, contract, times[i], x[i], y, x[i + 1] - x[i], dt)?;
        if !next.is_finite() {
            return Err(Error::Numeric { step: i, detail: format!("promised value became {next}") });
        }
        y = next;
        log_k += k * dt;
    }
    unreachable!("loop returns on its last sample")
}

pub fn terminal_payment(y_terminal: f64, model: &ModelPrimitives) -> Result<f64> {
    model.agent_utility.inverse(y_terminal)
}

/// First time the promised value is at or below `level`, linearly
/// interpolated between samples.
pub fn hitting_time(path: &DiscretizedPath, level: f64) -> Option<f64> {
    let i = path.y.iter().position(|&y| y <= level)?;
    if i == 0 {
        return Some(path.times[0]);
    }
    let dt = path.times[i] - path.times[i - 1];
    Some(crossing(path.times[i - 1], dt, path.y[i - 1], path.y[i], level))
}

/// `K_i Y_i + sum_{j<i} K_j (U(pi_j) - c_j) dt - Y_0 - sum_{j<i} K_j dM_j` along
/// a propagated path, where `dM` is the martingale part of the output
/// increment under `effort`. Vanishes to `O(dt)` at the maximizer.
pub fn identity_residuals(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    path: &DiscretizedPath,
    effort: &EffortPolicy,
) -> Result<Vec<f64>> {
    let n = path.len();
    let mut out = Vec::with_capacity(n);
    let mut disc = 1.0;
    let mut running = 0.0;
    let mut noise = 0.0;
    for i in 0..n {
        let (t, x, y) = (path.times[i], path.x[i], path.y[i]);
        out.push(disc * y + running - contract.y0 - noise);
        if i + 1 == n {
            break;
        }
        let dt = path.times[i + 1] - t;
        let dx = path.x[i + 1] - x;
        let e = effort.resolve(model, contract, t, x, y)?;
        let q = contract.query(t, x, y);
        let s = (model.vol)(t, x, e.vol);
        let lam = (model.drift)(t, x, e.drift);
        let pay = model.agent_utility.value((contract.payment_rate)(t, x, y));
        running += disc * (pay - (model.cost)(t, x, e.drift, e.vol)) * dt;
        noise += disc * (q.z * (dx - s * lam * dt) + 0.5 * q.gamma * (dx * dx - s * s * dt));
        disc *= (-(model.discount_rate)(t, x, e.drift, e.vol) * dt).exp();
    }
    Ok(out)
}
