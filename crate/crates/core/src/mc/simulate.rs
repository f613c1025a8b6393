use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimulationConfig;
use super::rng::NoiseStream;
use super::stats::Estimate;
use crate::contract::{crossing, euler_increment, ContractKind, DiscretizedPath, EffortPolicy, RevealingContract};
use crate::error::{Error, Result};
use crate::model::{maximize, Effort, ModelPrimitives};
use crate::report::format_float;

/// Replacement of the contract's own termination rule, used by the
/// stopping audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum StopRule {
    Contract,
    /// Quit at `min(hit, c)`.
    Cap(f64),
    /// Stay absorbed at the level for `c` more time units after the hit.
    Delay(f64),
}

/// Pay-offs of one simulated path.
#[derive(Debug, Clone)]
pub(crate) struct PathOutcome {
    pub agent: f64,
    pub principal: f64,
    pub stop_time: f64,
    pub truncated: bool,
    pub path: Option<DiscretizedPath>,
}

/// `(t, K_t Y_t + sum K (U(pi) - c) dt)` at every sample before termination.
pub(crate) type Observer<'a> = &'a mut dyn FnMut(f64, f64);

pub(crate) struct Engine<'a> {
    pub model: &'a ModelPrimitives,
    pub contract: &'a RevealingContract,
    pub effort: &'a EffortPolicy,
    pub cfg: &'a SimulationConfig,
    pub rule: StopRule,
}

impl Engine<'_> {
    fn resting_effort(&self) -> Effort {
        Effort { drift: self.model.effort.drift_actions.clamp(0.0), vol: self.model.effort.vol_actions.clamp(0.0) }
    }

    pub fn run(&self, index: usize, observer: Option<Observer<'_>>) -> Result<PathOutcome> {
        let (m, c, cfg) = (self.model, self.contract, self.cfg);
        let dt = cfg.dt;
        let sqrt_dt = dt.sqrt();
        let steps = cfg.steps();
        let mut noise = NoiseStream::new(cfg.seed, index, cfg.antithetic);
        let mut observer = observer;
        let mut rec = cfg.record_paths.then(|| DiscretizedPath {
            times: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            discount: Vec::new(),
            stopped_at: None,
            stop_time: None,
            terminal_y: c.y0,
            hit: false,
        });
        let level = c.termination.level();
        let horizon = c.termination.horizon();
        let retirement = m.retirement_level.or(level);
        let (mut x, mut y) = (cfg.x0, c.y0);
        let (mut log_k, mut log_kp) = (0.0f64, 0.0f64);
        let (mut rate_k, mut rate_kp) = (0.0, 0.0);
        let (mut run_agent, mut run_principal, mut output) = (0.0, 0.0, 0.0);
        let mut prev_y = y;
        let mut absorbed_at: Option<f64> = None;
        for i in 0..=steps {
            let t = i as f64 * dt;
            let k = (-log_k).exp();
            let kp = (-log_kp).exp();
            if let Some(r) = rec.as_mut() {
                r.times.push(t);
                r.x.push(x);
                r.y.push(y);
                r.discount.push(k);
            }
            if let Some(obs) = observer.as_mut() {
                obs(t, k * y + run_agent);
            }
            let due = horizon.is_some_and(|h| t >= h - 1e-9 * dt);
            let hit = absorbed_at.is_none() && level.is_some_and(|l| y <= l);
            if hit && matches!(self.rule, StopRule::Delay(_)) {
                let l = level.unwrap_or(y);
                absorbed_at = Some(if i == 0 { t } else { crossing(t - dt, dt, prev_y, y, l) });
                y = l;
            }
            let quit = match self.rule {
                StopRule::Contract => hit,
                StopRule::Cap(cap) => hit || t >= cap - 1e-9 * dt,
                StopRule::Delay(extra) => absorbed_at.is_some_and(|s| t >= s + extra - 1e-9 * dt),
            };
            let truncated = i == steps && !(due || quit);
            if due || quit || truncated {
                let hit_now = hit && !matches!(self.rule, StopRule::Delay(_));
                let stop_time = if hit_now && i > 0 { crossing(t - dt, dt, prev_y, y, level.unwrap_or(y)) } else { t };
                let back = t - stop_time;
                let k_stop = k * (rate_k * back).exp();
                let kp_stop = kp * (rate_kp * back).exp();
                let delivered = if hit_now {
                    level.unwrap_or(y)
                } else if quit && !due && c.kind == ContractKind::American {
                    retirement.unwrap_or(y)
                } else if absorbed_at.is_some() {
                    level.unwrap_or(y)
                } else {
                    y
                };
                let xi = m.agent_utility.inverse(delivered)?;
                let agent = k_stop * delivered + run_agent;
                let liquidation = m.liquidation_value(x, output, kp_stop);
                let principal = kp_stop * m.principal_utility.value(liquidation - xi) + run_principal;
                if let Some(r) = rec.as_mut() {
                    r.stopped_at = Some(i);
                    r.stop_time = Some(stop_time);
                    r.terminal_y = delivered;
                    r.hit = hit_now;
                }
                return Ok(PathOutcome { agent, principal, stop_time, truncated, path: rec });
            }
            let eps = noise.next_normal();
            let (effort, pay, sensitivities) = if absorbed_at.is_some() {
                (self.resting_effort(), 0.0f64.max(m.agent_utility.domain_lo()), None)
            } else {
                let q = c.query(t, x, y);
                let (best, h) = maximize(m, &q)?;
                let effort = match self.effort {
                    EffortPolicy::Maximizer => best,
                    other => other.resolve(m, c, t, x, y)?,
                };
                (effort, (c.payment_rate)(t, x, y), Some((q.z, q.gamma, h)))
            };
            let utility_pay = m.agent_utility.value(pay);
            let dx = (m.vol)(t, x, effort.vol) * ((m.drift)(t, x, effort.drift) * dt + sqrt_dt * eps);
            let next_y = match sensitivities {
                None => y,
                Some((z, gamma, h)) => euler_increment(y, z, gamma, h + utility_pay, dx, dt),
            };
            if !next_y.is_finite() {
                return Err(Error::Numeric { step: i, detail: format!("promised value became {next_y}") });
            }
            let cost = (m.cost)(t, x, effort.drift, effort.vol);
            run_agent += k * (utility_pay - cost) * dt;
            run_principal += kp * m.principal_utility.value(-pay) * dt;
            rate_k = (m.discount_rate)(t, x, effort.drift, effort.vol);
            rate_kp = (m.principal_discount_rate)(t, x);
            log_k += rate_k * dt;
            log_kp += rate_kp * dt;
            output += kp * dx;
            x += dx;
            prev_y = y;
            y = next_y;
        }
        unreachable!("the last sample always terminates")
    }

    pub fn run_all(&self) -> Result<Vec<PathOutcome>> {
        self.cfg.validate()?;
        (0..self.cfg.n_paths).into_par_iter().map(|i| self.run(i, None)).collect()
    }
}

/// Simulated paths with agent and principal pay-offs in path order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationBatch {
    /// Sampled paths; empty unless the configuration records them.
    pub paths: Vec<DiscretizedPath>,
    pub agent_payoffs: Vec<f64>,
    pub principal_payoffs: Vec<f64>,
    pub stop_times: Vec<f64>,
    pub truncated_count: usize,
}

impl SimulationBatch {
    pub(crate) fn collect(outcomes: Vec<PathOutcome>, cfg: &SimulationConfig) -> Result<Self> {
        let truncated_count = outcomes.iter().filter(|o| o.truncated).count();
        if truncated_count as f64 > cfg.max_truncated_fraction * cfg.n_paths as f64 {
            return Err(Error::Horizon { alive: truncated_count, n_paths: cfg.n_paths, t_cap: cfg.t_cap });
        }
        let mut batch = SimulationBatch {
            paths: Vec::new(),
            agent_payoffs: Vec::with_capacity(outcomes.len()),
            principal_payoffs: Vec::with_capacity(outcomes.len()),
            stop_times: Vec::with_capacity(outcomes.len()),
            truncated_count,
        };
        for o in outcomes {
            batch.agent_payoffs.push(o.agent);
            batch.principal_payoffs.push(o.principal);
            batch.stop_times.push(o.stop_time);
            if let Some(p) = o.path {
                batch.paths.push(p);
            }
        }
        Ok(batch)
    }

    pub fn agent_value(&self) -> Estimate {
        Estimate::from_samples(&self.agent_payoffs)
    }

    pub fn principal_value(&self) -> Estimate {
        Estimate::from_samples(&self.principal_payoffs)
    }

    pub fn n_paths(&self) -> usize {
        self.agent_payoffs.len()
    }

    /// One row per path: `path, agent, principal, stop_time`.
    pub fn write_payoffs_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path", "agent", "principal", "stop_time"])?;
        for k in 0..self.n_paths() {
            w.write_record([
                k.to_string(),
                format_float(self.agent_payoffs[k]),
                format_float(self.principal_payoffs[k]),
                format_float(self.stop_times[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Euler-Maruyama simulation of the controlled output with the promised
/// value co-propagated.
pub fn simulate_output(
    model: &ModelPrimitives,
    effort: &EffortPolicy,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
) -> Result<SimulationBatch> {
    let engine = Engine { model, contract, effort, cfg, rule: StopRule::Contract };
    SimulationBatch::collect(engine.run_all()?, cfg)
}

/// Summary of a batch for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub truncated_count: usize,
    pub seed: u64,
}

impl BatchSummary {
    pub fn new(estimate: Estimate, batch: &SimulationBatch, cfg: &SimulationConfig) -> Self {
        BatchSummary {
            estimate: estimate.estimate,
            std_error: estimate.std_error,
            n_paths: batch.n_paths(),
            truncated_count: batch.truncated_count,
            seed: cfg.seed,
        }
    }
}
