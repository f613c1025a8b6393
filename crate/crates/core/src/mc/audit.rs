use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimulationConfig;
use super::simulate::{Engine, SimulationBatch, StopRule};
use super::stats::{Estimate, ABSOLUTE_FLOOR};
use crate::contract::{EffortPolicy, RevealingContract};
use crate::error::{Error, Result};
use crate::model::ModelPrimitives;

/// Width of every acceptance band, in standard errors.
pub const BAND: f64 = 3.0;

fn run(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    effort: &EffortPolicy,
    cfg: &SimulationConfig,
    rule: StopRule,
) -> Result<SimulationBatch> {
    let engine = Engine { model, contract, effort, cfg, rule };
    SimulationBatch::collect(engine.run_all()?, cfg)
}

/// Mean discounted agent pay-off under `effort`.
pub fn agent_value_mc(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    effort: &EffortPolicy,
    cfg: &SimulationConfig,
) -> Result<Estimate> {
    Ok(run(model, contract, effort, cfg, StopRule::Contract)?.agent_value())
}

/// Mean principal pay-off when the agent plays the Hamiltonian maximizer.
pub fn principal_value_mc(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
) -> Result<Estimate> {
    Ok(run(model, contract, &EffortPolicy::Maximizer, cfg, StopRule::Contract)?.principal_value())
}

#[derive(Debug, Clone)]
pub struct Deviation {
    pub label: String,
    pub policy: EffortPolicy,
}

impl Deviation {
    pub fn new(label: impl Into<String>, policy: EffortPolicy) -> Self {
        Deviation { label: label.into(), policy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationGap {
    pub label: String,
    pub value: Estimate,
    /// Maximizer value minus deviation value.
    pub gap: f64,
    pub combined_error: f64,
}

impl DeviationGap {
    /// The deviation does not beat the maximizer beyond the band.
    pub fn admissible(&self) -> bool {
        self.gap >= -BAND * self.combined_error - ABSOLUTE_FLOOR
    }

    /// The deviation loses value beyond the band.
    pub fn strictly_loses(&self) -> bool {
        self.gap > BAND * self.combined_error + ABSOLUTE_FLOOR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseReport {
    pub maximizer: Estimate,
    pub deviations: Vec<DeviationGap>,
    pub passed: bool,
}

/// Agent value of the maximizer against each deviation, without asserting.
pub fn evaluate_best_response(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
    deviations: &[Deviation],
) -> Result<BestResponseReport> {
    evaluate_response(model, contract, cfg, &EffortPolicy::Maximizer, deviations)
}

/// Agent value of a claimed best response against each deviation.
pub fn evaluate_response(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
    response: &EffortPolicy,
    deviations: &[Deviation],
) -> Result<BestResponseReport> {
    let maximizer = agent_value_mc(model, contract, response, cfg)?;
    let mut rows = Vec::with_capacity(deviations.len());
    for d in deviations {
        let value = agent_value_mc(model, contract, &d.policy, cfg)?;
        rows.push(DeviationGap {
            label: d.label.clone(),
            value,
            gap: maximizer.estimate - value.estimate,
            combined_error: maximizer.combined_error(&value),
        });
    }
    let passed = rows.iter().all(DeviationGap::admissible);
    Ok(BestResponseReport { maximizer, deviations: rows, passed })
}

/// Fails with an audit error naming every deviation that beats the maximizer.
pub fn best_response_audit(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
    deviations: &[Deviation],
) -> Result<BestResponseReport> {
    response_audit(model, contract, cfg, &EffortPolicy::Maximizer, deviations)
}

/// [`best_response_audit`] for a claimed response other than the maximizer.
pub fn response_audit(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
    response: &EffortPolicy,
    deviations: &[Deviation],
) -> Result<BestResponseReport> {
    let report = evaluate_response(model, contract, cfg, response, deviations)?;
    if !report.passed {
        return Err(Error::Audit(best_response_failure(&report)));
    }
    Ok(report)
}

/// Names the deviations that beat the response, for error messages.
pub fn best_response_failure(report: &BestResponseReport) -> String {
    let offenders: Vec<String> = report
        .deviations
        .iter()
        .filter(|g| !g.admissible())
        .map(|g| format!("{} (gap {:e}, combined error {:e})", g.label, g.gap, g.combined_error))
        .collect();
    format!("best_response: {}", offenders.join("; "))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    /// Mean over paths of the least-squares slope of `M_t - Y_0` on `t`.
    pub slope: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl MartingaleReport {
    pub fn driftless(&self) -> bool {
        self.slope.abs() <= BAND * self.std_error + ABSOLUTE_FLOOR
    }

    pub fn decreasing(&self) -> bool {
        self.slope < -BAND * self.std_error - ABSOLUTE_FLOOR
    }
}

fn ols_slope(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 3 {
        return None;
    }
    let n = samples.len() as f64;
    let (mt, mv) = samples.iter().fold((0.0, 0.0), |(a, b), &(t, v)| (a + t, b + v));
    let (mt, mv) = (mt / n, mv / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in samples {
        sxy += (t - mt) * (v - mv);
        sxx += (t - mt) * (t - mt);
    }
    Some(sxy / sxx)
}

/// Drift of `K_t Y_t + sum K (U(pi) - c) dt` under `effort`, estimated by
/// per-path regression on time.
pub fn martingale_audit(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    effort: &EffortPolicy,
    cfg: &SimulationConfig,
) -> Result<MartingaleReport> {
    cfg.validate()?;
    let engine = Engine { model, contract, effort, cfg, rule: StopRule::Contract };
    let slopes: Vec<Option<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut samples = Vec::new();
            let mut obs = |t: f64, v: f64| samples.push((t, v));
            engine.run(i, Some(&mut obs))?;
            Ok(ols_slope(&samples))
        })
        .collect::<Result<_>>()?;
    let slopes: Vec<f64> = slopes.into_iter().flatten().collect();
    if slopes.is_empty() {
        return Err(Error::Audit("martingale: every path ended before three samples".into()));
    }
    let e = Estimate::from_samples(&slopes);
    Ok(MartingaleReport { slope: e.estimate, std_error: e.std_error, n_paths: e.n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopVariant {
    pub label: String,
    pub value: Estimate,
    /// Value at the hitting rule minus value under this variant.
    pub gap: f64,
    pub combined_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmericanStopReport {
    pub hitting: Estimate,
    pub mean_stopping_time: f64,
    /// The initial promised value already sits at the retirement level.
    pub immediate: bool,
    pub variants: Vec<StopVariant>,
    pub best_label: String,
    pub passed: bool,
}

pub const STOP_PERTURBATIONS: [f64; 3] = [0.1, 0.5, 1.0];

/// Agent value of quitting at the first hit of the retirement level
/// against quitting at `min(hit, c)` and at `hit + c`.
pub fn evaluate_american_stop(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
) -> Result<AmericanStopReport> {
    let level = contract
        .termination
        .level()
        .ok_or_else(|| Error::Domain("american stop audit needs a hitting-rule contract".into()))?;
    if let Some(rho) = model.retirement_level {
        if (rho - level).abs() > 1e-12 * (1.0 + rho.abs()) {
            return Err(Error::Domain(format!("hitting level {level} differs from the retirement level {rho}")));
        }
    }
    let effort = EffortPolicy::Maximizer;
    let base = run(model, contract, &effort, cfg, StopRule::Contract)?;
    let hitting = base.agent_value();
    let mean_stopping_time = base.stop_times.iter().sum::<f64>() / base.stop_times.len() as f64;
    let mut variants = Vec::new();
    for &c in &STOP_PERTURBATIONS {
        for (label, rule) in [(format!("min(hit, {c})"), StopRule::Cap(c)), (format!("hit + {c}"), StopRule::Delay(c))]
        {
            let value = run(model, contract, &effort, cfg, rule)?.agent_value();
            variants.push(StopVariant {
                label,
                value,
                gap: hitting.estimate - value.estimate,
                combined_error: hitting.combined_error(&value),
            });
        }
    }
    let best = variants
        .iter()
        .max_by(|a, b| a.value.estimate.total_cmp(&b.value.estimate))
        .filter(|v| v.value.estimate > hitting.estimate);
    let best_label = best.map_or_else(|| "hit".to_string(), |v| v.label.clone());
    let passed = variants.iter().all(|v| v.gap >= -BAND * v.combined_error - ABSOLUTE_FLOOR);
    Ok(AmericanStopReport {
        hitting,
        mean_stopping_time,
        immediate: contract.y0 <= level,
        variants,
        best_label,
        passed,
    })
}

pub fn american_stop_audit(
    model: &ModelPrimitives,
    contract: &RevealingContract,
    cfg: &SimulationConfig,
) -> Result<AmericanStopReport> {
    let report = evaluate_american_stop(model, contract, cfg)?;
    if !report.passed {
        let worst = report
            .variants
            .iter()
            .min_by(|a, b| (a.gap / a.combined_error.max(1e-300)).total_cmp(&(b.gap / b.combined_error.max(1e-300))))
            .expect("variants are never empty");
        return Err(Error::Audit(format!(
            "american_stop: {} beats the hitting rule by {:e} (combined error {:e})",
            worst.label, -worst.gap, worst.combined_error
        )));
    }
    Ok(report)
}
