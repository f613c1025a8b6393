use std::sync::Arc;

use serde::{Deserialize, Serialize};

use rhcontract::contract::{write_paths_csv, ContractKind, EffortPolicy, FeedbackMap, RevealingContract};
use rhcontract::hjb::limit_solution;
use rhcontract::mc::{
    best_response_failure, evaluate_american_stop, evaluate_response, martingale_audit, simulate_output,
    AmericanStopReport, BatchSummary, BestResponseReport, Deviation, Estimate, MartingaleReport, SimulationConfig,
    BAND,
};
use rhcontract::model::{maximizer, Effort, ModelPrimitives};

use crate::artifacts::Artifacts;
use crate::config::{RunConfig, Sensitivity};
use crate::error::{CliError, CliResult};

const FEEDBACK_TABLE_POINTS: usize = 2001;
const DEVIATION_STEP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOutcome<T> {
    pub report: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentValueAudit {
    pub promised_value: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub model: String,
    pub response: String,
    pub maximizer_drift_at_start: f64,
    pub agent: BatchSummary,
    pub principal: BatchSummary,
    pub agent_value: AuditOutcome<AgentValueAudit>,
    pub best_response: AuditOutcome<BestResponseReport>,
    pub martingale: AuditOutcome<MartingaleReport>,
    pub american_stop: Option<AuditOutcome<AmericanStopReport>>,
    pub passed: bool,
}

fn build_contract(cfg: &RunConfig, model: &ModelPrimitives) -> CliResult<RevealingContract> {
    let block = &cfg.simulation.contract;
    let z: FeedbackMap = match block.z {
        Sensitivity::Constant(z) => Arc::new(move |_, _, _| z),
        Sensitivity::Named(_) => {
            limit_solution(&cfg.european_problem()?)?.solution.z_hat_feedback(FEEDBACK_TABLE_POINTS)?
        }
    };
    let payment = block.payment;
    let mut contract =
        RevealingContract::new(model, block.y0, z, block.termination)?.with_payment(Arc::new(move |_, _, _| payment));
    if block.american {
        contract = contract.american();
    }
    Ok(contract)
}

/// The maximizer shifted by one deviation step, inward if the shift would
/// leave the action set.
fn deviant_policy(model: &ModelPrimitives, contract: &RevealingContract) -> EffortPolicy {
    let (m, c) = (model.clone(), contract.clone());
    EffortPolicy::Feedback(Arc::new(move |t, x, y| {
        let actions = m.effort.drift_actions;
        let e = maximizer(&m, &c.query(t, x, y))
            .unwrap_or(Effort { drift: actions.clamp(0.0), vol: m.effort.vol_actions.lo });
        let up = e.drift + DEVIATION_STEP;
        let drift = if actions.contains(up) { up } else { actions.clamp(e.drift - DEVIATION_STEP) };
        Effort { drift, vol: e.vol }
    }))
}

fn deviations(cfg: &RunConfig, model: &ModelPrimitives, a_star: f64) -> Vec<Deviation> {
    let levels =
        cfg.simulation.deviations.clone().unwrap_or_else(|| vec![a_star - DEVIATION_STEP, a_star + DEVIATION_STEP]);
    let mut out: Vec<Deviation> = levels
        .into_iter()
        .filter(|a| model.effort.drift_actions.contains(*a) && *a != a_star)
        .map(|a| Deviation::new(format!("constant {a}"), EffortPolicy::constant_drift(model, a)))
        .collect();
    if cfg.simulation.deviant_policy {
        out.push(Deviation::new("maximizer", EffortPolicy::Maximizer));
    }
    out
}

fn path_table(
    model: &ModelPrimitives,
    response: &EffortPolicy,
    contract: &RevealingContract,
    sim: &SimulationConfig,
    count: usize,
    out: &mut Artifacts,
) -> CliResult<()> {
    let mut cfg = sim.clone().with_paths_recorded();
    cfg.n_paths = count;
    cfg.max_truncated_fraction = 1.0;
    let batch = simulate_output(model, response, contract, &cfg)?;
    out.csv("paths.csv", |w| write_paths_csv(&batch.paths, w))
}

/// Simulates the configured contract, runs every applicable audit and
/// writes the report; fails with the names of the audits that did not pass.
pub fn simulate(cfg: &RunConfig, out: &mut Artifacts) -> CliResult<SimulateReport> {
    let model = cfg.build_model()?;
    let contract = build_contract(cfg, &model)?;
    let sim = cfg.simulation_config();
    let a_star = maximizer(&model, &contract.query(0.0, sim.x0, contract.y0))?.drift;
    let (response, response_label) = if cfg.simulation.deviant_policy {
        (deviant_policy(&model, &contract), "deviant")
    } else {
        (EffortPolicy::Maximizer, "maximizer")
    };

    let batch = simulate_output(&model, &response, &contract, &sim)?;
    let agent = batch.agent_value();
    let agent_value = AuditOutcome {
        passed: agent.within(contract.y0, BAND),
        report: AgentValueAudit { promised_value: contract.y0, estimate: agent },
    };
    let best = evaluate_response(&model, &contract, &sim, &response, &deviations(cfg, &model, a_star))?;
    let best_response = AuditOutcome { passed: best.passed, report: best };
    let drift = martingale_audit(&model, &contract, &response, &sim)?;
    let martingale = AuditOutcome { passed: drift.driftless(), report: drift };
    let american_stop = match (contract.kind, contract.termination.level()) {
        (ContractKind::American, Some(_)) => {
            let r = evaluate_american_stop(&model, &contract, &sim)?;
            Some(AuditOutcome { passed: r.passed, report: r })
        }
        _ => None,
    };
    let passed = agent_value.passed
        && best_response.passed
        && martingale.passed
        && american_stop.as_ref().is_none_or(|a| a.passed);
    let report = SimulateReport {
        model: model.name.clone(),
        response: response_label.into(),
        maximizer_drift_at_start: a_star,
        agent: BatchSummary::new(agent, &batch, &sim),
        principal: BatchSummary::new(batch.principal_value(), &batch, &sim),
        agent_value,
        best_response,
        martingale,
        american_stop,
        passed,
    };

    out.csv("payoffs.csv", |w| batch.write_payoffs_csv(w))?;
    if cfg.simulation.paths_csv > 0 {
        path_table(&model, &response, &contract, &sim, cfg.simulation.paths_csv, out)?;
    }
    out.json("report.json", &report)?;

    if !report.passed {
        let mut failed = Vec::new();
        if !report.agent_value.passed {
            failed.push(format!(
                "agent_value: {:e} +- {:e} vs promised {}",
                agent.estimate, agent.std_error, contract.y0
            ));
        }
        if !report.best_response.passed {
            failed.push(best_response_failure(&report.best_response.report));
        }
        if !report.martingale.passed {
            let m = &report.martingale.report;
            failed.push(format!("martingale: slope {:e} +- {:e}", m.slope, m.std_error));
        }
        if report.american_stop.as_ref().is_some_and(|a| !a.passed) {
            failed.push("american_stop: a stopping variant beats the hitting rule".into());
        }
        return Err(CliError::Audit(failed.join("; ")));
    }
    Ok(report)
}
