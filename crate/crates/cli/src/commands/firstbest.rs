use serde::{Deserialize, Serialize};

use rhcontract::first_best::{evaluate_equality, solve_lambda_hat, EqualityReport, LagrangianSolution};

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstBestReport {
    pub solution: LagrangianSolution,
    pub equality: EqualityReport,
}

fn equality_failure(r: &EqualityReport) -> String {
    let checks = [
        ("agent_at_participation", r.agent_at_participation),
        ("principal_at_first_best", r.principal_at_first_best),
        ("best_response", r.best_response.passed),
        ("zero_effort_loses", r.zero_effort_loses),
        ("effort_matches", r.max_effort_gap < 1e-6),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect();
    format!("second_best_equality: {}", failed.join(", "))
}

/// Solves for the multiplier, writes the contract and checks by simulation
/// that it attains the first best.
pub fn firstbest(cfg: &RunConfig, out: &mut Artifacts) -> CliResult<FirstBestReport> {
    let problem = cfg.first_best_problem()?;
    let solution = solve_lambda_hat(&problem)?;
    out.csv("contract.csv", |w| solution.write_csv(w))?;
    out.json("firstbest.json", &solution)?;
    let equality = evaluate_equality(&problem, &solution, &cfg.simulation_config())?;
    out.json("equality.json", &equality)?;
    if !equality.passed {
        return Err(CliError::Audit(equality_failure(&equality)));
    }
    Ok(FirstBestReport { solution, equality })
}
