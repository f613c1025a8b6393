use rhcontract::first_best::solve_lambda_hat;
use rhcontract::hjb::output::{write_free_boundary_csv, write_grid_csv, FreeBoundarySummary, GridSummary};
use rhcontract::hjb::{limit_solution, solve_obstacle_grid, ObstacleGridProblem};
use rhcontract::report::format_float;

use crate::artifacts::Artifacts;
use crate::config::{Builtin, RunConfig};
use crate::error::CliResult;

const DIAGNOSTIC_SAMPLES: usize = 400;

/// Runs the solver for the configured model and returns a one-line summary.
pub fn solve(cfg: &RunConfig, out: &mut Artifacts) -> CliResult<String> {
    match cfg.model.builtin {
        Builtin::EuroQuadratic => {
            let problem = cfg.european_problem()?;
            let lim = limit_solution(&problem)?;
            let sol = lim.solution;
            let summary = FreeBoundarySummary {
                discount_beta: problem.discount_beta,
                s_star: problem.s_star(),
                n_max: problem.n_max,
                s_n: sol.s_n,
                c_n: sol.c_n,
                s_n_prime: sol.s_n_prime,
                stop_boundary_y: sol.stop_boundary(),
                diagnostics: sol.diagnostics(DIAGNOSTIC_SAMPLES)?,
                convergence: lim.report,
            };
            let ys: Vec<f64> = problem.s_grid.iter().map(|s| s.ln()).collect();
            out.csv("value.csv", |w| write_free_boundary_csv(&sol, &ys, w))?;
            out.json("summary.json", &summary)?;
            Ok(format!(
                "s_star {} s_n {} s_n_prime {}",
                format_float(summary.s_star),
                format_float(sol.s_n),
                format_float(sol.s_n_prime)
            ))
        }
        Builtin::Sannikov | Builtin::AmericanSannikov => {
            let model = cfg.build_model()?;
            let s = &cfg.solver;
            let mut problem = if cfg.model.builtin == Builtin::Sannikov {
                ObstacleGridProblem::sannikov_european(&model, s.y_max, s.grid_points)?
            } else {
                ObstacleGridProblem::sannikov_american(&model, s.y_max, s.grid_points)?
            };
            problem.solver = s.inner;
            problem.policy_tolerance = s.policy_tolerance;
            problem.max_policy_iterations = s.max_policy_iterations;
            let sol = solve_obstacle_grid(&problem)?;
            let summary = GridSummary::from_solution(&sol);
            out.csv("value.csv", |w| write_grid_csv(&sol, w))?;
            out.json("summary.json", &summary)?;
            Ok(format!("iterations {} max_residual {}", summary.iterations, format_float(summary.max_residual)))
        }
        Builtin::FirstBestCanonical => {
            let problem = cfg.first_best_problem()?;
            let sol = solve_lambda_hat(&problem)?;
            out.csv("contract.csv", |w| sol.write_csv(w))?;
            out.json("summary.json", &sol)?;
            Ok(format!("lambda_hat {} v_fb {}", format_float(sol.lambda_hat), format_float(sol.v_fb)))
        }
    }
}
