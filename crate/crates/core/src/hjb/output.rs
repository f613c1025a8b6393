//! Solution tables and summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::european::{ConstructionDiagnostics, ConvergenceReport, FreeBoundarySolution};
use super::grid::GridSolution;
use crate::error::Result;
use crate::report::format_float;

const HEADER: [&str; 5] = ["y", "v", "v_prime", "z_hat", "stop_flag"];

pub fn write_grid_csv<W: Write>(sol: &GridSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for i in 0..sol.y.len() {
        w.write_record([
            format_float(sol.y[i]),
            format_float(sol.v[i]),
            format_float(sol.v_prime[i]),
            format_float(sol.z_hat[i]),
            u8::from(sol.stop[i]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Tabulates the constructed solution at the given promised values.
pub fn write_free_boundary_csv<W: Write>(sol: &FreeBoundarySolution, ys: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for &y in ys {
        w.write_record([
            format_float(y),
            format_float(sol.v(y)),
            format_float(sol.v_prime(y)),
            format_float(sol.z_hat(y)),
            u8::from(sol.in_stop_region(y)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundarySummary {
    pub discount_beta: f64,
    pub s_star: f64,
    pub n_max: usize,
    pub s_n: f64,
    pub c_n: f64,
    pub s_n_prime: f64,
    pub stop_boundary_y: f64,
    pub diagnostics: ConstructionDiagnostics,
    pub convergence: ConvergenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub y_min: f64,
    pub y_max: f64,
    pub points: usize,
    pub iterations: usize,
    pub max_residual: f64,
    pub v_left: f64,
    pub v_right: f64,
    /// Largest promised value in the lower stopping region, if any.
    pub stop_boundary_y: Option<f64>,
    /// Smallest promised value in the upper stopping region, if any.
    pub upper_stop_y: Option<f64>,
}

impl GridSummary {
    pub fn from_solution(sol: &GridSolution) -> Self {
        let n = sol.y.len();
        let first_cont = sol.stop.iter().skip(1).position(|&s| !s).map(|i| i + 1);
        let lower = match first_cont {
            Some(i) if i > 1 => Some(sol.y[i - 1]),
            _ => None,
        };
        let last_cont = sol.stop[..n - 1].iter().rposition(|&s| !s);
        let upper = match last_cont {
            Some(i) if i + 2 < n && sol.stop[i + 1] => Some(sol.y[i + 1]),
            _ => None,
        };
        GridSummary {
            y_min: sol.y[0],
            y_max: sol.y[n - 1],
            points: n,
            iterations: sol.iterations,
            max_residual: sol.max_residual,
            v_left: sol.v[0],
            v_right: sol.v[n - 1],
            stop_boundary_y: lower,
            upper_stop_y: upper,
        }
    }
}
