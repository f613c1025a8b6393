//! Solvers for the principal's reduced problems.

pub mod european;
pub mod gamma_half;
pub mod grid;
pub mod output;
pub mod reduced;

pub use european::{
    construct_un, limit_solution, value_and_control, ConstructionDiagnostics, ConvergenceReport,
    EuropeanExampleProblem, FreeBoundarySolution, LimitSolution, ValueAndControl,
};
pub use gamma_half::{gamma_half_cdf, gamma_half_quantile, gamma_half_sf, gamma_half_sf_inverse};
pub use grid::{solve_obstacle_grid, BoundaryCondition, GridSolution, InnerSolver, ObstacleGridProblem};
pub use reduced::{inner_effort_sup, inner_payment_inf, QuadraticResponse};
