//! Shared fixtures for the benchmarks.

use rhcontract::contract::{RevealingContract, Termination};
use rhcontract::first_best::FirstBestProblem;
use rhcontract::hjb::{EuropeanExampleProblem, ObstacleGridProblem};
use rhcontract::mc::SimulationConfig;
use rhcontract::model::{Interval, ModelPrimitives};

pub const BETA: f64 = 0.25;

pub fn european_problem(n_max: usize) -> EuropeanExampleProblem {
    EuropeanExampleProblem::new(BETA, n_max, 20.0, 400).expect("valid problem")
}

pub fn sannikov_model() -> ModelPrimitives {
    ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).expect("interval"), 0.0).expect("valid model")
}

pub fn sannikov_grid(points: usize) -> ObstacleGridProblem {
    ObstacleGridProblem::sannikov_european(&sannikov_model(), 2.0, points).expect("valid grid")
}

/// Quadratic example with the constant contract `Z = 1` over one period.
pub fn constant_contract() -> (ModelPrimitives, RevealingContract) {
    let m = ModelPrimitives::euro_quadratic(BETA, f64::NEG_INFINITY).expect("valid model");
    let c = RevealingContract::constant_z(&m, 1.0, 1.0, Termination::Fixed { horizon: 1.0 }).expect("valid contract");
    (m, c)
}

pub fn simulation(n_paths: usize) -> SimulationConfig {
    SimulationConfig::new(n_paths, 1e-2, 2.0, 1)
}

pub fn first_best_problem() -> FirstBestProblem {
    FirstBestProblem::canonical(0.5).expect("valid problem")
}
