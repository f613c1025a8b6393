//! Monte Carlo checks of the reduction: simulated output under a given
//! effort, agent and principal values, and audits of the agent's best
//! response, the martingale property of the promised value and the
//! American stopping rule.

mod audit;
mod config;
mod rng;
mod simulate;
mod stats;

pub use audit::{
    agent_value_mc, american_stop_audit, best_response_audit, best_response_failure, evaluate_american_stop,
    evaluate_best_response, evaluate_response, martingale_audit, principal_value_mc, response_audit,
    AmericanStopReport, BestResponseReport, Deviation, DeviationGap, MartingaleReport, StopVariant, BAND,
    STOP_PERTURBATIONS,
};
pub use config::SimulationConfig;
pub use rng::NoiseStream;
pub use simulate::{simulate_output, BatchSummary, SimulationBatch};
pub use stats::{Estimate, ABSOLUTE_FLOOR};
