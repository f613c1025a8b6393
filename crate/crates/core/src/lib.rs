//! Numerical toolkit for random-horizon principal-agent contracting.
//!
//! The crate reduces the principal's problem to stochastic control over
//! revealing contracts and provides:
//!
//! * [`model`]: the economy's primitives and the agent Hamiltonian;
//! * [`contract`]: propagation of the promised-value process along output paths;
//! * [`hjb`]: a constructive free-boundary solution for the quadratic example and
//!   a grid solver for obstacle problems of Sannikov type;
//! * [`mc`]: Monte Carlo audits of the reduction;
//! * [`first_best`]: the Lagrangian first-best solver.

pub mod contract;
pub mod error;
pub mod first_best;
pub mod hjb;
pub mod mc;
pub mod model;
pub mod numeric;
pub mod report;

pub use error::{Error, Result};
pub use model::{
    hamiltonian, maximizer, running_reward, Effort, EffortDomain, HamiltonianQuery, Interval, Liquidation,
    ModelPrimitives, Utility,
};
