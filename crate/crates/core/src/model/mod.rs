//! Economy primitives and the agent Hamiltonian.

mod domain;
pub mod hamiltonian;
mod primitives;
mod utility;

pub use domain::{EffortDomain, Interval};
pub use hamiltonian::{hamiltonian, maximize, maximizer, running_reward, Effort, HamiltonianQuery};
pub use primitives::{
    ActionMap, CoefficientBounds, EffortMap, Liquidation, ModelPrimitives, QuadraticClosedForm, QuadraticSpec, StateMap,
};
pub use utility::{CustomUtility, Utility};
