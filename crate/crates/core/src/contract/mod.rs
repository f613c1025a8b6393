//! Revealing contracts and the promised-value recursion.

mod csv_dump;
mod propagate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{maximizer, Effort, HamiltonianQuery, ModelPrimitives};

pub use csv_dump::{write_path_csv, write_paths_csv};
pub(crate) use propagate::{crossing, euler_increment};
pub use propagate::{
    hitting_time, identity_residuals, propagate_y, propagate_y_with, terminal_payment, DiscretizedPath, DEFAULT_MAX_DT,
};

/// `(t, x, y) -> value`.
pub type FeedbackMap = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// When the contract ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Fixed {
        horizon: f64,
    },
    /// First time the promised value falls to `level` or below.
    Hitting {
        level: f64,
    },
    /// Whichever of the two comes first.
    Composite {
        horizon: f64,
        level: f64,
    },
}

impl Termination {
    pub fn horizon(&self) -> Option<f64> {
        match *self {
            Termination::Fixed { horizon } | Termination::Composite { horizon, .. } => Some(horizon),
            Termination::Hitting { .. } => None,
        }
    }

    pub fn level(&self) -> Option<f64> {
        match *self {
            Termination::Hitting { level } | Termination::Composite { level, .. } => Some(level),
            Termination::Fixed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractKind {
    /// The principal fixes the end; the agent receives `U^-1(Y_tau)`.
    European,
    /// The agent may quit; at the end it receives its retirement value.
    American,
}

/// A contract parameterized by its initial promised value, the
/// sensitivities `Z` and `Gamma`, a payment rate and a termination rule.
#[derive(Clone)]
pub struct RevealingContract {
    pub y0: f64,
    pub z_policy: FeedbackMap,
    pub gamma_policy: FeedbackMap,
    pub payment_rate: FeedbackMap,
    pub termination: Termination,
    pub kind: ContractKind,
}

impl fmt::Debug for RevealingContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RevealingContract")
            .field("y0", &self.y0)
            .field("termination", &self.termination)
            .field("kind", &self.kind)
            .finish()
    }
}

fn zero_map() -> FeedbackMap {
    Arc::new(|_, _, _| 0.0)
}

impl RevealingContract {
    /// Builds a contract with `Gamma = 0` and no running payment. Fails if
    /// `y0` is below the model's participation level.
    pub fn new(model: &ModelPrimitives, y0: f64, z_policy: FeedbackMap, termination: Termination) -> Result<Self> {
        if !y0.is_finite() || y0 < model.participation {
            return Err(Error::Domain(format!(
                "initial promised value {y0} is below participation {}",
                model.participation
            )));
        }
        match termination {
            Termination::Fixed { horizon } | Termination::Composite { horizon, .. } if !(horizon > 0.0) => {
                return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
            }
            _ => {}
        }
        Ok(RevealingContract {
            y0,
            z_policy,
            gamma_policy: zero_map(),
            payment_rate: zero_map(),
            termination,
            kind: ContractKind::European,
        })
    }

    pub fn constant_z(model: &ModelPrimitives, y0: f64, z: f64, termination: Termination) -> Result<Self> {
        Self::new(model, y0, Arc::new(move |_, _, _| z), termination)
    }

    pub fn with_gamma(mut self, gamma_policy: FeedbackMap) -> Self {
        self.gamma_policy = gamma_policy;
        self
    }

    pub fn with_payment(mut self, payment_rate: FeedbackMap) -> Self {
        self.payment_rate = payment_rate;
        self
    }

    pub fn american(mut self) -> Self {
        self.kind = ContractKind::American;
        self
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn query(&self, t: f64, x: f64, y: f64) -> HamiltonianQuery {
        HamiltonianQuery { t, x, y, z: (self.z_policy)(t, x, y), gamma: (self.gamma_policy)(t, x, y) }
    }
}

/// The agent's effort as a function of the observed state.
#[derive(Clone)]
pub enum EffortPolicy {
    /// The Hamiltonian maximizer at the contract's `(Z, Gamma)`.
    Maximizer,
    Constant(Effort),
    Feedback(Arc<dyn Fn(f64, f64, f64) -> Effort + Send + Sync>),
}

impl fmt::Debug for EffortPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffortPolicy::Maximizer => write!(f, "Maximizer"),
            EffortPolicy::Constant(e) => write!(f, "Constant({}, {})", e.drift, e.vol),
            EffortPolicy::Feedback(_) => write!(f, "Feedback"),
        }
    }
}

impl EffortPolicy {
    /// Constant drift action with the model's smallest vol action.
    pub fn constant_drift(model: &ModelPrimitives, a: f64) -> Self {
        EffortPolicy::Constant(Effort { drift: a, vol: model.effort.vol_actions.lo })
    }

    pub fn resolve(
        &self,
        model: &ModelPrimitives,
        contract: &RevealingContract,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<Effort> {
        match self {
            EffortPolicy::Maximizer => maximizer(model, &contract.query(t, x, y)),
            EffortPolicy::Constant(e) => Ok(*e),
            EffortPolicy::Feedback(f) => Ok(f(t, x, y)),
        }
    }
}
