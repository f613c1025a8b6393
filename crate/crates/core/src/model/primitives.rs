use std::fmt;
use std::sync::Arc;

use super::domain::{EffortDomain, Interval};
use super::utility::Utility;
use crate::error::{Error, Result};

/// `(t, x, action) -> value`.
pub type ActionMap = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// `(t, x, a, b) -> value`.
pub type EffortMap = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
/// `(t, x) -> value`.
pub type StateMap = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// What the principal receives when the contract ends.
#[derive(Clone)]
pub enum Liquidation {
    /// A function of the terminal state.
    Terminal(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// The stream of output discounted at the principal's rate, expressed in
    /// time-`tau` units so that `K^P_tau * l_tau = sum K^P dX`.
    DiscountedOutput,
}

impl fmt::Debug for Liquidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Liquidation::Terminal(_) => write!(f, "Terminal"),
            Liquidation::DiscountedOutput => write!(f, "DiscountedOutput"),
        }
    }
}

/// Closed-form data for models with drift `a`, constant volatility,
/// quadratic cost `cost_scale * a^2 / 2` and constant agent discount rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticClosedForm {
    pub cost_scale: f64,
    pub volatility: f64,
    pub agent_rate: f64,
}

/// Declared bounds checked by [`ModelPrimitives::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds {
    pub drift: f64,
    pub vol: f64,
    pub rate: f64,
}

/// One contracting economy: output dynamics, agent cost and discounting,
/// both utilities and the principal's liquidation value.
#[derive(Clone)]
pub struct ModelPrimitives {
    pub name: String,
    pub effort: EffortDomain,
    pub drift: ActionMap,
    pub vol: ActionMap,
    pub cost: EffortMap,
    pub discount_rate: EffortMap,
    pub agent_utility: Utility,
    pub principal_utility: Utility,
    pub principal_discount_rate: StateMap,
    pub liquidation: Liquidation,
    /// `U(rho) = U(0) / k0`, the agent's value at retirement.
    pub retirement_level: Option<f64>,
    pub participation: f64,
    pub bounds: CoefficientBounds,
    pub closed_form: Option<QuadraticClosedForm>,
}

impl fmt::Debug for ModelPrimitives {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelPrimitives")
            .field("name", &self.name)
            .field("effort", &self.effort)
            .field("agent_utility", &self.agent_utility)
            .field("principal_utility", &self.principal_utility)
            .field("liquidation", &self.liquidation)
            .field("retirement_level", &self.retirement_level)
            .field("participation", &self.participation)
            .field("closed_form", &self.closed_form)
            .finish()
    }
}

/// Parameters of a quadratic-cost model with drift equal to effort.
#[derive(Debug, Clone)]
pub struct QuadraticSpec {
    pub name: String,
    pub drift_actions: Interval,
    pub cost_scale: f64,
    pub volatility: f64,
    pub agent_rate: f64,
    pub agent_utility: Utility,
    pub principal_utility: Utility,
    pub principal_rate: f64,
    pub liquidation: Liquidation,
    pub retirement_level: Option<f64>,
    pub participation: f64,
}

impl ModelPrimitives {
    pub fn quadratic(spec: QuadraticSpec) -> Result<Self> {
        if !(spec.cost_scale > 0.0) || !(spec.volatility > 0.0) {
            return Err(Error::Domain("cost_scale and volatility must be positive".into()));
        }
        let QuadraticSpec { cost_scale, volatility, agent_rate, principal_rate, .. } = spec;
        let effort = EffortDomain::new(spec.drift_actions, Interval::point(0.0), 201)?;
        let drift_bound = spec.drift_actions.lo.abs().max(spec.drift_actions.hi.abs());
        Ok(ModelPrimitives {
            name: spec.name,
            effort,
            drift: Arc::new(|_, _, a| a),
            vol: Arc::new(move |_, _, _| volatility),
            cost: Arc::new(move |_, _, a, _| 0.5 * cost_scale * a * a),
            discount_rate: Arc::new(move |_, _, _, _| agent_rate),
            agent_utility: spec.agent_utility,
            principal_utility: spec.principal_utility,
            principal_discount_rate: Arc::new(move |_, _| principal_rate),
            liquidation: spec.liquidation,
            retirement_level: spec.retirement_level,
            participation: spec.participation,
            bounds: CoefficientBounds { drift: drift_bound, vol: volatility, rate: agent_rate.abs() },
            closed_form: Some(QuadraticClosedForm { cost_scale, volatility, agent_rate }),
        })
    }

    /// Risk-neutral agent, quadratic cost, no agent discounting, principal
    /// discounting output at `beta`.
    pub fn euro_quadratic(beta: f64, participation: f64) -> Result<Self> {
        Self::quadratic(QuadraticSpec {
            name: "euro_quadratic".into(),
            drift_actions: Interval::real_line(),
            cost_scale: 1.0,
            volatility: 1.0,
            agent_rate: 0.0,
            agent_utility: Utility::Identity,
            principal_utility: Utility::Identity,
            principal_rate: beta,
            liquidation: Liquidation::DiscountedOutput,
            retirement_level: None,
            participation,
        })
    }

    /// Square-root agent utility, quadratic cost, common discount rate `r`.
    pub fn sannikov(r: f64, drift_actions: Interval, participation: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("discount rate must be positive, got {r}")));
        }
        let mut m = Self::quadratic(QuadraticSpec {
            name: "sannikov".into(),
            drift_actions,
            cost_scale: 1.0,
            volatility: 1.0,
            agent_rate: r,
            agent_utility: Utility::Sqrt,
            principal_utility: Utility::Identity,
            principal_rate: r,
            liquidation: Liquidation::DiscountedOutput,
            retirement_level: None,
            participation,
        })?;
        m.retirement_level = Some(m.agent_utility.value(0.0) / r);
        Ok(m)
    }

    pub fn american_sannikov(r: f64, drift_actions: Interval, participation: f64) -> Result<Self> {
        let mut m = Self::sannikov(r, drift_actions, participation)?;
        m.name = "american_sannikov".into();
        Ok(m)
    }

    /// Risk-neutral agent, exponential principal, no discounting,
    /// liquidation at the terminal state.
    pub fn first_best_canonical(participation: f64) -> Result<Self> {
        Self::quadratic(QuadraticSpec {
            name: "first_best_canonical".into(),
            drift_actions: Interval::real_line(),
            cost_scale: 1.0,
            volatility: 1.0,
            agent_rate: 0.0,
            agent_utility: Utility::Identity,
            principal_utility: Utility::NegExp { rate: 1.0 },
            principal_rate: 0.0,
            liquidation: Liquidation::Terminal(Arc::new(|x| x)),
            retirement_level: None,
            participation,
        })
    }

    /// Same economy, but forces the numerical maximizer.
    pub fn without_closed_form(mut self) -> Self {
        self.closed_form = None;
        self
    }

    pub fn with_drift_actions(mut self, drift_actions: Interval) -> Result<Self> {
        self.effort = EffortDomain::new(drift_actions, self.effort.vol_actions, self.effort.grid_resolution)?;
        Ok(self)
    }

    /// Liquidation value given the terminal state and the discounted output
    /// accumulated along the path.
    pub fn liquidation_value(&self, x_terminal: f64, discounted_output: f64, principal_discount: f64) -> f64 {
        match &self.liquidation {
            Liquidation::Terminal(f) => f(x_terminal),
            Liquidation::DiscountedOutput => discounted_output / principal_discount,
        }
    }

    /// Sample the declared invariants on a grid of `(t, x)` and utility values.
    pub fn validate(&self) -> Result<()> {
        let times = [0.0, 0.5, 1.0, 2.0, 5.0];
        let states = [-5.0, -1.0, 0.0, 1.0, 5.0];
        let a_dom = self.effort.drift_actions;
        let b_dom = self.effort.vol_actions;
        let probe = |d: Interval| -> Vec<f64> {
            let lo = d.lo.max(-10.0);
            let hi = d.hi.min(10.0);
            (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect()
        };
        let a_grid = probe(a_dom);
        let b_grid = probe(b_dom);
        let zero_feasible = a_dom.contains(0.0) && b_dom.contains(0.0);
        let mut k0 = None;
        for &t in &times {
            for &x in &states {
                if zero_feasible {
                    let c0 = (self.cost)(t, x, 0.0, 0.0);
                    if c0.abs() > 1e-12 {
                        return Err(Error::Invariant(format!("cost(t={t}, x={x}, 0, 0) = {c0}, expected 0")));
                    }
                    let k = (self.discount_rate)(t, x, 0.0, 0.0);
                    match k0 {
                        None => k0 = Some(k),
                        Some(k_ref) if (k - k_ref).abs() > 1e-12 => {
                            return Err(Error::Invariant(format!(
                                "discount_rate(t, x, 0, 0) is not constant: {k} vs {k_ref}"
                            )))
                        }
                        _ => {}
                    }
                }
                for &a in &a_grid {
                    let d = (self.drift)(t, x, a);
                    if !(d.abs() <= self.bounds.drift) {
                        return Err(Error::Invariant(format!(
                            "|drift| = {} exceeds bound {}",
                            d.abs(),
                            self.bounds.drift
                        )));
                    }
                    for &b in &b_grid {
                        let c = (self.cost)(t, x, a, b);
                        if !(c >= 0.0) {
                            return Err(Error::Invariant(format!("negative cost {c} at a={a}, b={b}")));
                        }
                        let k = (self.discount_rate)(t, x, a, b);
                        if !(k.abs() <= self.bounds.rate) {
                            return Err(Error::Invariant(format!(
                                "|discount_rate| = {} exceeds bound {}",
                                k.abs(),
                                self.bounds.rate
                            )));
                        }
                    }
                }
                for &b in &b_grid {
                    let s = (self.vol)(t, x, b);
                    if !(s > 0.0 && s <= self.bounds.vol) {
                        return Err(Error::Invariant(format!("vol {s} not in (0, {}]", self.bounds.vol)));
                    }
                }
            }
        }
        if let (Some(level), Some(k)) = (self.retirement_level, k0) {
            if !(k > 0.0) {
                return Err(Error::Invariant(format!("retirement requires k0 > 0, got {k}")));
            }
            let expected = self.agent_utility.value(0.0) / k;
            if (level - expected).abs() > 1e-12 {
                return Err(Error::Invariant(format!("retirement level {level} differs from U(0)/k0 = {expected}")));
            }
        }
        let (lo, hi) = self.agent_utility.range();
        let lo = if lo.is_finite() { lo } else { -10.0 };
        let hi = if hi.is_finite() { hi } else { 10.0 };
        for i in 0..=20 {
            let y = lo + (hi - lo) * i as f64 / 20.0;
            if self.agent_utility.inverse(y).is_err() {
                continue;
            }
            let back = self.agent_utility.value(self.agent_utility.inverse(y)?);
            if (back - y).abs() > 1e-10 * (1.0 + y.abs()) {
                return Err(Error::Invariant(format!("U(U^-1({y})) = {back}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        ModelPrimitives::euro_quadratic(0.25, 1.0).unwrap().validate().unwrap();
        ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap().validate().unwrap();
        ModelPrimitives::first_best_canonical(0.5).unwrap().validate().unwrap();
    }

    #[test]
    fn nonzero_idle_cost_is_rejected() {
        let mut m = ModelPrimitives::euro_quadratic(0.25, 0.0).unwrap();
        m.cost = Arc::new(|_, _, a, _| 1.0 + a * a);
        assert!(matches!(m.validate(), Err(Error::Invariant(_))));
    }

    #[test]
    fn retirement_requires_positive_idle_rate() {
        let mut m = ModelPrimitives::euro_quadratic(0.25, 0.0).unwrap();
        m.retirement_level = Some(0.0);
        assert!(matches!(m.validate(), Err(Error::Invariant(_))));
    }

    #[test]
    fn sannikov_retires_at_zero() {
        let m = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
        assert_eq!(m.retirement_level, Some(0.0));
    }
}
