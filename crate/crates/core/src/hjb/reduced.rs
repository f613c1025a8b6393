//! The inner optimizations of the reduced principal problem: the payment
//! infimum `I(p)` and the effort supremum `J(p, q)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Interval, ModelPrimitives, Utility};
use crate::numeric::golden_max;

/// Minimizer of `pi + p U(pi)` over payments in the utility's domain.
/// For `p >= 0` the smallest admissible payment is optimal.
pub fn payment_minimizer(p: f64, utility: &Utility) -> Result<f64> {
    let lo = utility.domain_lo().max(0.0);
    if p >= 0.0 {
        return Ok(lo);
    }
    if let Some(closed) = utility.derivative_inverse(-1.0 / p) {
        return closed;
    }
    let g = |x: f64| -(x + p * utility.value(x));
    let mut hi = 1.0;
    loop {
        let (x, _) = golden_max(g, lo, hi, 1e-14);
        if x < 0.9 * hi {
            return Ok(x);
        }
        hi *= 4.0;
        if hi > 1e12 {
            return Err(Error::Unbounded(format!("payment infimum not attained for p = {p}")));
        }
    }
}

/// `I(p) = inf_pi { pi + p U(pi) }` for `p < 0`.
pub fn inner_payment_inf(p: f64, model: &ModelPrimitives) -> Result<f64> {
    if !(p < 0.0) {
        return Err(Error::Domain(format!("payment infimum needs p < 0, got {p}")));
    }
    let u = &model.agent_utility;
    if !u.is_inada() {
        return Err(Error::Domain(format!("{u:?} lacks U'(0) = inf and U'(inf) = 0")));
    }
    let pi = payment_minimizer(p, u)?;
    Ok(pi + p * u.value(pi))
}

/// Effort response of a quadratic-cost model: drift `a`, cost
/// `cost_scale a^2 / 2`, volatility `volatility`. The sensitivity inducing
/// effort `a` is `cost_scale a / volatility`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticResponse {
    pub actions: Interval,
    pub cost_scale: f64,
    pub volatility: f64,
}

impl QuadraticResponse {
    pub fn unit(actions: Interval) -> Self {
        QuadraticResponse { actions, cost_scale: 1.0, volatility: 1.0 }
    }

    pub fn from_model(model: &ModelPrimitives) -> Result<Self> {
        let cf = model.closed_form.ok_or_else(|| {
            Error::Domain(format!("model {} registers no effort cost and inverse response", model.name))
        })?;
        Ok(QuadraticResponse {
            actions: model.effort.drift_actions,
            cost_scale: cf.cost_scale,
            volatility: cf.volatility,
        })
    }

    pub fn cost(&self, a: f64) -> f64 {
        0.5 * self.cost_scale * a * a
    }

    pub fn sensitivity(&self, a: f64) -> f64 {
        self.cost_scale * a / self.volatility
    }

    /// `sigma a + h(a) p + (sigma gamma(a))^2 q / 2`.
    pub fn objective(&self, a: f64, p: f64, q: f64) -> f64 {
        let k = self.cost_scale;
        self.volatility * a + 0.5 * k * a * a * p + 0.5 * k * k * a * a * q
    }

    fn curvature(&self, p: f64, q: f64) -> f64 {
        self.cost_scale * p + self.cost_scale * self.cost_scale * q
    }

    /// Maximizer with the action set truncated to `[-cap, cap]`.
    pub fn argmax(&self, p: f64, q: f64, cap: f64) -> f64 {
        let lo = self.actions.lo.max(-cap);
        let hi = self.actions.hi.min(cap);
        let c = self.curvature(p, q);
        if c < 0.0 {
            (-self.volatility / c).clamp(lo, hi)
        } else if self.objective(hi, p, q) > self.objective(lo, p, q) {
            hi
        } else {
            lo
        }
    }

    pub fn argmax_exact(&self, p: f64, q: f64) -> Result<f64> {
        let c = self.curvature(p, q);
        let unbounded = if c > 0.0 {
            !self.actions.is_bounded()
        } else if c == 0.0 {
            self.actions.hi.is_infinite()
        } else {
            false
        };
        if unbounded {
            return Err(Error::Unbounded(format!("effort supremum is infinite for p = {p}, q = {q}")));
        }
        Ok(self.argmax(p, q, f64::INFINITY))
    }
}

/// `J(p, q) = sup_a { a + h(a) p + gamma(a)^2 q / 2 }`.
pub fn inner_effort_sup(p: f64, q: f64, model: &ModelPrimitives) -> Result<f64> {
    let r = QuadraticResponse::from_model(model)?;
    let a = r.argmax_exact(p, q)?;
    Ok(r.objective(a, p, q))
}
