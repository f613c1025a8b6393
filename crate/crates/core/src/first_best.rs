//! First-best contracting by Lagrangian duality in the deterministic-horizon
//! case: convex conjugate of the principal's utility, the functionals
//! `J^F_tau(lambda)` and `sup E[h_tau]`, the multiplier `lambda_hat` and a
//! Monte Carlo check that the second-best contract attains the first best.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::contract::{EffortPolicy, RevealingContract, Termination};
use crate::error::{Error, Result};
use crate::mc::{agent_value_mc, principal_value_mc};
use crate::mc::{evaluate_best_response, BestResponseReport, Deviation, Estimate, SimulationConfig, BAND};
use crate::model::{
    maximize, CoefficientBounds, EffortDomain, HamiltonianQuery, Interval, Liquidation, ModelPrimitives,
    QuadraticClosedForm, Utility,
};
use crate::numeric::{bisect_newton, interp_uniform, simpson_try};
use crate::report::format_float;

pub type TimeMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A deterministic discount factor `K(t)` with its rate `-K'/K`.
#[derive(Clone)]
pub enum DiscountCurve {
    Exponential { rate: f64 },
    Custom { factor: TimeMap, rate: TimeMap },
}

impl fmt::Debug for DiscountCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscountCurve::Exponential { rate } => write!(f, "Exponential({rate})"),
            DiscountCurve::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl DiscountCurve {
    pub fn factor(&self, t: f64) -> f64 {
        match self {
            DiscountCurve::Exponential { rate } => (-rate * t).exp(),
            DiscountCurve::Custom { factor, .. } => factor(t),
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            DiscountCurve::Exponential { rate } => *rate,
            DiscountCurve::Custom { rate, .. } => rate(t),
        }
    }

    pub fn constant_rate(&self) -> Option<f64> {
        match self {
            DiscountCurve::Exponential { rate } => Some(*rate),
            DiscountCurve::Custom { .. } => None,
        }
    }
}

#[derive(Clone)]
pub enum CostFunction {
    /// `scale * a^2 / 2`.
    Quadratic {
        scale: f64,
    },
    Custom(TimeMap),
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::Quadratic { scale } => write!(f, "Quadratic({scale})"),
            CostFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl CostFunction {
    pub fn value(&self, a: f64) -> f64 {
        match self {
            CostFunction::Quadratic { scale } => 0.5 * scale * a * a,
            CostFunction::Custom(c) => c(a),
        }
    }
}

/// First-best problem of a risk-neutral agent with output drift equal to
/// effort, unit volatility and liquidation value `X_T`.
#[derive(Debug, Clone)]
pub struct FirstBestProblem {
    pub horizon: f64,
    pub agent_discount: DiscountCurve,
    pub principal_discount: DiscountCurve,
    pub principal_utility: Utility,
    pub cost: CostFunction,
    pub effort: Interval,
    pub participation: f64,
    pub x0: f64,
    /// Initial upper end of the multiplier bracket.
    pub lambda_max: f64,
    /// Simpson panels of every time integral.
    pub panels: usize,
}

pub const MIN_PANELS: usize = 200;
pub const LAMBDA_MIN: f64 = 1e-8;
const LAMBDA_CEILING: f64 = 1e12;

impl FirstBestProblem {
    /// `U_P(x) = -exp(-x)`, `c(a) = a^2/2`, no discounting, `T = 1`, `X_0 = 0`.
    pub fn canonical(participation: f64) -> Result<Self> {
        Self::from_model(&ModelPrimitives::first_best_canonical(participation)?, 1.0, 0.0)
    }

    /// Reads a quadratic-cost model with constant discount rates.
    pub fn from_model(model: &ModelPrimitives, horizon: f64, x0: f64) -> Result<Self> {
        let cf =
            model.closed_form.ok_or_else(|| Error::Domain("first-best problem needs a quadratic-cost model".into()))?;
        if !matches!(model.agent_utility, Utility::Identity) {
            return Err(Error::Domain("first-best problem needs a risk-neutral agent".into()));
        }
        if (cf.volatility - 1.0).abs() > 0.0 {
            return Err(Error::Domain(format!("first-best problem needs unit volatility, got {}", cf.volatility)));
        }
        let p = FirstBestProblem {
            horizon,
            agent_discount: DiscountCurve::Exponential { rate: cf.agent_rate },
            principal_discount: DiscountCurve::Exponential { rate: (model.principal_discount_rate)(0.0, 0.0) },
            principal_utility: model.principal_utility.clone(),
            cost: CostFunction::Quadratic { scale: cf.cost_scale },
            effort: model.effort.drift_actions,
            participation: model.participation,
            x0,
            lambda_max: 1e3,
            panels: MIN_PANELS,
        };
        p.validate()?;
        Ok(p)
    }

    /// `eta_t = K_t / K^P_t`.
    pub fn eta(&self, t: f64) -> f64 {
        self.agent_discount.factor(t) / self.principal_discount.factor(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.panels < MIN_PANELS {
            return Err(Error::Grid(format!("need at least {MIN_PANELS} panels, got {}", self.panels)));
        }
        if !(self.lambda_max > LAMBDA_MIN) {
            return Err(Error::Domain(format!("lambda_max must exceed {LAMBDA_MIN}, got {}", self.lambda_max)));
        }
        let mut last = f64::INFINITY;
        for i in 0..=40 {
            let x = -5.0 + 0.25 * i as f64;
            let m = self.principal_utility.derivative(x);
            if !(m > 0.0) || !(m < last) {
                return Err(Error::Invariant(format!(
                    "principal marginal utility must be positive and strictly decreasing; U'({x}) = {m}"
                )));
            }
            last = m;
        }
        for i in 0..=self.panels {
            let t = self.horizon * i as f64 / self.panels as f64;
            let (k, kp) = (self.agent_discount.factor(t), self.principal_discount.factor(t));
            if !(k > 0.0 && kp > 0.0) {
                return Err(Error::Invariant(format!("discount factors must be positive at t = {t}")));
            }
            if (self.eta(t) * kp - k).abs() > 1e-12 * k.max(1.0) {
                return Err(Error::Invariant(format!("eta K^P differs from K at t = {t}")));
            }
        }
        Ok(())
    }

    /// The output model seen by the agent, with `B = {0}` and `sigma = 1`.
    pub fn model(&self) -> Result<ModelPrimitives> {
        let closed_form = match (&self.cost, self.agent_discount.constant_rate()) {
            (CostFunction::Quadratic { scale }, Some(rate)) => {
                Some(QuadraticClosedForm { cost_scale: *scale, volatility: 1.0, agent_rate: rate })
            }
            _ => None,
        };
        let cost = self.cost.clone();
        let k = self.agent_discount.clone();
        let kp = self.principal_discount.clone();
        let drift_bound = self.effort.lo.abs().max(self.effort.hi.abs());
        Ok(ModelPrimitives {
            name: "first_best".into(),
            effort: EffortDomain::new(self.effort, Interval::point(0.0), 201)?,
            drift: Arc::new(|_, _, a| a),
            vol: Arc::new(|_, _, _| 1.0),
            cost: Arc::new(move |_, _, a, _| cost.value(a)),
            discount_rate: Arc::new(move |t, _, _, _| k.rate(t)),
            agent_utility: Utility::Identity,
            principal_utility: self.principal_utility.clone(),
            principal_discount_rate: Arc::new(move |t, _| kp.rate(t)),
            liquidation: Liquidation::Terminal(Arc::new(|x| x)),
            retirement_level: None,
            participation: self.participation,
            bounds: CoefficientBounds { drift: drift_bound, vol: 1.0, rate: self.agent_discount.rate(0.0).abs() },
            closed_form,
        })
    }

    fn time_nodes(&self, tau: f64) -> Vec<f64> {
        (0..=self.panels).map(|i| tau * i as f64 / self.panels as f64).collect()
    }
}

/// `(U')^{-1}(y)`, by bisection on `U'` when no closed form is known.
pub fn inverse_marginal(u: &Utility, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Range(format!("marginal utility {y} must be positive")));
    }
    if let Some(x) = u.derivative_inverse(y) {
        return x;
    }
    let g = |x: f64| u.derivative(x) - y;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) < 0.0 || g(hi) > 0.0 {
        lo *= 2.0;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Range(format!("{y} outside the range of {u:?}'")));
        }
    }
    bisect_newton(|x| -g(x), lo, hi, 1e-14)
}

/// `U*(y) = U((U')^{-1}(y)) - y (U')^{-1}(y)`.
pub fn conjugate(u: &Utility, y: f64) -> Result<f64> {
    let x = inverse_marginal(u, y)?;
    Ok(u.value(x) - y * x)
}

/// `U((U')^{-1}(y))`.
pub fn utility_at_marginal(u: &Utility, y: f64) -> Result<f64> {
    Ok(u.value(inverse_marginal(u, y)?))
}

/// `J^F_tau(lambda) = K^P_tau F(lambda eta_tau) + int_0^tau K^P_t F(lambda eta_t) dt`.
pub fn j_functional<F>(problem: &FirstBestProblem, f: F, lambda: f64, tau: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(tau > 0.0 && tau <= problem.horizon * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("tau = {tau} must lie in (0, {}]", problem.horizon)));
    }
    let kp = |t: f64| problem.principal_discount.factor(t);
    let running = simpson_try(|t| Ok(kp(t) * f(lambda * problem.eta(t))?), 0.0, tau, problem.panels.max(MIN_PANELS))?;
    Ok(kp(tau) * f(lambda * problem.eta(tau))? + running)
}

/// Effort maximizing `K_tau a - K_t c(a)` at time `t`, with the maximal value.
fn pointwise_effort(model: &ModelPrimitives, problem: &FirstBestProblem, t: f64, tau: f64) -> Result<(f64, f64)> {
    let k_t = problem.agent_discount.factor(t);
    let q = HamiltonianQuery::at(0.0, problem.agent_discount.factor(tau) / k_t);
    let (e, h) = maximize(model, &q)?;
    Ok((e.drift, k_t * h))
}

/// `sup E[K_tau X_tau - int_0^tau K_t c(a_t) dt - R]` over deterministic effort.
pub fn h_functional_sup(problem: &FirstBestProblem, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= problem.horizon * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("tau = {tau} must lie in (0, {}]", problem.horizon)));
    }
    let model = problem.model()?;
    let running = simpson_try(|t| Ok(pointwise_effort(&model, problem, t, tau)?.1), 0.0, tau, problem.panels)?;
    Ok(problem.agent_discount.factor(tau) * problem.x0 + running - problem.participation)
}

/// `v_fb(lambda) = J^{U*}_T(lambda) + lambda sup E[h_T]`.
pub fn dual_value(problem: &FirstBestProblem, lambda: f64) -> Result<f64> {
    let u = &problem.principal_utility;
    Ok(j_functional(problem, |y| conjugate(u, y), lambda, problem.horizon)?
        + lambda * h_functional_sup(problem, problem.horizon)?)
}

/// `G(lambda) = J^{U*}_T - J^{U o (U')^-1}_T + lambda sup E[h_T]`; its root is `lambda_hat`.
pub fn multiplier_equation(problem: &FirstBestProblem, lambda: f64) -> Result<f64> {
    let u = &problem.principal_utility;
    let t = problem.horizon;
    let h = h_functional_sup(problem, t)?;
    Ok(j_functional(problem, |y| conjugate(u, y), lambda, t)?
        - j_functional(problem, |y| utility_at_marginal(u, y), lambda, t)?
        + lambda * h)
}

/// The first-best multiplier, value and contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianSolution {
    pub lambda_hat: f64,
    /// `J^{U o (U')^-1}_T(lambda_hat)`.
    pub v_fb: f64,
    /// `v_fb(lambda_hat)` from the dual formula.
    pub dual_value: f64,
    /// Slope of `G` at the root by central differences.
    pub g_slope: f64,
    pub horizon: f64,
    /// `(U_P')^{-1}(lambda_hat eta_T)`, kept by the principal at maturity.
    pub terminal_retention: f64,
    pub times: Vec<f64>,
    /// `pi_t = -(U_P')^{-1}(lambda_hat eta_t)` on `times`.
    pub payments: Vec<f64>,
    pub efforts: Vec<f64>,
}

impl LagrangianSolution {
    /// `xi = l - (U_P')^{-1}(lambda_hat eta_T)`.
    pub fn xi(&self, liquidation: f64) -> f64 {
        liquidation - self.terminal_retention
    }

    fn step(&self) -> f64 {
        self.horizon / (self.times.len() - 1) as f64
    }

    pub fn payment(&self, t: f64) -> f64 {
        interp_uniform(&self.payments, 0.0, self.step(), t)
    }

    pub fn effort(&self, t: f64) -> f64 {
        interp_uniform(&self.efforts, 0.0, self.step(), t)
    }

    /// Writes `t, payment, effort` on the solution's time grid.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "payment", "effort"])?;
        for ((&t, &p), &a) in self.times.iter().zip(&self.payments).zip(&self.efforts) {
            w.write_record([format_float(t), format_float(p), format_float(a)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn solve_lambda_hat(problem: &FirstBestProblem) -> Result<LagrangianSolution> {
    problem.validate()?;
    let g = |l: f64| multiplier_equation(problem, l);
    let mut hi = problem.lambda_max;
    let g_lo = g(LAMBDA_MIN)?;
    let mut g_hi = g(hi)?;
    while g_lo.signum() == g_hi.signum() && hi < LAMBDA_CEILING {
        hi *= 10.0;
        g_hi = g(hi)?;
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::RootBracket { lo: LAMBDA_MIN, hi, g_lo, g_hi });
    }
    let mut failure = None;
    let lambda_hat = bisect_newton(
        |l| {
            g(l).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        LAMBDA_MIN,
        hi,
        1e-14,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let u = &problem.principal_utility;
    let t_end = problem.horizon;
    let v_fb = j_functional(problem, |y| utility_at_marginal(u, y), lambda_hat, t_end)?;
    let dual = dual_value(problem, lambda_hat)?;
    if (v_fb - dual).abs() > 1e-8 * (1.0 + v_fb.abs()) {
        return Err(Error::Invariant(format!("first-best value {v_fb} differs from the dual value {dual}")));
    }
    let d = 1e-6 * lambda_hat;
    let g_slope = (g(lambda_hat + d)? - g(lambda_hat - d)?) / (2.0 * d);
    let model = problem.model()?;
    let times = problem.time_nodes(t_end);
    let payments =
        times.iter().map(|&t| Ok(-inverse_marginal(u, lambda_hat * problem.eta(t))?)).collect::<Result<Vec<_>>>()?;
    let efforts =
        times.iter().map(|&t| Ok(pointwise_effort(&model, problem, t, t_end)?.0)).collect::<Result<Vec<_>>>()?;
    Ok(LagrangianSolution {
        lambda_hat,
        v_fb,
        dual_value: dual,
        g_slope,
        horizon: t_end,
        terminal_retention: inverse_marginal(u, lambda_hat * problem.eta(t_end))?,
        times,
        payments,
        efforts,
    })
}

/// Monte Carlo comparison of the second-best contract `(T, pi, xi)` with
/// the first best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    /// Initial promised value of the revealing representation of `(pi, xi)`.
    pub promised_value: f64,
    pub participation: f64,
    pub agent: Estimate,
    pub principal: Estimate,
    pub v_fb: f64,
    pub agent_at_participation: bool,
    pub principal_at_first_best: bool,
    /// Largest gap between the maximizer and the first-best effort.
    pub max_effort_gap: f64,
    pub best_response: BestResponseReport,
    pub zero_effort_loses: bool,
    pub passed: bool,
}

/// Writes `(pi, xi)` as a revealing contract with `Z_t = K_T / K_t`.
pub fn second_best_contract(
    problem: &FirstBestProblem,
    sol: &LagrangianSolution,
) -> Result<(ModelPrimitives, RevealingContract)> {
    let t_end = problem.horizon;
    let k_end = problem.agent_discount.factor(t_end);
    let mut model = problem.model()?;
    let running = simpson_try(
        |t| {
            let a = sol.effort(t);
            Ok(k_end * a + problem.agent_discount.factor(t) * (sol.payment(t) - problem.cost.value(a)))
        },
        0.0,
        t_end,
        problem.panels,
    )?;
    let y0 = k_end * (problem.x0 - sol.terminal_retention) + running;
    model.participation = problem.participation.min(y0);
    let k = problem.agent_discount.clone();
    let z: crate::contract::FeedbackMap = Arc::new(move |t, _, _| k_end / k.factor(t));
    let pay_sol = sol.clone();
    let contract = RevealingContract::new(&model, y0, z, Termination::Fixed { horizon: t_end })?
        .with_payment(Arc::new(move |t, _, _| pay_sol.payment(t)));
    Ok((model, contract))
}

pub fn evaluate_equality(
    problem: &FirstBestProblem,
    sol: &LagrangianSolution,
    cfg: &SimulationConfig,
) -> Result<EqualityReport> {
    let (model, contract) = second_best_contract(problem, sol)?;
    let mut cfg = cfg.clone();
    cfg.x0 = problem.x0;
    cfg.t_cap = cfg.t_cap.max(problem.horizon);
    let agent = agent_value_mc(&model, &contract, &EffortPolicy::Maximizer, &cfg)?;
    let principal = principal_value_mc(&model, &contract, &cfg)?;
    let mut max_effort_gap: f64 = 0.0;
    for (&t, &a_fb) in sol.times.iter().zip(&sol.efforts) {
        let (e, _) = maximize(&model, &contract.query(t, problem.x0, contract.y0))?;
        max_effort_gap = max_effort_gap.max((e.drift - a_fb).abs());
    }
    let a0 = sol.efforts[0];
    let deviations: Vec<Deviation> = [0.0, a0 - 0.5, a0 + 0.5]
        .iter()
        .filter(|a| problem.effort.contains(**a))
        .map(|&a| Deviation::new(format!("constant {a}"), EffortPolicy::constant_drift(&model, a)))
        .collect();
    let best_response = evaluate_best_response(&model, &contract, &cfg, &deviations)?;
    let zero_effort_loses =
        best_response.deviations.iter().find(|d| d.label == "constant 0").is_none_or(|d| d.strictly_loses());
    let agent_at_participation = agent.within(problem.participation, BAND);
    let principal_at_first_best = principal.within(sol.v_fb, BAND);
    let passed = agent_at_participation
        && principal_at_first_best
        && best_response.passed
        && zero_effort_loses
        && max_effort_gap < 1e-6;
    Ok(EqualityReport {
        promised_value: contract.y0,
        participation: problem.participation,
        agent,
        principal,
        v_fb: sol.v_fb,
        agent_at_participation,
        principal_at_first_best,
        max_effort_gap,
        best_response,
        zero_effort_loses,
        passed,
    })
}

/// Fails with an audit error listing every check that did not hold.
pub fn second_best_equality_check(
    problem: &FirstBestProblem,
    sol: &LagrangianSolution,
    cfg: &SimulationConfig,
) -> Result<EqualityReport> {
    let r = evaluate_equality(problem, sol, cfg)?;
    if !r.passed {
        let mut failed = Vec::new();
        if !r.agent_at_participation {
            failed.push(format!(
                "agent value {:e} +- {:e} != R = {}",
                r.agent.estimate, r.agent.std_error, r.participation
            ));
        }
        if !r.principal_at_first_best {
            failed.push(format!(
                "principal value {:e} +- {:e} != v_fb = {:e}",
                r.principal.estimate, r.principal.std_error, r.v_fb
            ));
        }
        if !r.best_response.passed {
            failed.push("a deviation beats the first-best effort".into());
        }
        if !r.zero_effort_loses {
            failed.push("zero effort does not lose value".into());
        }
        if r.max_effort_gap >= 1e-6 {
            failed.push(format!("maximizer differs from first-best effort by {:e}", r.max_effort_gap));
        }
        return Err(Error::Audit(format!("second_best_equality: {}", failed.join("; "))));
    }
    Ok(r)
}
