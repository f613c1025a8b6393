//! Finite-difference solver for obstacle problems
//! `min{v - v0, r v - k y v' + I(v') - J(v', v'')} = 0` on a uniform grid,
//! by policy iteration over the controls and the stop/continue indicator.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::reduced::{payment_minimizer, QuadraticResponse};
use crate::error::{Error, Result};
use crate::model::{ModelPrimitives, Utility};
use crate::numeric::solve_tridiagonal;

pub type Obstacle = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet(f64),
    /// `value_weight v + slope_weight v' = target`, with the equation
    /// imposed at the boundary node through a ghost point.
    Robin {
        value_weight: f64,
        slope_weight: f64,
        target: f64,
    },
    /// `v'' = 0`: the boundary value is extrapolated from its two neighbours.
    LinearExtrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Policy iteration on the stop indicator with a tridiagonal solve.
    Direct,
    /// Projected successive over-relaxation for each control update.
    Psor { omega: f64, tolerance: f64, max_iterations: usize },
}

impl InnerSolver {
    pub fn psor() -> Self {
        InnerSolver::Psor { omega: 1.5, tolerance: 1e-9, max_iterations: 100_000 }
    }
}

#[derive(Clone)]
pub struct ObstacleGridProblem {
    pub y_min: f64,
    pub y_max: f64,
    pub points: usize,
    pub rate: f64,
    /// Coefficient `k` in the transport term `-k y v'`.
    pub state_drift_rate: f64,
    pub obstacle: Option<Obstacle>,
    /// Utility of running payments; `None` disables the payment channel.
    pub payment: Option<Utility>,
    pub effort: QuadraticResponse,
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub solver: InnerSolver,
    /// Truncation of unbounded action sets.
    pub control_cap: f64,
    /// Lower bound on the Howard iteration cap; the cap is never below
    /// the node count since the stop set may move one node per sweep.
    pub max_policy_iterations: usize,
    pub policy_tolerance: f64,
}

impl fmt::Debug for ObstacleGridProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObstacleGridProblem")
            .field("y_min", &self.y_min)
            .field("y_max", &self.y_max)
            .field("points", &self.points)
            .field("rate", &self.rate)
            .field("state_drift_rate", &self.state_drift_rate)
            .field("has_obstacle", &self.obstacle.is_some())
            .field("payment", &self.payment)
            .field("effort", &self.effort)
            .field("left", &self.left)
            .field("right", &self.right)
            .field("solver", &self.solver)
            .finish()
    }
}

impl ObstacleGridProblem {
    fn base(model: &ModelPrimitives, y_max: f64, points: usize) -> Result<Self> {
        let cf = model.closed_form.ok_or_else(|| Error::Domain("grid solver needs a quadratic-cost model".into()))?;
        let rate = (model.principal_discount_rate)(0.0, 0.0);
        Ok(ObstacleGridProblem {
            y_min: 0.0,
            y_max,
            points,
            rate,
            state_drift_rate: cf.agent_rate,
            obstacle: None,
            payment: Some(model.agent_utility.clone()),
            effort: QuadraticResponse::from_model(model)?,
            left: BoundaryCondition::Dirichlet(0.0),
            right: BoundaryCondition::LinearExtrapolation,
            solver: InnerSolver::Direct,
            control_cap: 1e3,
            max_policy_iterations: 500,
            policy_tolerance: 1e-12,
        })
    }

    /// European contract: the principal may stop and pay `U^-1(y)`.
    pub fn sannikov_european(model: &ModelPrimitives, y_max: f64, points: usize) -> Result<Self> {
        let mut p = Self::base(model, y_max, points)?;
        let u = model.agent_utility.clone();
        let obstacle: Obstacle = Arc::new(move |y| -u.inverse(y).unwrap_or(f64::NAN));
        p.right = BoundaryCondition::Dirichlet(obstacle(y_max));
        p.obstacle = Some(obstacle);
        Ok(p)
    }

    /// American contract: no stopping option for the principal; the agent
    /// is retired at `y_max` with value `-U^-1(y_max)`.
    pub fn sannikov_american(model: &ModelPrimitives, y_max: f64, points: usize) -> Result<Self> {
        let mut p = Self::base(model, y_max, points)?;
        p.right = BoundaryCondition::Dirichlet(-model.agent_utility.inverse(y_max)?);
        Ok(p)
    }

    /// Risk-neutral quadratic example on `[y_min, y_max]`: obstacle `-y`,
    /// no payments, no transport term, principal discount `beta`.
    pub fn euro_quadratic(beta: f64, y_min: f64, y_max: f64, points: usize, right: BoundaryCondition) -> Result<Self> {
        let model = ModelPrimitives::euro_quadratic(beta, f64::NEG_INFINITY)?;
        let mut p = Self::base(&model, y_max, points)?;
        p.y_min = y_min;
        p.state_drift_rate = 0.0;
        p.payment = None;
        p.obstacle = Some(Arc::new(|y| -y));
        p.left = BoundaryCondition::Dirichlet(-y_min);
        p.right = right;
        Ok(p)
    }

    pub fn step(&self) -> f64 {
        (self.y_max - self.y_min) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.y_min + i as f64 * h).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < MIN_POINTS {
            return Err(Error::Grid(format!("grid needs at least 200 points, got {}", self.points)));
        }
        if !(self.y_max > self.y_min) {
            return Err(Error::Grid(format!("empty grid [{}, {}]", self.y_min, self.y_max)));
        }
        if !(self.rate > 0.0) {
            return Err(Error::Domain(format!("rate must be positive, got {}", self.rate)));
        }
        if let Some(o) = &self.obstacle {
            for y in self.nodes() {
                let v = o(y);
                if !v.is_finite() {
                    return Err(Error::Grid(format!("obstacle is {v} at y = {y}")));
                }
            }
        }
        for bc in [self.left, self.right] {
            if let BoundaryCondition::Robin { slope_weight, .. } = bc {
                if slope_weight == 0.0 {
                    return Err(Error::Domain("Robin condition needs a nonzero slope weight".into()));
                }
            }
        }
        Ok(())
    }
}

/// Nodal solution of an obstacle grid problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub v_prime: Vec<f64>,
    pub v_second: Vec<f64>,
    /// Optimal effort.
    pub effort: Vec<f64>,
    /// Sensitivity inducing that effort.
    pub z_hat: Vec<f64>,
    pub payment: Vec<f64>,
    pub stop: Vec<bool>,
    /// `min{v - v0, PDE residual}` (or the PDE residual alone without an
    /// obstacle) at interior nodes; zero at boundary nodes.
    pub residual: Vec<f64>,
    pub max_residual: f64,
    pub iterations: usize,
}

impl GridSolution {
    /// Piecewise-linear interpolation of `v`.
    pub fn value_at(&self, y: f64) -> f64 {
        crate::numeric::interp_uniform(&self.v, self.y[0], self.y[1] - self.y[0], y)
    }
}

struct Row {
    lower: f64,
    diag: f64,
    upper: f64,
    rhs: f64,
}

struct Controls {
    effort: Vec<f64>,
    payment: Vec<f64>,
}

fn derivatives(v: &[f64], h: f64, p: &ObstacleGridProblem) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        d2[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
    }
    let robin_end = |bc: BoundaryCondition, idx: usize, inner: usize, outward: f64| match bc {
        BoundaryCondition::Robin { value_weight, slope_weight, target } => {
            let slope = (target - value_weight * v[idx]) / slope_weight;
            let ghost = v[inner] + outward * 2.0 * h * slope;
            (slope, (ghost - 2.0 * v[idx] + v[inner]) / (h * h))
        }
        _ => {
            let slope = outward * (v[idx] - v[inner]) / h;
            (slope, if outward > 0.0 { d2[n - 2] } else { d2[1] })
        }
    };
    let (l1, l2) = robin_end(p.left, 0, 1, -1.0);
    let (r1, r2) = robin_end(p.right, n - 1, n - 2, 1.0);
    d1[0] = l1;
    d2[0] = l2;
    d1[n - 1] = r1;
    d2[n - 1] = r2;
    (d1, d2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scheme {
    Central,
    Forward,
    Backward,
}

/// Neighbour values of node `i`, with ghost nodes at Robin boundaries.
fn neighbours(p: &ObstacleGridProblem, v: &[f64], i: usize, h: f64) -> (f64, f64) {
    let n = v.len();
    let ghost = |bc: BoundaryCondition, idx: usize, inner: usize, outward: f64| match bc {
        BoundaryCondition::Robin { value_weight, slope_weight, target } => {
            v[inner] + outward * 2.0 * h * (target - value_weight * v[idx]) / slope_weight
        }
        _ => 2.0 * v[idx] - v[inner],
    };
    let left = if i == 0 { ghost(p.left, 0, 1, -1.0) } else { v[i - 1] };
    let right = if i == n - 1 { ghost(p.right, n - 1, n - 2, 1.0) } else { v[i + 1] };
    (left, right)
}

fn transport(p: &ObstacleGridProblem, y: f64, a: f64) -> f64 {
    p.state_drift_rate * y + p.effort.cost(a)
}

fn diffusion(p: &ObstacleGridProblem, a: f64) -> f64 {
    let s = p.effort.sensitivity(a) * p.effort.volatility;
    0.5 * s * s
}

fn effort_scheme(p: &ObstacleGridProblem, y: f64, a: f64, h: f64) -> Scheme {
    let t = transport(p, y, a);
    if t.abs() <= 2.0 * diffusion(p, a) / h {
        Scheme::Central
    } else if t > 0.0 {
        Scheme::Forward
    } else {
        Scheme::Backward
    }
}

/// Controls maximizing the discrete operator at node `i`: the payment
/// against the backward slope, the effort against the slope of the scheme
/// each candidate effort would use. An incumbent effort is kept unless a
/// candidate strictly improves on it.
fn node_controls(
    p: &ObstacleGridProblem,
    y: f64,
    h: f64,
    (vm, v0, vp): (f64, f64, f64),
    incumbent: Option<f64>,
) -> Result<(f64, f64)> {
    let slopes = [(vp - vm) / (2.0 * h), (vp - v0) / h, (v0 - vm) / h];
    let second = (vp - 2.0 * v0 + vm) / (h * h);
    let payment = match &p.payment {
        Some(u) => payment_minimizer(slopes[2], u)?,
        None => 0.0,
    };
    let r = &p.effort;
    let lo = r.actions.lo.max(-p.control_cap);
    let hi = r.actions.hi.min(p.control_cap);
    let k = r.cost_scale;
    let mut candidates = vec![lo, hi];
    for &d in &slopes {
        let curv = k * d + k * k * second;
        if curv < 0.0 {
            candidates.push((-r.volatility / curv).clamp(lo, hi));
        }
    }
    let drift = p.state_drift_rate * y;
    for sign in [1.0, -1.0] {
        let denom = sign * k * k / h - 0.5 * k;
        if denom != 0.0 && drift / denom > 0.0 {
            let a = (drift / denom).sqrt();
            for c in [a, -a] {
                if c >= lo && c <= hi {
                    candidates.push(c);
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.total_cmp(b));
    let objective = |a: f64| {
        let d = match effort_scheme(p, y, a, h) {
            Scheme::Central => slopes[0],
            Scheme::Forward => slopes[1],
            Scheme::Backward => slopes[2],
        };
        r.volatility * a + transport(p, y, a) * d + diffusion(p, a) * second
    };
    let mut best = match incumbent {
        Some(a) => (a, objective(a)),
        None => (lo, f64::NEG_INFINITY),
    };
    let margin = 1e-13 * (1.0 + best.1.abs());
    for a in candidates {
        let value = objective(a);
        if value > best.1 + if incumbent.is_some() { margin } else { 0.0 } {
            best = (a, value);
        }
    }
    Ok((best.0, payment))
}

fn controls(p: &ObstacleGridProblem, ys: &[f64], v: &[f64], incumbent: Option<&[f64]>) -> Result<Controls> {
    let h = p.step();
    let n = v.len();
    let mut effort = Vec::with_capacity(n);
    let mut payment = Vec::with_capacity(n);
    for i in 0..n {
        let (vm, vp) = neighbours(p, v, i, h);
        let (a, pi) = node_controls(p, ys[i], h, (vm, v[i], vp), incumbent.map(|e| e[i]))?;
        effort.push(a);
        payment.push(pi);
    }
    Ok(Controls { effort, payment })
}

/// Continuation row `r v - (k y + h(a)) v' + U(pi) v' - d v'' = a - pi` at
/// one node for fixed controls.
fn continuation_row(p: &ObstacleGridProblem, y: f64, h: f64, a: f64, pi: f64) -> Row {
    let diff = diffusion(p, a) / (h * h);
    let mut row = Row { lower: -diff, diag: p.rate + 2.0 * diff, upper: -diff, rhs: p.effort.volatility * a - pi };
    let t = transport(p, y, a);
    match effort_scheme(p, y, a, h) {
        Scheme::Central => {
            row.lower += t / (2.0 * h);
            row.upper -= t / (2.0 * h);
        }
        Scheme::Forward => {
            row.diag += t / h;
            row.upper -= t / h;
        }
        Scheme::Backward => {
            row.diag -= t / h;
            row.lower += t / h;
        }
    }
    if let Some(u) = &p.payment {
        let pay = u.value(pi);
        if pay >= 0.0 {
            row.diag += pay / h;
            row.lower -= pay / h;
        } else {
            row.diag -= pay / h;
            row.upper += pay / h;
        }
    }
    row
}

/// Folds ghost nodes of Robin conditions into the boundary rows.
fn robin_fold(row: &mut Row, bc: BoundaryCondition, h: f64, at_left: bool) {
    if let BoundaryCondition::Robin { value_weight, slope_weight, target } = bc {
        let sign = if at_left { -1.0 } else { 1.0 };
        let ghost_coef = if at_left { row.lower } else { row.upper };
        // ghost = inner + sign * 2h (target - value_weight v) / slope_weight
        let k = sign * 2.0 * h / slope_weight;
        row.diag -= ghost_coef * k * value_weight;
        row.rhs -= ghost_coef * k * target;
        if at_left {
            row.upper += row.lower;
            row.lower = 0.0;
        } else {
            row.lower += row.upper;
            row.upper = 0.0;
        }
    }
}

fn assemble(p: &ObstacleGridProblem, ys: &[f64], c: &Controls, stop: &[bool], obstacle: &[f64]) -> Vec<Row> {
    let n = ys.len();
    let h = p.step();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let boundary = if i == 0 {
            Some(p.left)
        } else if i == n - 1 {
            Some(p.right)
        } else {
            None
        };
        let row = match boundary {
            Some(BoundaryCondition::Dirichlet(val)) => Row { lower: 0.0, diag: 1.0, upper: 0.0, rhs: val },
            Some(BoundaryCondition::LinearExtrapolation) => {
                Row { lower: f64::NAN, diag: f64::NAN, upper: f64::NAN, rhs: f64::NAN }
            }
            _ if stop[i] => Row { lower: 0.0, diag: 1.0, upper: 0.0, rhs: obstacle[i] },
            Some(bc) => {
                let mut r = continuation_row(p, ys[i], h, c.effort[i], c.payment[i]);
                robin_fold(&mut r, bc, h, i == 0);
                r
            }
            None => continuation_row(p, ys[i], h, c.effort[i], c.payment[i]),
        };
        rows.push(row);
    }
    rows
}

/// Residual `row . v - rhs` with the controls re-optimized at `v`.
fn continuation_residuals(
    p: &ObstacleGridProblem,
    ys: &[f64],
    v: &[f64],
    incumbent: Option<&[f64]>,
) -> Result<(Vec<f64>, Controls)> {
    let c = controls(p, ys, v, incumbent)?;
    let n = ys.len();
    let mut out = vec![0.0; n];
    let no_stop = vec![false; n];
    let rows = assemble(p, ys, &c, &no_stop, &vec![0.0; n]);
    for i in 0..n {
        let r = &rows[i];
        if r.diag.is_nan() {
            continue;
        }
        let left = if i > 0 { r.lower * v[i - 1] } else { 0.0 };
        let right = if i + 1 < n { r.upper * v[i + 1] } else { 0.0 };
        out[i] = left + r.diag * v[i] + right - r.rhs;
    }
    Ok((out, c))
}

/// Replaces linear-extrapolation boundary rows by elimination into their
/// neighbours and returns the index range of the reduced system.
fn eliminate_extrapolation(p: &ObstacleGridProblem, rows: &mut [Row]) -> (usize, usize) {
    let n = rows.len();
    let mut lo = 0;
    let mut hi = n;
    if p.left == BoundaryCondition::LinearExtrapolation {
        let r = &mut rows[1];
        r.diag += 2.0 * r.lower;
        r.upper -= r.lower;
        r.lower = 0.0;
        lo = 1;
    }
    if p.right == BoundaryCondition::LinearExtrapolation {
        let r = &mut rows[n - 2];
        r.diag += 2.0 * r.upper;
        r.lower -= r.upper;
        r.upper = 0.0;
        hi = n - 1;
    }
    (lo, hi)
}

fn restore_extrapolation(p: &ObstacleGridProblem, v: &mut [f64]) {
    let n = v.len();
    if p.left == BoundaryCondition::LinearExtrapolation {
        v[0] = 2.0 * v[1] - v[2];
    }
    if p.right == BoundaryCondition::LinearExtrapolation {
        v[n - 1] = 2.0 * v[n - 2] - v[n - 3];
    }
}

fn direct_solve(p: &ObstacleGridProblem, mut rows: Vec<Row>) -> Vec<f64> {
    let (lo, hi) = eliminate_extrapolation(p, &mut rows);
    let sub = &rows[lo..hi];
    let sol = solve_tridiagonal(
        &sub.iter().map(|r| r.lower).collect::<Vec<_>>(),
        &sub.iter().map(|r| r.diag).collect::<Vec<_>>(),
        &sub.iter().map(|r| r.upper).collect::<Vec<_>>(),
        &sub.iter().map(|r| r.rhs).collect::<Vec<_>>(),
    );
    let mut v = vec![0.0; rows.len()];
    v[lo..hi].copy_from_slice(&sol);
    restore_extrapolation(p, &mut v);
    v
}

/// Projected SOR on the continuation system, projecting onto `v >= v0` at
/// nodes that carry an obstacle.
fn psor_solve(
    p: &ObstacleGridProblem,
    mut rows: Vec<Row>,
    v0: &[f64],
    obstacle: Option<&[f64]>,
    omega: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let (lo, hi) = eliminate_extrapolation(p, &mut rows);
    let mut v = v0.to_vec();
    let n = v.len();
    let mut change = f64::INFINITY;
    for _ in 0..max_iterations {
        change = 0.0;
        for i in lo..hi {
            let r = &rows[i];
            let left = if i > lo { r.lower * v[i - 1] } else { 0.0 };
            let right = if i + 1 < hi { r.upper * v[i + 1] } else { 0.0 };
            let gs = (r.rhs - left - right) / r.diag;
            let mut next = v[i] + omega * (gs - v[i]);
            let interior = i > 0 && i < n - 1;
            if let (Some(o), true) = (obstacle, interior) {
                next = next.max(o[i]);
            }
            change = change.max((next - v[i]).abs());
            v[i] = next;
        }
        if change < tolerance {
            restore_extrapolation(p, &mut v);
            return Ok(v);
        }
    }
    Err(Error::Convergence { iterations: max_iterations, residual: change })
}

/// Continuation-only solve with unit effort and no payment, lifted onto
/// the obstacle.
fn initial_guess(p: &ObstacleGridProblem, ys: &[f64], obstacle: &[f64]) -> Vec<f64> {
    let n = ys.len();
    let a0 = 1.0f64.clamp(p.effort.actions.lo, p.effort.actions.hi);
    let c = Controls { effort: vec![a0; n], payment: vec![0.0; n] };
    let rows = assemble(p, ys, &c, &vec![false; n], obstacle);
    let mut v = direct_solve(p, rows);
    if p.obstacle.is_some() {
        for i in 1..n - 1 {
            v[i] = v[i].max(obstacle[i]);
        }
    }
    v
}

const MIN_POINTS: usize = 200;

/// Solves the problem on the grid of half resolution (recursively) and
/// interpolates the result onto the given nodes.
fn coarse_guess(p: &ObstacleGridProblem, ys: &[f64]) -> Option<Vec<f64>> {
    let coarse_points = (p.points - 1) / 2 + 1;
    if coarse_points < MIN_POINTS {
        return None;
    }
    let mut coarse = p.clone();
    coarse.points = coarse_points;
    let sol = solve_obstacle_grid(&coarse).ok()?;
    let h = sol.y[1] - sol.y[0];
    let mut v: Vec<f64> = ys.iter().map(|&y| crate::numeric::interp_uniform(&sol.v, sol.y[0], h, y)).collect();
    let n = v.len();
    if let BoundaryCondition::Dirichlet(val) = p.left {
        v[0] = val;
    }
    if let BoundaryCondition::Dirichlet(val) = p.right {
        v[n - 1] = val;
    }
    Some(v)
}

pub fn solve_obstacle_grid(p: &ObstacleGridProblem) -> Result<GridSolution> {
    p.validate()?;
    let ys = p.nodes();
    let n = ys.len();
    let h = p.step();
    let obstacle: Vec<f64> = match &p.obstacle {
        Some(o) => ys.iter().map(|&y| o(y)).collect(),
        None => vec![f64::NEG_INFINITY; n],
    };
    let can_stop = |i: usize| p.obstacle.is_some() && i > 0 && i < n - 1;
    let mut v = coarse_guess(p, &ys).unwrap_or_else(|| initial_guess(p, &ys, &obstacle));
    let mut stop = vec![false; n];
    let scale = |v: &[f64]| 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let outer_tolerance = |v: &[f64]| match p.solver {
        InnerSolver::Direct => p.policy_tolerance * scale(v),
        InnerSolver::Psor { tolerance, .. } => 10.0 * tolerance,
    };
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let cap = p.max_policy_iterations.max(n);
    let mut policy: Option<Vec<f64>> = None;
    while iterations < cap {
        iterations += 1;
        let (cont, c) = continuation_residuals(p, &ys, &v, policy.as_deref())?;
        let (next, stable) = match p.solver {
            InnerSolver::Direct => {
                let new_stop: Vec<bool> = (0..n).map(|i| can_stop(i) && v[i] - obstacle[i] <= cont[i]).collect();
                let rows = assemble(p, &ys, &c, &new_stop, &obstacle);
                let stable = new_stop == stop;
                stop = new_stop;
                (direct_solve(p, rows), stable)
            }
            InnerSolver::Psor { omega, tolerance, max_iterations } => {
                let rows = assemble(p, &ys, &c, &vec![false; n], &obstacle);
                let obs = p.obstacle.as_ref().map(|_| obstacle.as_slice());
                (psor_solve(p, rows, &v, obs, omega, tolerance, max_iterations)?, true)
            }
        };
        change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        policy = Some(c.effort);
        if stable && change < outer_tolerance(&v) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { iterations, residual: change });
    }
    let (cont, c) = continuation_residuals(p, &ys, &v, policy.as_deref())?;
    let (d1, d2) = derivatives(&v, h, p);
    let mut residual = vec![0.0; n];
    let mut stop_flags = vec![false; n];
    let mut max_residual: f64 = 0.0;
    for i in 0..n {
        if can_stop(i) {
            stop_flags[i] = (v[i] - obstacle[i]).abs() <= 1e-12 * (1.0 + obstacle[i].abs());
        }
        let interior = i > 0 && i < n - 1;
        if interior {
            residual[i] = if p.obstacle.is_some() { (v[i] - obstacle[i]).min(cont[i]) } else { cont[i] };
            max_residual = max_residual.max(residual[i].abs());
        }
    }
    let z_hat = c.effort.iter().map(|&a| p.effort.sensitivity(a)).collect();
    Ok(GridSolution {
        y: ys,
        v,
        v_prime: d1,
        v_second: d2,
        effort: c.effort,
        z_hat,
        payment: c.payment,
        stop: stop_flags,
        residual,
        max_residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interval;

    #[test]
    fn rejects_coarse_grid() {
        let m = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
        let p = ObstacleGridProblem::sannikov_european(&m, 2.0, 50).unwrap();
        assert!(matches!(solve_obstacle_grid(&p), Err(Error::Grid(_))));
    }

    #[test]
    fn sannikov_european_is_a_vi_solution() {
        let m = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
        let p = ObstacleGridProblem::sannikov_european(&m, 2.0, 401).unwrap();
        let s = solve_obstacle_grid(&p).unwrap();
        assert_eq!(s.v[0], 0.0);
        assert!(s.max_residual < 1e-6, "residual {}", s.max_residual);
        for (i, &y) in s.y.iter().enumerate() {
            assert!(s.v[i] >= -y * y - 1e-12);
        }
    }

    #[test]
    fn psor_agrees_with_direct_on_small_grid() {
        let m = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
        let mut p = ObstacleGridProblem::sannikov_european(&m, 2.0, 201).unwrap();
        let direct = solve_obstacle_grid(&p).unwrap();
        p.solver = InnerSolver::psor();
        let psor = solve_obstacle_grid(&p).unwrap();
        let gap = direct.v.iter().zip(&psor.v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-4, "gap {gap}");
    }

    #[test]
    fn psor_cap_reports_residual() {
        let m = ModelPrimitives::sannikov(0.1, Interval::new(0.0, 1.0).unwrap(), 0.0).unwrap();
        let mut p = ObstacleGridProblem::sannikov_european(&m, 2.0, 201).unwrap();
        p.solver = InnerSolver::Psor { omega: 1.5, tolerance: 1e-14, max_iterations: 3 };
        assert!(matches!(solve_obstacle_grid(&p), Err(Error::Convergence { iterations: 3, .. })));
    }
}
