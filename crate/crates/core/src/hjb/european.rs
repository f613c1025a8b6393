//! Constructive solution of the quadratic-cost obstacle problem
//! `min{u - u0, beta u + 1/(2 u'')} = 0` with `u0(s) = -s ln s`, and its
//! transform `v(y) = exp(-y) u(exp(y))`.

use std::sync::Arc;

use libm::{erf, erfc};
use serde::{Deserialize, Serialize};

use super::gamma_half::{gamma_half_quantile, gamma_half_sf_inverse};
use crate::contract::FeedbackMap;
use crate::error::{Error, Result};
use crate::numeric::interp_uniform;

/// `u0(s) = -s ln s`.
pub fn obstacle_u0(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        -s * s.ln()
    }
}

pub fn obstacle_u0_prime(s: f64) -> f64 {
    -s.ln() - 1.0
}

/// Largest matching point compatible with stopping: `exp(-1/(2 beta))`.
pub fn stopping_threshold(beta: f64) -> f64 {
    (-0.5 / beta).exp()
}

/// Right end of the ODE branch started at `s_n`, evaluated without
/// checking that `s_n` lies below the stopping threshold.
pub fn right_endpoint(beta: f64, s_n: f64) -> f64 {
    let t0 = beta * obstacle_u0_prime(s_n).powi(2);
    let c = t0 + obstacle_u0(s_n).ln();
    s_n + c.exp() * (beta * std::f64::consts::PI).sqrt() * erf(t0.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuropeanExampleProblem {
    pub discount_beta: f64,
    pub s_grid: Vec<f64>,
    pub n_max: usize,
}

impl EuropeanExampleProblem {
    /// Log-spaced grid with `points` nodes on `[1/n_max, s_max]`.
    pub fn new(discount_beta: f64, n_max: usize, s_max: f64, points: usize) -> Result<Self> {
        if !(discount_beta > 0.0 && discount_beta < 0.5) {
            return Err(Error::Domain(format!(
                "discount_beta must lie in (0, 1/2) for smooth fit, got {discount_beta}"
            )));
        }
        if n_max < 4 {
            return Err(Error::Domain(format!("n_max must be at least 4, got {n_max}")));
        }
        let lo = 1.0 / n_max as f64;
        if !(s_max > lo) || points < 2 {
            return Err(Error::Grid(format!("need s_max > {lo} and at least 2 points")));
        }
        let (a, b) = (lo.ln(), s_max.ln());
        let s_grid = (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect();
        Ok(EuropeanExampleProblem { discount_beta, s_grid, n_max })
    }

    pub fn s_star(&self) -> f64 {
        stopping_threshold(self.discount_beta)
    }

    /// Smallest `n` with `1/n` below the stopping threshold.
    pub fn first_admissible_n(&self) -> usize {
        let mut n = (1.0 / self.s_star()).floor().max(1.0) as usize;
        while 1.0 / (n as f64) > self.s_star() {
            n += 1;
        }
        n
    }
}

/// The function `u_n`: the obstacle up to `s_n`, the ODE branch on
/// `[s_n, s_n']` and the constant `exp(c_n)` beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundarySolution {
    pub discount_beta: f64,
    pub s_n: f64,
    pub c_n: f64,
    pub s_n_prime: f64,
    /// `beta u0'(s_n)^2`, the level variable where the branch starts.
    pub start_level: f64,
    /// `exp(c_n) sqrt(beta pi)`.
    pub scale: f64,
    start_cdf: f64,
    start_tail: f64,
}

/// Builds `u_n` from the matching point `s_n`.
pub fn construct_un(problem: &EuropeanExampleProblem, s_n: f64) -> Result<FreeBoundarySolution> {
    let beta = problem.discount_beta;
    let s_star = problem.s_star();
    if !(s_n > 0.0) || s_n > s_star * (1.0 + 1e-14) {
        return Err(Error::Construction(format!(
            "matching point {s_n} must lie in (0, {s_star}] where the obstacle can be optimal"
        )));
    }
    let t0 = beta * obstacle_u0_prime(s_n).powi(2);
    let c_n = t0 + obstacle_u0(s_n).ln();
    let scale = c_n.exp() * (beta * std::f64::consts::PI).sqrt();
    let start_cdf = erf(t0.sqrt());
    let sol = FreeBoundarySolution {
        discount_beta: beta,
        s_n,
        c_n,
        s_n_prime: s_n + scale * start_cdf,
        start_level: t0,
        scale,
        start_cdf,
        start_tail: erfc(t0.sqrt()),
    };
    let mid = 0.5 * (sol.s_n + sol.s_n_prime);
    let u_mid = sol.try_u(mid)?;
    if !u_mid.is_finite() {
        return Err(Error::Numeric { step: 0, detail: format!("u({mid}) = {u_mid}") });
    }
    Ok(sol)
}

impl FreeBoundarySolution {
    /// `c_n - ln u(s)` on the ODE branch.
    fn level(&self, s: f64) -> Result<f64> {
        let shift = (s - self.s_n) / self.scale;
        let p = self.start_cdf - shift;
        if p <= 0.0 {
            return Ok(0.0);
        }
        if p < 0.5 {
            gamma_half_quantile(p)
        } else {
            gamma_half_sf_inverse(self.start_tail + shift)
        }
    }

    pub fn try_u(&self, s: f64) -> Result<f64> {
        if s <= self.s_n {
            Ok(obstacle_u0(s))
        } else if s >= self.s_n_prime {
            Ok(self.c_n.exp())
        } else {
            Ok((self.c_n - self.level(s)?).exp())
        }
    }

    pub fn u(&self, s: f64) -> f64 {
        self.try_u(s).unwrap_or(f64::NAN)
    }

    /// Derivative from the first integral `beta u'^2 = c_n - ln u`.
    pub fn u_prime(&self, s: f64) -> f64 {
        if s <= self.s_n {
            obstacle_u0_prime(s)
        } else if s >= self.s_n_prime {
            0.0
        } else {
            (self.level(s).unwrap_or(f64::NAN) / self.discount_beta).sqrt()
        }
    }

    /// Second derivative from the ODE `2 beta u'' + 1/u = 0`.
    pub fn u_second(&self, s: f64) -> f64 {
        if s <= self.s_n {
            -1.0 / s
        } else if s >= self.s_n_prime {
            0.0
        } else {
            -1.0 / (2.0 * self.discount_beta * self.u(s))
        }
    }

    pub fn v(&self, y: f64) -> f64 {
        (-y).exp() * self.u(y.exp())
    }

    pub fn v_prime(&self, y: f64) -> f64 {
        -self.v(y) + self.u_prime(y.exp())
    }

    pub fn v_second(&self, y: f64) -> f64 {
        let s = y.exp();
        s * self.u_second(s) - self.v_prime(y)
    }

    /// `ln s_n`: the promised values at or below it are stopped.
    pub fn stop_boundary(&self) -> f64 {
        self.s_n.ln()
    }

    pub fn in_stop_region(&self, y: f64) -> bool {
        y <= self.stop_boundary()
    }

    /// Feedback sensitivity `-1/(v' + v'')`; held at its value at `ln s_n'`
    /// beyond the branch end.
    pub fn z_hat(&self, y: f64) -> f64 {
        let y_end = self.s_n_prime.ln();
        if y >= y_end {
            return 2.0 * self.discount_beta * self.c_n.exp() / self.s_n_prime;
        }
        let s = y.exp();
        -1.0 / (s * self.u_second(s))
    }

    /// `z_hat` tabulated on `points` uniform nodes of `[ln s_n, ln s_n']`
    /// and interpolated linearly, as a contract sensitivity.
    pub fn z_hat_feedback(&self, points: usize) -> Result<FeedbackMap> {
        if points < 2 {
            return Err(Error::Grid(format!("need at least 2 table points, got {points}")));
        }
        let (lo, hi) = (self.stop_boundary(), self.s_n_prime.ln());
        let h = (hi - lo) / (points - 1) as f64;
        let table: Vec<f64> = (0..points).map(|i| self.z_hat(lo + h * i as f64)).collect();
        if let Some(bad) = table.iter().find(|z| !z.is_finite()) {
            return Err(Error::Numeric { step: 0, detail: format!("z_hat table entry {bad}") });
        }
        Ok(Arc::new(move |_, _, y| interp_uniform(&table, lo, h, y)))
    }
}

/// Residuals of the defining relations of a constructed `u_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionDiagnostics {
    pub smooth_fit_value: f64,
    pub smooth_fit_slope: f64,
    pub end_value: f64,
    pub end_slope: f64,
    pub max_ode_residual: f64,
    pub max_first_integral_residual: f64,
    pub max_second_difference: f64,
    pub min_first_difference: f64,
}

fn stencil(s: f64) -> f64 {
    1e-3 * s
}

impl FreeBoundarySolution {
    /// Checks smooth fit, the endpoint conditions and the ODE on `samples`
    /// interior points, with derivatives by central differences.
    pub fn diagnostics(&self, samples: usize) -> Result<ConstructionDiagnostics> {
        let beta = self.discount_beta;
        let branch_start = (self.c_n - self.level(self.s_n)?).exp();
        let mut d = ConstructionDiagnostics {
            smooth_fit_value: (branch_start - obstacle_u0(self.s_n)).abs(),
            smooth_fit_slope: ((self.level(self.s_n)? / beta).sqrt() - obstacle_u0_prime(self.s_n)).abs(),
            end_value: ((self.c_n - self.level(self.s_n_prime)?).exp() - self.c_n.exp()).abs(),
            end_slope: (self.level(self.s_n_prime)? / beta).sqrt(),
            max_ode_residual: 0.0,
            max_first_integral_residual: 0.0,
            max_second_difference: f64::NEG_INFINITY,
            min_first_difference: f64::INFINITY,
        };
        let (a, b) = (self.s_n.ln(), self.s_n_prime.ln());
        let nodes: Vec<f64> = (1..=samples).map(|i| (a + (b - a) * i as f64 / (samples + 1) as f64).exp()).collect();
        for &s in &nodes {
            let h = stencil(s);
            if s - 2.0 * h <= self.s_n || s + 2.0 * h >= self.s_n_prime {
                continue;
            }
            let (um, u0, up) = (self.try_u(s - h)?, self.try_u(s)?, self.try_u(s + h)?);
            let d1 = (up - um) / (2.0 * h);
            let d2 = (up - 2.0 * u0 + um) / (h * h);
            d.max_ode_residual = d.max_ode_residual.max((beta * u0 + 0.5 / d2).abs());
            d.max_first_integral_residual =
                d.max_first_integral_residual.max((beta * d1 * d1 - (self.c_n - u0.ln())).abs());
        }
        let mut pts = Vec::with_capacity(nodes.len() + 2);
        pts.push((self.s_n, obstacle_u0(self.s_n)));
        for &s in &nodes {
            pts.push((s, self.try_u(s)?));
        }
        pts.push((self.s_n_prime, self.c_n.exp()));
        for w in pts.windows(2) {
            d.min_first_difference = d.min_first_difference.min(w[1].1 - w[0].1);
        }
        for w in pts.windows(3) {
            let left = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let right = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            d.max_second_difference = d.max_second_difference.max(right - left);
        }
        Ok(d)
    }
}

/// Convergence data of the sequence `u_{1/n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n_first: usize,
    pub n_last: usize,
    /// `max_s |u_{1/n} - u_{1/(n-1)}|` on the grid, for `n > n_first`.
    pub sup_differences: Vec<f64>,
    pub differences_decreasing: bool,
    /// Smallest `u_{1/n} - u_{1/(n-1)}` seen on the grid.
    pub min_increment: f64,
    pub s_n_prime: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSolution {
    pub solution: FreeBoundarySolution,
    pub report: ConvergenceReport,
}

/// Builds `u_{1/n}` for every admissible `n <= n_max` and returns the last
/// one with the convergence report. Fails if the sequence is not
/// nondecreasing in `n` on the grid.
pub fn limit_solution(problem: &EuropeanExampleProblem) -> Result<LimitSolution> {
    let n_first = problem.first_admissible_n();
    if problem.n_max <= n_first {
        return Err(Error::Construction(format!(
            "n_max = {} leaves no matching point 1/n below {} (first admissible n is {n_first})",
            problem.n_max,
            problem.s_star()
        )));
    }
    let mut prev: Option<Vec<f64>> = None;
    let mut sup_differences = Vec::new();
    let mut s_primes = Vec::new();
    let mut min_increment = f64::INFINITY;
    let mut last = None;
    for n in n_first..=problem.n_max {
        let sol = construct_un(problem, 1.0 / n as f64)?;
        let values = problem.s_grid.iter().map(|&s| sol.try_u(s)).collect::<Result<Vec<_>>>()?;
        if let Some(p) = &prev {
            let mut sup: f64 = 0.0;
            for (i, (&a, &b)) in values.iter().zip(p).enumerate() {
                let inc = a - b;
                min_increment = min_increment.min(inc);
                if inc < -1e-9 {
                    return Err(Error::Invariant(format!(
                        "u_(1/{n}) < u_(1/{}) - 1e-9 at s = {} (difference {inc:e}); the sequence must increase",
                        n - 1,
                        problem.s_grid[i]
                    )));
                }
                sup = sup.max(inc.abs());
            }
            sup_differences.push(sup);
        }
        s_primes.push(sol.s_n_prime);
        prev = Some(values);
        last = Some(sol);
    }
    let differences_decreasing = sup_differences.windows(2).all(|w| w[1] < w[0]);
    Ok(LimitSolution {
        solution: last.expect("at least two admissible n"),
        report: ConvergenceReport {
            n_first,
            n_last: problem.n_max,
            sup_differences,
            differences_decreasing,
            min_increment,
            s_n_prime: s_primes,
        },
    })
}

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Value function and feedback control in the promised-value variable.
#[derive(Clone)]
pub struct ValueAndControl {
    pub v: ScalarMap,
    pub z_hat: ScalarMap,
    /// `max |z_hat - 2 beta v|` over the sampled continuation region, with
    /// `z_hat` recomputed from central differences of `u`.
    pub max_feedback_gap: f64,
}

pub fn value_and_control(sol: &FreeBoundarySolution) -> Result<ValueAndControl> {
    let beta = sol.discount_beta;
    let (a, b) = (sol.s_n.ln(), sol.s_n_prime.ln());
    let mut gap: f64 = 0.0;
    let samples = 400;
    for i in 1..samples {
        let y = a + (b - a) * i as f64 / samples as f64;
        let s = y.exp();
        let second = sol.u_second(s);
        if !(second < 0.0) {
            return Err(Error::Concavity { y, second });
        }
        let h = stencil(s);
        if s - 2.0 * h <= sol.s_n || s + 2.0 * h >= sol.s_n_prime {
            continue;
        }
        let fd = (sol.try_u(s + h)? - 2.0 * sol.try_u(s)? + sol.try_u(s - h)?) / (h * h);
        if !(fd < 0.0) {
            return Err(Error::Concavity { y, second: fd });
        }
        gap = gap.max((-1.0 / (s * fd) - 2.0 * beta * sol.v(y)).abs());
    }
    if gap > 1e-4 {
        return Err(Error::Invariant(format!("feedback z_hat deviates from 2 beta v by {gap:e}")));
    }
    let (s1, s2) = (*sol, *sol);
    Ok(ValueAndControl { v: Arc::new(move |y| s1.v(y)), z_hat: Arc::new(move |y| s2.z_hat(y)), max_feedback_gap: gap })
}
