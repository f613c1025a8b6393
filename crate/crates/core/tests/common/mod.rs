//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

/// Tanh-sinh quadrature on `[a, b]`; tolerates integrable endpoint
/// singularities since nodes never touch the ends.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    for k in -448i32..=448 {
        let tau = k as f64 * h;
        let arg = std::f64::consts::FRAC_PI_2 * tau.sinh();
        let w = std::f64::consts::FRAC_PI_2 * tau.cosh() / arg.cosh().powi(2);
        // distance to the nearer end, computed without cancellation
        let gap = 2.0 * half / (1.0 + (2.0 * arg.abs()).exp());
        let x = if k < 0 { a + gap } else { b - gap };
        if gap <= 0.0 || w == 0.0 {
            continue;
        }
        sum += w * f(x);
    }
    sum * half * h
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    const XK: [f64; 8] = [
        0.991455371120812639,
        0.949107912342758525,
        0.864864423359769073,
        0.741531185599394440,
        0.586087235467691130,
        0.405845151377397167,
        0.207784955007898468,
        0.0,
    ];
    const WK: [f64; 8] = [
        0.022935322010529225,
        0.063092092629978553,
        0.104790010322250184,
        0.140653259715525919,
        0.169004726639267903,
        0.190350578064785410,
        0.204432940075298892,
        0.209482141084727828,
    ];
    const WG: [f64; 4] = [0.129484966168869693, 0.279705391489276668, 0.381830050505118945, 0.417959183673469388];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        k += WK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7, 15) quadrature.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(&f, a, b, tol, 0)
}

/// Brute-force maximum on a fine uniform grid: `(argmax, max)`.
pub fn grid_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

pub fn grid_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let (x, v) = grid_max(|x| -f(x), lo, hi, points);
    (x, -v)
}

/// Bisection root of a sign-changing function.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Risk-neutral quadratic economy with rate 0.5 for both parties and
/// retirement at 0, with the quitting contract `Z = 1`, `pi = rY + 3/2`.
pub fn retiring_economy(y0: f64) -> (rhcontract::model::ModelPrimitives, rhcontract::contract::RevealingContract) {
    use rhcontract::contract::{RevealingContract, Termination};
    use rhcontract::model::*;
    use std::sync::Arc;
    let rate = 0.5;
    let m = ModelPrimitives::quadratic(QuadraticSpec {
        name: "retiring".into(),
        drift_actions: Interval::real_line(),
        cost_scale: 1.0,
        volatility: 1.0,
        agent_rate: rate,
        agent_utility: Utility::Identity,
        principal_utility: Utility::Identity,
        principal_rate: rate,
        liquidation: Liquidation::DiscountedOutput,
        retirement_level: Some(0.0),
        participation: 0.0,
    })
    .unwrap();
    let c = RevealingContract::constant_z(&m, y0, 1.0, Termination::Hitting { level: 0.0 })
        .unwrap()
        .with_payment(Arc::new(move |_, _, y| rate * y + 1.5))
        .american();
    (m, c)
}
