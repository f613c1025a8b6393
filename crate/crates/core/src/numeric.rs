//! Small one-dimensional numerical kernels shared by the solvers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Composite Simpson rule with `panels` sub-intervals (rounded up to even).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite Simpson rule for a fallible integrand.
pub fn simpson_try<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, panels: usize) -> Result<f64> {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximize `f` over `[lo, hi]`: scan `resolution` equispaced points, then
/// refine the best cell by golden section. Ties in the scan keep the
/// smallest argument.
pub fn grid_golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, resolution: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let n = resolution.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let v = f(lo + i as f64 * h);
        values.push(v);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + best_i.saturating_sub(1) as f64 * h;
    let b = lo + (best_i + 1).min(n - 1) as f64 * h;
    let (x, fx) = golden_max(&mut f, a, b, 1e-12);
    if fx > best {
        (x, fx)
    } else {
        (lo + best_i as f64 * h, best)
    }
}

/// Bisection on a bracketing interval followed by safeguarded Newton polish
/// with a finite-difference slope.
pub fn bisect_newton<F: FnMut(f64) -> f64>(mut g: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() || !g_lo.is_finite() || !g_hi.is_finite() {
        return Err(Error::RootBracket { lo, hi, g_lo, g_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-6 * mid.abs().max(1e-300) {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let gx = g(x);
        let h = 1e-7 * x.abs().max(1e-12);
        let slope = (g(x + h) - g(x - h)) / (2.0 * h);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let mut next = x - gx / slope;
        if next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let g_next = g(next);
        if g_next.signum() == g_lo.signum() {
            lo = next;
            g_lo = g_next;
        } else {
            hi = next;
        }
        let done = (next - x).abs() <= tol * x.abs().max(1.0);
        x = next;
        if done || g_next == 0.0 {
            break;
        }
    }
    Ok(x)
}

/// Thomas algorithm for a tridiagonal system. `lower[0]` and
/// `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Linear interpolation on a uniform table starting at `x0` with step `h`;
/// clamps outside the table.
pub fn interp_uniform(table: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = table.len();
    let pos = (x - x0) / h;
    if pos <= 0.0 {
        return table[0];
    }
    let i = pos.floor() as usize;
    if i + 1 >= n {
        return table[n - 1];
    }
    let w = pos - i as f64;
    table[i] * (1.0 - w) + table[i + 1] * w
}
