//! The Gamma(1/2, 1) distribution: density `exp(-s) / sqrt(pi s)`, CDF
//! `erf(sqrt(t))`, survival `erfc(sqrt(t))` and their inverses.

use libm::{erf, erfc};
use statrs::function::erf::{erf_inv, erfc_inv};

use crate::error::{Error, Result};

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

pub fn gamma_half_density(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-t).exp() / (std::f64::consts::PI * t).sqrt()
    }
}

pub fn gamma_half_cdf(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("CDF argument must be nonnegative, got {t}")));
    }
    Ok(erf(t.sqrt()))
}

/// `1 - F(t)` without cancellation.
pub fn gamma_half_sf(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("survival argument must be nonnegative, got {t}")));
    }
    Ok(erfc(t.sqrt()))
}

/// Solves `g(u) = target` for `u >= 0`, where `g` is monotone with
/// derivative `slope(u)`, by Newton steps kept inside a shrinking bracket.
fn bracketed_newton(
    g: impl Fn(f64) -> f64,
    slope: impl Fn(f64) -> f64,
    target: f64,
    guess: f64,
    increasing: bool,
) -> Result<f64> {
    let above = |u: f64| {
        let d = g(u) - target;
        if increasing {
            d > 0.0
        } else {
            d < 0.0
        }
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !above(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::Numeric { step: 0, detail: format!("quantile of {target} not bracketed") });
        }
    }
    let mut u = if guess.is_finite() && guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for step in 0..100 {
        let r = g(u) - target;
        if r == 0.0 {
            return Ok(u);
        }
        if above(u) {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = u - r / slope(u);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 4.0 * f64::EPSILON * u.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi {
            return Ok(next);
        }
        u = next;
        if step == 99 {
            break;
        }
    }
    Err(Error::Numeric { step: 100, detail: format!("quantile Newton did not converge for {target}") })
}

/// Inverse of [`gamma_half_cdf`] on `[0, 1)`.
pub fn gamma_half_quantile(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("probability must lie in [0, 1), got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let u = bracketed_newton(erf, |u| TWO_OVER_SQRT_PI * (-u * u).exp(), p, erf_inv(p), true)?;
    Ok(u * u)
}

/// Inverse of [`gamma_half_sf`] on `(0, 1]`, accurate when `q` is tiny.
pub fn gamma_half_sf_inverse(q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain(format!("tail probability must lie in (0, 1], got {q}")));
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    let u = bracketed_newton(erfc, |u| -TWO_OVER_SQRT_PI * (-u * u).exp(), q, erfc_inv(q), false)?;
    Ok(u * u)
}
