//! Utility functions for the agent and the principal.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A utility specified by closures. `derivative` and `derivative_inverse`
/// are optional; operations that need them fall back to numerical routes.
#[derive(Clone)]
pub struct CustomUtility {
    pub name: String,
    pub value: ScalarFn,
    pub inverse: ScalarFn,
    pub derivative: Option<ScalarFn>,
    pub derivative_inverse: Option<ScalarFn>,
    /// Domain of the argument (payments).
    pub domain_lo: f64,
    /// Range of values, used to reject `inverse` queries.
    pub range_lo: f64,
    pub range_hi: f64,
}

#[derive(Clone)]
pub enum Utility {
    /// `U(x) = x`.
    Identity,
    /// `U(x) = sqrt(x)` on `[0, inf)`.
    Sqrt,
    /// `U(x) = -exp(-rate * x)`.
    NegExp {
        rate: f64,
    },
    Custom(CustomUtility),
}

impl fmt::Debug for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Utility::Identity => write!(f, "Identity"),
            Utility::Sqrt => write!(f, "Sqrt"),
            Utility::NegExp { rate } => write!(f, "NegExp({rate})"),
            Utility::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl Utility {
    /// Lower end of the admissible argument domain.
    pub fn domain_lo(&self) -> f64 {
        match self {
            Utility::Sqrt => 0.0,
            Utility::Custom(c) => c.domain_lo,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Utility::Identity => x,
            Utility::Sqrt => {
                if x < 0.0 {
                    f64::NAN
                } else {
                    x.sqrt()
                }
            }
            Utility::NegExp { rate } => -(-rate * x).exp(),
            Utility::Custom(c) => (c.value)(x),
        }
    }

    /// `(lo, hi)` of the closure of the range.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Utility::Identity => (f64::NEG_INFINITY, f64::INFINITY),
            Utility::Sqrt => (0.0, f64::INFINITY),
            Utility::NegExp { .. } => (f64::NEG_INFINITY, 0.0),
            Utility::Custom(c) => (c.range_lo, c.range_hi),
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        let open_top = matches!(self, Utility::NegExp { .. });
        if y.is_nan() || y < lo || y > hi || (open_top && y >= hi) {
            return Err(Error::Range(format!("{y} outside the range of {self:?}")));
        }
        Ok(match self {
            Utility::Identity => y,
            Utility::Sqrt => y * y,
            Utility::NegExp { rate } => -(-y).ln() / rate,
            Utility::Custom(c) => (c.inverse)(y),
        })
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Utility::Identity => 1.0,
            Utility::Sqrt => 0.5 / x.sqrt(),
            Utility::NegExp { rate } => rate * (-rate * x).exp(),
            Utility::Custom(c) => match &c.derivative {
                Some(d) => d(x),
                None => {
                    let h = 1e-6 * x.abs().max(1e-3);
                    ((c.value)(x + h) - (c.value)(x - h)) / (2.0 * h)
                }
            },
        }
    }

    /// `(U')^{-1}(m)` when it is available in closed form.
    pub fn derivative_inverse(&self, m: f64) -> Option<Result<f64>> {
        let bad = |m: f64, u: &Utility| Error::Range(format!("{m} outside the range of {u:?}'"));
        match self {
            Utility::Identity => Some(Err(bad(m, self))),
            Utility::Sqrt => Some(if m > 0.0 { Ok(0.25 / (m * m)) } else { Err(bad(m, self)) }),
            Utility::NegExp { rate } => Some(if m > 0.0 { Ok(-(m / rate).ln() / rate) } else { Err(bad(m, self)) }),
            Utility::Custom(c) => c.derivative_inverse.as_ref().map(|f| Ok(f(m))),
        }
    }

    /// Whether `U'(0+) = inf` and `U'(inf) = 0` hold (Inada conditions on
    /// the payment side).
    pub fn is_inada(&self) -> bool {
        match self {
            Utility::Sqrt => true,
            Utility::Custom(c) => c.domain_lo == 0.0,
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_inverse_round_trips() {
        let u = Utility::Sqrt;
        assert_eq!(u.inverse(2.0).unwrap(), 4.0);
        assert!((u.value(u.inverse(2.0).unwrap()) - 2.0).abs() < 1e-15);
        assert!(matches!(u.inverse(-1.0), Err(Error::Range(_))));
    }

    #[test]
    fn negexp_derivative_inverse() {
        let u = Utility::NegExp { rate: 1.0 };
        let x = u.derivative_inverse(std::f64::consts::E).unwrap().unwrap();
        assert!((x + 1.0).abs() < 1e-15);
        assert!(u.inverse(0.0).is_err());
    }
}
