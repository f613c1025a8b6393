use serde::{Deserialize, Serialize};

/// Slack added to every standard-error band so that deterministic
/// pay-offs (zero standard error) compare up to rounding.
pub const ABSOLUTE_FLOOR: f64 = 1e-9;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Estimate { estimate: f64::NAN, std_error: f64::NAN, n };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { estimate: mean, std_error, n }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_error(&self, other: &Estimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    pub fn within(&self, target: f64, errors: f64) -> bool {
        (self.estimate - target).abs() <= errors * self.std_error + ABSOLUTE_FLOOR
    }
}
