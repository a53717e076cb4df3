//! Pearson densities: ρ'/ρ = -(a0 + a1 x)/(b0 + b1 x + b2 x²).
//!
//! With this sign a centered member has the quadratic Stein kernel
//! τ(x) = αx² + βx + γ under the map a0 = β, a1 = 2α + 1, b0 = γ, b1 = β,
//! b2 = α.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearsonParams {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    /// Lower end of the support, `None` for -∞.
    #[serde(default)]
    pub lo: Option<f64>,
    /// Upper end of the support, `None` for +∞.
    #[serde(default)]
    pub hi: Option<f64>,
}

impl PearsonParams {
    pub fn on_real_line(a0: f64, a1: f64, b0: f64, b1: f64, b2: f64) -> Self {
        PearsonParams { a0, a1, b0, b1, b2, lo: None, hi: None }
    }

    /// Parameters whose centered solution has kernel αx² + βx + γ.
    pub fn from_kernel(alpha: f64, beta: f64, gamma: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        PearsonParams { a0: beta, a1: 2.0 * alpha + 1.0, b0: gamma, b1: beta, b2: alpha, lo, hi }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo.unwrap_or(f64::NEG_INFINITY), self.hi.unwrap_or(f64::INFINITY))
    }

    pub fn q(&self, x: f64) -> f64 {
        self.b0 + self.b1 * x + self.b2 * x * x
    }

    /// ρ'/ρ.
    pub fn score(&self, x: f64) -> f64 {
        -(self.a0 + self.a1 * x) / self.q(x)
    }

    /// Real roots of q, ascending.
    fn q_roots(&self) -> Vec<f64> {
        let (a, b, c) = (self.b2, self.b1, self.b0);
        if a == 0.0 {
            if b == 0.0 {
                return vec![];
            }
            return vec![-c / b];
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return vec![];
        }
        let s = disc.sqrt();
        // stable quadratic formula
        let qq = -0.5 * (b + b.signum() * s);
        let mut r = if qq == 0.0 { vec![0.0, 0.0] } else { vec![qq / a, c / qq] };
        r.sort_by(f64::total_cmp);
        r
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support();
        let all = [self.a0, self.a1, self.b0, self.b1, self.b2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("Pearson coefficients must be finite".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty support ({lo}, {hi})")));
        }
        if self.b0 == 0.0 && self.b1 == 0.0 && self.b2 == 0.0 {
            return Err(Error::InvalidParameter("denominator polynomial vanishes identically".into()));
        }
        for r in self.q_roots() {
            if r > lo && r < hi {
                return Err(Error::InvalidParameter(format!(
                    "denominator b0 + b1 x + b2 x² vanishes at {r} inside the support"
                )));
            }
        }
        Ok(())
    }

    /// Antiderivative of (a0 + a1 x)/q(x), so log ρ = -A + const.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let (a0, a1, b0, b1, b2) = (self.a0, self.a1, self.b0, self.b1, self.b2);
        if b2 == 0.0 {
            if b1 == 0.0 {
                return (a0 * x + 0.5 * a1 * x * x) / b0;
            }
            let c = a0 - a1 * b0 / b1;
            return a1 * x / b1 + c / b1 * (b0 + b1 * x).abs().ln();
        }
        // a0 + a1 x = (a1 / 2b2) q' + r
        let k = a1 / (2.0 * b2);
        let r = a0 - k * b1;
        let log_part = k * self.q(x).abs().ln();
        let disc = b1 * b1 - 4.0 * b2 * b0;
        let u = 2.0 * b2 * x + b1;
        let inv_q = if disc < 0.0 {
            let s = (-disc).sqrt();
            2.0 / s * (u / s).atan()
        } else if disc > 0.0 {
            let s = disc.sqrt();
            ((u - s) / (u + s)).abs().ln() / s
        } else {
            -2.0 / u
        };
        log_part + r * inv_q
    }

    /// Coefficients (α, β, γ) of the quadratic Stein kernel of the solution
    /// shifted by `-mean`, i.e. τ(y) = q(y + mean)/(a1 - 2 b2).
    pub fn kernel_coefficients(&self, mean: f64) -> Result<(f64, f64, f64)> {
        let lambda = self.a1 - 2.0 * self.b2;
        if lambda <= 0.0 {
            return Err(Error::KernelExplosion(format!(
                "a1 - 2 b2 = {lambda} must be positive for a positive quadratic kernel"
            )));
        }
        let alpha = self.b2 / lambda;
        let beta = (2.0 * self.b2 * mean + self.b1) / lambda;
        let gamma = (self.b2 * mean * mean + self.b1 * mean + self.b0) / lambda;
        Ok((alpha, beta, gamma))
    }
}

/// Checks that ∫_0^b y/τ = +∞ and ∫_a^0 y/τ = -∞ for τ = αx² + βx + γ on the
/// centered support (a, b), and that τ > 0 inside.
pub fn check_tau_explosion(alpha: f64, beta: f64, gamma: f64, a: f64, b: f64) -> Result<()> {
    let tau = |x: f64| alpha * x * x + beta * x + gamma;
    if !(a < 0.0 && b > 0.0) {
        return Err(Error::KernelExplosion(format!("support ({a}, {b}) does not contain the mean 0")));
    }
    let scale = alpha.abs() + beta.abs() + gamma.abs();
    // interior positivity on a coarse grid in the mapped variable
    for k in 1..200 {
        let t = k as f64 / 200.0;
        let x = if a.is_finite() && b.is_finite() {
            a + (b - a) * t
        } else if a.is_finite() {
            a + t / (1.0 - t)
        } else if b.is_finite() {
            b - t / (1.0 - t)
        } else {
            let s = 2.0 * t - 1.0;
            s / (1.0 - s * s)
        };
        if x > a && x < b && !(tau(x) > 0.0) {
            return Err(Error::KernelExplosion(format!("kernel not positive at {x}")));
        }
    }
    for (end, name) in [(a, "lower"), (b, "upper")] {
        if end.is_finite() {
            if tau(end).abs() > 1e-9 * scale.max(1.0) * (1.0 + end * end) {
                return Err(Error::KernelExplosion(format!(
                    "∫ y/τ(y) dy stays finite at the {name} endpoint {end} (τ = {} ≠ 0)",
                    tau(end)
                )));
            }
        } else if alpha < 0.0 {
            return Err(Error::KernelExplosion(format!("kernel negative near the {name} infinite end")));
        }
    }
    Ok(())
}
