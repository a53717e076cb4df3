//! Normal and gamma distribution helpers on top of `statrs` special
//! functions, with separate lower/upper variants for tail precision.

use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::Result;
use crate::quadrature::{quantile_on, upper_quantile_on};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn normal_pdf(x: f64) -> f64 {
    normal_ln_pdf(x).exp()
}

/// Φ⁻¹(u) for u ∈ (0, 1).
pub fn normal_quantile(u: f64) -> f64 {
    if u <= 0.5 {
        -normal_upper_quantile(u)
    } else {
        normal_upper_quantile(1.0 - u)
    }
}

/// x with P(Z > x) = s, accurate for tiny s.
pub fn normal_upper_quantile(s: f64) -> f64 {
    let mut x = std::f64::consts::SQRT_2 * erfc_inv(2.0 * s);
    // two Newton steps on log Φ̄ clean up the last digits of erfc_inv
    for _ in 0..2 {
        let q = normal_sf(x);
        if !(q > 0.0 && x.is_finite()) {
            break;
        }
        x += (q / normal_pdf(x)) * (q / s).ln();
    }
    x
}

pub fn gamma_cdf(p: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(p, x)
    }
}

pub fn gamma_sf(p: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(p, x)
    }
}

/// Gamma(p) quantile, working on the smaller of the two tails.
pub fn gamma_quantile(p: f64, u: f64) -> Result<f64> {
    if u <= 0.5 {
        quantile_on(|x| gamma_cdf(p, x), u, 0.0, f64::INFINITY)
    } else {
        gamma_upper_quantile(p, 1.0 - u)
    }
}

pub fn gamma_upper_quantile(p: f64, s: f64) -> Result<f64> {
    upper_quantile_on(|x| gamma_sf(p, x), s, 0.0, f64::INFINITY)
}
