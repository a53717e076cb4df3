//! Quantile inversion of monotone CDFs by bracketed root finding.

use crate::error::{Error, Result};

/// Inverts `cdf` at `u` on the support `(lo, hi)` (either end may be infinite).
///
/// The bracket is grown geometrically from `[-1, 1]` clipped to the support,
/// then refined by bisection blended with secant steps (Illinois variant).
/// Stops when `|cdf(x) - u| < 1e-12` or the bracket collapses to adjacent
/// floats.
pub fn quantile_on<F: Fn(f64) -> f64>(cdf: F, u: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile level {u} outside (0, 1)")));
    }
    solve_increasing(&cdf, u, lo, hi)
}

/// [`quantile_on`] over the whole real line.
pub fn quantile<F: Fn(f64) -> f64>(cdf: F, u: f64) -> Result<f64> {
    quantile_on(cdf, u, f64::NEG_INFINITY, f64::INFINITY)
}

/// Upper quantile: solves `sf(x) = s` for a decreasing survival function.
/// Working on the survival side keeps relative precision deep in the
/// right tail where `1 - cdf` cancels.
pub fn upper_quantile_on<F: Fn(f64) -> f64>(sf: F, s: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("tail level {s} outside (0, 1)")));
    }
    solve_increasing(&|x| -sf(x), -s, lo, hi)
}

fn solve_increasing<F: Fn(f64) -> f64>(g: &F, target: f64, lo: f64, hi: f64) -> Result<f64> {
    let fail = || Error::Bracketing { u: target.abs() };
    let (mut a, mut b) = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo + 1.0),
        (false, true) => (hi - 1.0, hi),
        (false, false) => (-1.0, 1.0),
    };
    let mut ga = g(a);
    let mut gb = g(b);
    let mut step = 1.0;
    let mut iters = 0;
    while ga > target {
        if lo.is_finite() && a <= lo {
            // mass at the lower boundary
            return Ok(lo);
        }
        step *= 2.0;
        a = if lo.is_finite() { (a - step).max(lo) } else { a - step };
        ga = g(a);
        iters += 1;
        if iters > 2000 || !a.is_finite() {
            return Err(fail());
        }
    }
    step = 1.0;
    iters = 0;
    while gb < target {
        if hi.is_finite() && b >= hi {
            return Ok(hi);
        }
        step *= 2.0;
        b = if hi.is_finite() { (b + step).min(hi) } else { b + step };
        gb = g(b);
        iters += 1;
        if iters > 2000 || !b.is_finite() {
            return Err(fail());
        }
    }
    if !(ga <= target && gb >= target) || ga.is_nan() || gb.is_nan() {
        return Err(fail());
    }
    let mut side = 0i8;
    for _ in 0..400 {
        let fa = ga - target;
        let fb = gb - target;
        if fb == 0.0 {
            return Ok(b);
        }
        if fa == 0.0 {
            return Ok(a);
        }
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            return Ok(if fa.abs() <= fb.abs() { a } else { b });
        }
        // secant point, kept inside the middle 90% of the bracket
        let mut x = (a * fb - b * fa) / (fb - fa);
        let w = b - a;
        if !(x > a + 0.05 * w && x < b - 0.05 * w) {
            x = mid;
        }
        if side.abs() >= 2 {
            x = mid;
            side = 0;
        }
        let gx = g(x);
        if gx.is_nan() || gx < ga || gx > gb {
            return Err(fail());
        }
        let fx = gx - target;
        if fx.abs() < 1e-13 * target.abs().min(1.0) {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
            ga = gx;
            side = if side < 0 { side - 1 } else { -1 };
        } else {
            b = x;
            gb = gx;
            side = if side > 0 { side + 1 } else { 1 };
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    fn ncdf(x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn normal_quantiles() {
        assert!(quantile(ncdf, 0.5).unwrap().abs() < 1e-12);
        let q = quantile(ncdf, 0.975).unwrap();
        assert!((ncdf(q) - 0.975).abs() < 1e-12);
        assert!((q - 1.959_963_984_540_054).abs() < 1e-9);
    }

    #[test]
    fn exponential_quantile() {
        let cdf = |x: f64| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() };
        for &u in &[1e-6, 0.1, 0.5, 0.9, 0.999_999] {
            let q = quantile_on(cdf, u, 0.0, f64::INFINITY).unwrap();
            assert!((q + (-u).ln_1p()).abs() < 1e-9 * (1.0 + q), "u={u} q={q}");
        }
    }

    #[test]
    fn upper_tail_keeps_precision() {
        let sf = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
        let q = upper_quantile_on(sf, 1e-20, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!(((sf(q) - 1e-20) / 1e-20).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_levels_and_nonmonotone() {
        assert!(quantile(ncdf, 0.0).is_err());
        assert!(quantile(ncdf, 1.0).is_err());
        assert!(matches!(quantile(|_| 0.3, 0.5), Err(Error::Bracketing { .. })));
    }
}
