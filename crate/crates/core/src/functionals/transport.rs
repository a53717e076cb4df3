use super::kernel::DENSITY_FLOOR;
use super::{FunctionalKind, FunctionalValue};
use crate::error::{Error, Result};
use crate::measures::{Family, TargetDensity};
use crate::quadrature::{integrate_vec, AdaptiveOptions, Interval};

fn opts() -> AdaptiveOptions {
    crate::quadrature::overrides().adapt(AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-11, max_segments: 4000, initial_pieces: 8 })
}

/// W_p(ν, μ) against the target's reference measure.
pub fn wasserstein_p_1d(target: &TargetDensity, p: f64) -> Result<FunctionalValue> {
    let other = TargetDensity::of_reference(target.reference().clone());
    wasserstein_p_between(target, &other, p)
}

/// W_p between two 1D laws by the monotone coupling:
/// W_p^p = ∫₀¹ |Q_ν(u) - Q_μ(u)|^p du = ∫ |x - Q_μ(F_ν(x))|^p dν(x).
pub fn wasserstein_p_between(nu: &TargetDensity, mu: &TargetDensity, p: f64) -> Result<FunctionalValue> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("W_p needs p ≥ 1, got {p}")));
    }
    // Gaussian pair: the coupling is linear
    if let (Family::Normal { var: a }, Family::Normal { var: b }) = (nu.family(), mu.family()) {
        let c = (a.sqrt() - b.sqrt()).abs();
        let m = crate::quadrature::gaussian_expectation(|z| z.abs().powf(p), &Default::default())?.value;
        return Ok(FunctionalValue::finite(FunctionalKind::Wp, c * m.powf(1.0 / p), 0.0).with_order(p));
    }
    let failure = std::cell::Cell::new(None::<Error>);
    let r = integrate_vec(
        |x| {
            let d = nu.density(x);
            if d < DENSITY_FLOOR {
                return [0.0];
            }
            let (c, s) = nu.cdf_sf(x);
            match mu.quantile_from(c, s) {
                Ok(y) if y.is_finite() => [(x - y).abs().powf(p) * d],
                Ok(_) => [0.0],
                Err(e) => {
                    failure.set(Some(e));
                    [0.0]
                }
            }
        },
        &nu.interval(),
        &opts(),
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if !r.converged || !r.value[0].is_finite() {
        return Ok(FunctionalValue { order: Some(p), ..FunctionalValue::divergent(FunctionalKind::Wp) });
    }
    let m = r.value[0].max(0.0);
    let v = m.powf(1.0 / p);
    let err = if m > 0.0 { v * r.error[0] / (p * m) } else { 0.0 };
    Ok(FunctionalValue::finite(FunctionalKind::Wp, v, err).with_order(p))
}

/// TV(ν, μ) = ½ ∫ |ρ - ρ_μ| dx against the reference, with the crossing
/// points of ρ and ρ_μ located first and used as breakpoints.
pub fn total_variation_1d(target: &TargetDensity) -> Result<FunctionalValue> {
    let reference = target.reference();
    let (rlo, rhi) = reference.support();
    let (lo, hi) = target.support();
    let iv0 = Interval::new(rlo, rhi).with_scale(target.interval().scale);
    let diff = |x: f64| target.density(x) - reference.density(x);
    let mut cuts: Vec<f64> = target.breakpoints().to_vec();
    for e in [lo, hi] {
        if e.is_finite() && e > rlo && e < rhi {
            cuts.push(e);
        }
    }
    let (t0, t1) = iv0.t_bounds();
    let n = 4000;
    let grid: Vec<f64> = (1..n).map(|k| iv0.x_of_t(t0 + (t1 - t0) * k as f64 / n as f64)).collect();
    for w in grid.windows(2) {
        let (fa, fb) = (diff(w[0]), diff(w[1]));
        if fa == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        let (mut a, mut b) = (w[0], w[1]);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if diff(m).signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        cuts.push(0.5 * (a + b));
    }
    let iv = iv0.with_breakpoints(&cuts);
    let r = integrate_vec(|x| [0.5 * diff(x).abs()], &iv, &opts())?;
    if !r.converged {
        return Err(Error::NoConvergence { estimate: r.value[0], error: r.error[0] });
    }
    Ok(FunctionalValue::finite(FunctionalKind::TV, r.value[0].min(1.0), r.error[0]))
}
