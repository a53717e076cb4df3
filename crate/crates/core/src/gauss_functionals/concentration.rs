use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::tails::fit_tail_exponent;
use crate::error::{Error, Result};
use crate::functionals::{fisher_information, relative_entropy, stein_discrepancy, stein_kernel_1d, NormKind};
use crate::inequalities::{hsi_rhs, Convention};
use crate::measures::{Family, TargetDensity};
use crate::montecarlo::{batch_rng, BATCH};
use crate::parallel::{pairwise_sum, par_map_range};

/// Rosenthal constant for the iid-sum analysis: K_p = 2p.
pub fn rosenthal_k(p: f64) -> f64 {
    2.0 * p
}

/// `samples` draws of `draw`, in batch order.
fn draws<F>(samples: usize, seed: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut crate::montecarlo::McRng) -> f64 + Sync + Send,
{
    let nb = samples.div_ceil(BATCH);
    par_map_range(nb, |b| {
        let m = BATCH.min(samples - b * BATCH);
        let mut rng = batch_rng(seed, b as u64);
        (0..m).map(|_| draw(&mut rng)).collect::<Vec<f64>>()
    })
    .concat()
}

/// (mean |v - v̄|^p)^{1/p}.
fn centered_norm(v: &[f64], p: f64) -> f64 {
    let m = pairwise_sum(v) / v.len() as f64;
    let pow: Vec<f64> = v.iter().map(|x| (x - m).abs().powf(p)).collect();
    (pairwise_sum(&pow) / v.len() as f64).powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: f64,
    /// ‖u - E u‖_p under ν.
    pub u_norm: f64,
    pub u_norm_over_sqrt_p: f64,
    pub s_p: f64,
    /// (∫|τ|^{p/2} dν)^{1/p}
    pub tau_moment: f64,
    /// S_p + √p (∫|τ|^{p/2} dν)^{1/p}
    pub rhs_unit: f64,
    /// S_p + √p + √p √S_p
    pub rhs_moments2: f64,
    /// ‖u‖_p / rhs_unit
    pub c_empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub target: String,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<MomentRow>,
    /// Smallest C with ‖u‖_p ≤ C rhs_unit on every row.
    pub c_max: f64,
    pub c_max_moments2: f64,
}

fn check_p(p_list: &[f64]) -> Result<()> {
    match p_list.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
        Some(p) => Err(Error::InvalidParameter(format!("moment orders must be ≥ 1, got {p}"))),
        None if p_list.is_empty() => Err(Error::InvalidParameter("empty list of moment orders".into())),
        None => Ok(()),
    }
}

/// Moment bounds for a one-dimensional law with a Stein kernel: empirical
/// ‖u‖_p against S_p + √p (∫|τ|^{p/2})^{1/p}.
pub fn concentration_moments<U>(target: &TargetDensity, u: U, p_list: &[f64], samples: usize, seed: u64) -> Result<ConcentrationReport>
where
    U: Fn(f64) -> f64 + Sync + Send,
{
    check_p(p_list)?;
    let kernel = stein_kernel_1d(target)?;
    let values = draws(samples, seed, |r| u(target.sample(r)));
    let mut rows = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let s_p = stein_discrepancy(target, &kernel, p, NormKind::Hs)?.value;
        let tau_moment = target.expect(|x| kernel.eval(x).abs().powf(p / 2.0))?.powf(1.0 / p);
        let u_norm = centered_norm(&values, p);
        let rhs_unit = s_p + p.sqrt() * tau_moment;
        rows.push(MomentRow {
            p,
            u_norm,
            u_norm_over_sqrt_p: u_norm / p.sqrt(),
            s_p,
            tau_moment,
            rhs_unit,
            rhs_moments2: s_p + p.sqrt() * (1.0 + s_p.sqrt()),
            c_empirical: u_norm / rhs_unit,
        });
    }
    Ok(ConcentrationReport {
        target: target.tag().to_string(),
        samples,
        seed,
        c_max: rows.iter().map(|r| r.c_empirical).fold(0.0, f64::max),
        c_max_moments2: rows.iter().map(|r| r.u_norm / r.rhs_moments2).fold(0.0, f64::max),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumMomentRow {
    pub p: f64,
    pub u_norm: f64,
    pub u_norm_over_sqrt_p: f64,
    /// S_p of one summand.
    pub s_p: f64,
    /// min(S_p, K_p n^{-1/2} S_p): the Rosenthal form needs unit variance.
    pub s_p_sum_bound: f64,
    /// √p (1 + n^{-1/2} √p S_p + n^{-1/4} √(p S_p))
    pub rhs: f64,
    pub c_empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumConcentrationReport {
    pub base: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<SumMomentRow>,
    pub c_max: f64,
    /// β in -log f(r) ≈ a + b r^β for the density of |u(T_n)| on [0, r_max].
    pub tail_exponent: f64,
    pub r_max: f64,
}

pub const TAIL_FIT_BINS: usize = 20;

/// T_n = n^{-1/2} Σ X_k for iid X_k ~ ν and u the coordinate map. Sums of
/// shifted gammas are drawn in closed form.
pub fn iid_sum_concentration(base: &TargetDensity, n: usize, p_list: &[f64], r_max: f64, samples: usize, seed: u64) -> Result<SumConcentrationReport> {
    check_p(p_list)?;
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one summand".into()));
    }
    let kernel = stein_kernel_1d(base)?;
    let unit_variance = (base.variance()? - 1.0).abs() < 1e-6;
    let scale = 1.0 / (n as f64).sqrt();
    let values = match base.family() {
        Family::ShiftedGamma { p, .. } => {
            let (shape, shift) = (*p * n as f64, *p * n as f64);
            let g = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            draws(samples, seed, |r| (g.sample(r) - shift) * scale)
        }
        _ => draws(samples, seed, |r| (0..n).map(|_| base.sample(r)).sum::<f64>() * scale),
    };
    let nf = n as f64;
    let mut rows = Vec::new();
    for &p in p_list {
        let s_p = stein_discrepancy(base, &kernel, p, NormKind::Hs)?.value;
        let s_p_sum_bound = if unit_variance { s_p.min(rosenthal_k(p) * s_p / nf.sqrt()) } else { s_p };
        let u_norm = centered_norm(&values, p);
        let rhs = p.sqrt() * (1.0 + p.sqrt() * s_p / nf.sqrt() + (p * s_p).sqrt() / nf.powf(0.25));
        rows.push(SumMomentRow { p, u_norm, u_norm_over_sqrt_p: u_norm / p.sqrt(), s_p, s_p_sum_bound, rhs, c_empirical: u_norm / rhs });
    }
    Ok(SumConcentrationReport {
        base: base.tag().to_string(),
        n,
        samples,
        seed,
        c_max: rows.iter().map(|r| r.c_empirical).fold(0.0, f64::max),
        rows,
        tail_exponent: fit_tail_exponent(&values, r_max, TAIL_FIT_BINS),
        r_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub base: String,
    pub n: usize,
    /// α(a) = Σ a_k⁴
    pub alpha: f64,
    pub s2_base: f64,
    pub i_base: f64,
    pub h_base: f64,
    /// α(a) S²: bound on S²(ν_T | γ).
    pub s2_sum_bound: f64,
    /// I(ν): Blachman–Stam bound on I(ν_T | γ).
    pub i_sum_bound: f64,
    /// ½ α S² log(1 + I/(α S²))
    pub entropy_bound: f64,
    /// α/(c/2 + (1 - c/2)α) H(ν), when a Poincaré constant c is given.
    pub poincare_bound: Option<f64>,
    pub conventions: Vec<Convention>,
}

pub const WEIGHT_TOL: f64 = 1e-9;

/// Entropic CLT rate for T = Σ a_k X_k from the functionals of one summand.
pub fn sum_discrepancy_clt(base: &TargetDensity, weights: &[f64], poincare: Option<f64>) -> Result<CltReport> {
    let norm: f64 = weights.iter().map(|a| a * a).sum();
    if weights.is_empty() || (norm - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Precondition(format!("weights must satisfy Σa² = 1, got {norm}")));
    }
    if let Some(c) = poincare {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("Poincaré constant must be positive, got {c}")));
        }
    }
    let alpha: f64 = weights.iter().map(|a| a.powi(4)).sum();
    let kernel = stein_kernel_1d(base)?;
    let s = stein_discrepancy(base, &kernel, 2.0, NormKind::Hs)?;
    let i = fisher_information(base)?;
    let h = relative_entropy(base)?;
    let val = |v: &crate::functionals::FunctionalValue| if v.diverged { f64::INFINITY } else { v.value };
    let (s2, iv, hv) = (val(&s).powi(2), val(&i), val(&h));
    let mut conventions = Vec::new();
    let entropy_bound = hsi_rhs(alpha * s2, iv, &mut conventions);
    Ok(CltReport {
        base: base.tag().to_string(),
        n: weights.len(),
        alpha,
        s2_base: s2,
        i_base: iv,
        h_base: hv,
        s2_sum_bound: alpha * s2,
        i_sum_bound: iv,
        entropy_bound,
        poincare_bound: poincare.map(|c| alpha / (0.5 * c + (1.0 - 0.5 * c) * alpha) * hv),
        conventions,
    })
}

pub fn equal_weights(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}

/// Histogram of T = Σ a_k X_k on `bins` cells over [lo, hi]: (center, density).
pub fn sum_histogram(base: &TargetDensity, weights: &[f64], lo: f64, hi: f64, bins: usize, samples: usize, seed: u64) -> Vec<(f64, f64)> {
    let v = draws(samples, seed, |r| weights.iter().map(|a| a * base.sample(r)).sum());
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in v {
        if x >= lo && x < hi {
            counts[(((x - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    counts.iter().enumerate().map(|(k, &c)| (lo + (k as f64 + 0.5) * w, c as f64 / (samples as f64 * w))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let g = TargetDensity::standard_gaussian();
        let r = concentration_moments(&g, |x| x, &[2.0], 200_000, 3).unwrap();
        let row = r.rows[0];
        assert!((row.u_norm - 1.0).abs() < 0.01 && row.s_p.abs() < 1e-9);
        assert!((row.rhs_unit - 2f64.sqrt()).abs() < 1e-6);
        assert!(r.c_max >= 0.69);
    }

    #[test]
    fn gamma_one_has_sp_equal_to_abs_moment() {
        let g = TargetDensity::centered_gamma(1.0).unwrap();
        let r = concentration_moments(&g, |x| x, &[2.0, 4.0], 100_000, 3).unwrap();
        // τ - 1 = X, so S_p^p = E|X|^p: E X² = 1, E X⁴ = 9
        assert!((r.rows[0].s_p - 1.0).abs() < 1e-4, "{:?}", r.rows[0]);
        assert!((r.rows[1].s_p - 9f64.powf(0.25)).abs() < 1e-4, "{:?}", r.rows[1]);
    }

    #[test]
    fn clt_arithmetic() {
        let g = TargetDensity::centered_gamma(3.0).unwrap();
        let r = sum_discrepancy_clt(&g, &equal_weights(100), None).unwrap();
        let want = 7.0 / 200.0 * (1.0 + 200.0 / 7.0f64).ln();
        assert!((r.entropy_bound - want).abs() < 1e-3 * want, "{r:?}");
        let one = sum_discrepancy_clt(&g, &[1.0], None).unwrap();
        let mut e = [0.0; 100];
        e[0] = 1.0;
        let first = sum_discrepancy_clt(&g, &e, Some(1.0)).unwrap();
        assert_eq!(one.entropy_bound, first.entropy_bound);
        assert!((first.poincare_bound.unwrap() - first.h_base).abs() < 1e-12);
        assert!(sum_discrepancy_clt(&g, &[0.5, 0.5], None).is_err());
    }
}
