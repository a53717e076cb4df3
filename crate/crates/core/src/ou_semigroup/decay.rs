use serde::{Deserialize, Serialize};

use super::mehler_evolve;
use crate::error::Result;
use crate::functionals::{fisher_information, relative_entropy, stein_discrepancy, NormKind, SteinKernel};
use crate::measures::TargetDensity;
use crate::parallel::par_map;

/// Functionals of ν^t and every decay bound at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub h: f64,
    pub i: f64,
    pub s: f64,
    /// e^{-2t} I(ν)
    pub bound_i_lsi: f64,
    /// e^{-4t} S²/(1 - e^{-2t})
    pub bound_i_stein: f64,
    /// e^{-2t} S² I/(S² + (e^{2t} - 1) I)
    pub bound_i_improved: f64,
    /// e^{-2t} H(ν)
    pub bound_h_exp: f64,
    /// e^{-4t} H/(e^{-2t} + (1 - e^{-2t}) H/S²)
    pub bound_h_hsi1: f64,
    /// e^{-4t} S²/(1 - e^{-2t})
    pub bound_h_hsi2: f64,
    /// e^{-2t} S(ν)
    pub bound_s: f64,
    pub diverged: bool,
}

pub const DECAY_CSV_HEADER: &str = "t,H,I,S,bound_I_lsi,bound_I_stein,bound_I_improved,bound_H_exp,bound_H_hsi1,bound_H_hsi2";

/// e^{-4t} S²/(1 - e^{-2t}), with 0 when S = 0.
fn stein_envelope(s2: f64, t: f64) -> f64 {
    if s2 == 0.0 {
        0.0
    } else if t == 0.0 {
        f64::INFINITY
    } else {
        (-4.0 * t).exp() * s2 / -(-2.0 * t).exp_m1()
    }
}

fn improved(s2: f64, i: f64, t: f64) -> f64 {
    if s2 == 0.0 || i == 0.0 {
        0.0
    } else if t == 0.0 {
        i
    } else if i.is_infinite() {
        stein_envelope(s2, t)
    } else {
        (-2.0 * t).exp() * s2 * i / (s2 + (2.0 * t).exp_m1() * i)
    }
}

fn hsi_decay(h: f64, s2: f64, t: f64) -> f64 {
    if h == 0.0 || s2 == 0.0 {
        return 0.0;
    }
    let e = (-2.0 * t).exp();
    e * e * h / (e + (1.0 - e) * h / s2)
}

impl DecayRow {
    fn new(t: f64, (h, i, s): (f64, f64, f64), (h0, i0, s0): (f64, f64, f64), diverged: bool) -> Self {
        let s2 = s0 * s0;
        DecayRow {
            t,
            h,
            i,
            s,
            bound_i_lsi: if i0 == 0.0 { 0.0 } else { (-2.0 * t).exp() * i0 },
            bound_i_stein: stein_envelope(s2, t),
            bound_i_improved: improved(s2, i0, t),
            bound_h_exp: (-2.0 * t).exp() * h0,
            bound_h_hsi1: hsi_decay(h0, s2, t),
            bound_h_hsi2: stein_envelope(s2, t),
            bound_s: (-2.0 * t).exp() * s0,
            diverged,
        }
    }

    /// Smallest bound on I(ν^t).
    pub fn min_bound_i(&self) -> f64 {
        self.bound_i_lsi.min(self.bound_i_stein).min(self.bound_i_improved)
    }

    /// Smallest bound on H(ν^t).
    pub fn min_bound_h(&self) -> f64 {
        self.bound_h_exp.min(self.bound_h_hsi1).min(self.bound_h_hsi2)
    }
}

fn functionals_at(target: &TargetDensity, kernel: &SteinKernel, t: f64) -> Result<((f64, f64, f64), bool)> {
    let ev = mehler_evolve(target, t)?;
    let k = ev.stein_kernel(kernel)?;
    let h = relative_entropy(ev.target())?;
    let i = fisher_information(ev.target())?;
    let s = stein_discrepancy(ev.target(), &k, 2.0, NormKind::Hs)?;
    let diverged = h.diverged || i.diverged || s.diverged;
    Ok(((h.value, i.value, s.value), diverged))
}

/// H, I, S of ν^t on a time grid together with the decay bounds built from
/// the functionals of ν. Times are evaluated in parallel.
pub fn decay_curves(target: &TargetDensity, kernel: &SteinKernel, times: &[f64]) -> Result<Vec<DecayRow>> {
    let (base, base_div) = functionals_at(target, kernel, 0.0)?;
    let rows = par_map(times, |&t| -> Result<DecayRow> {
        let (v, d) = if t == 0.0 { (base, base_div) } else { functionals_at(target, kernel, t)? };
        Ok(DecayRow::new(t, v, base, d || base_div))
    });
    rows.into_iter().collect()
}

fn csv_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

/// CSV with [`DECAY_CSV_HEADER`] and 12 significant digits per value.
pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from(DECAY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cols = [r.t, r.h, r.i, r.s, r.bound_i_lsi, r.bound_i_stein, r.bound_i_improved, r.bound_h_exp, r.bound_h_hsi1, r.bound_h_hsi2];
        out.push_str(&cols.iter().map(|&x| csv_num(x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Integrated de Bruijn identity H(ν) = ∫₀^∞ I(ν^t) dt, checked numerically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeBruijn {
    pub entropy: f64,
    /// ∫₀^T I(ν^t) dt.
    pub integral: f64,
    /// Bound on ∫_T^∞ I(ν^t) dt from e^{-4t}S²/(1 - e^{-2t}).
    pub tail: f64,
    pub residual: f64,
    /// Set when I(ν) diverges: the piece over (0, t₀] is then unbounded
    /// and left out of `integral`.
    pub head_unbounded: bool,
}

/// Start of the numerical time integral.
pub const DE_BRUIJN_T0: f64 = 1e-4;

/// ∫_{t₀}^T I(ν^t) dt by Simpson's rule in s with t = t₀ + (T - t₀)s²,
/// `panels` (rounded up to even) panels, plus ∫₀^{t₀} e^{-2t} I(ν) dt and the
/// analytic tail beyond T.
pub fn de_bruijn_check(target: &TargetDensity, kernel: &SteinKernel, horizon: f64, panels: usize) -> Result<DeBruijn> {
    let h = relative_entropy(target)?.value;
    let s = stein_discrepancy(target, kernel, 2.0, NormKind::Hs)?.value;
    let i0 = fisher_information(target)?;
    let s2 = s * s;
    if h == 0.0 && s2 == 0.0 {
        return Ok(DeBruijn { entropy: 0.0, integral: 0.0, tail: 0.0, residual: 0.0, head_unbounded: false });
    }
    let n = panels.max(2).next_multiple_of(2);
    let t0 = DE_BRUIJN_T0;
    let span = horizon - t0;
    let nodes: Vec<usize> = (0..=n).collect();
    let values = par_map(&nodes, |&k| -> Result<f64> {
        let u = k as f64 / n as f64;
        let t = t0 + span * u * u;
        let ev = mehler_evolve(target, t)?;
        let i = fisher_information(ev.target())?.value;
        Ok(i * 2.0 * span * u)
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let du = 1.0 / n as f64;
    let mut acc = Vec::with_capacity(n + 1);
    for (k, v) in values.iter().enumerate() {
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        acc.push(w * v);
    }
    let body = crate::parallel::pairwise_sum(&acc) * du / 3.0;
    let head_unbounded = !i0.is_finite();
    let head = if head_unbounded { 0.0 } else { 0.5 * i0.value * -(-2.0 * t0).exp_m1() };
    // ∫_T^∞ e^{-4t}S²/(1 - e^{-2t}) dt = ½S²(-u - log(1 - u)), u = e^{-2T}
    let u = (-2.0 * horizon).exp();
    let tail = 0.5 * s2 * (-u - (-u).ln_1p());
    let integral = head + body;
    Ok(DeBruijn { entropy: h, integral, tail, residual: h - integral - tail, head_unbounded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::stein_kernel_1d;

    fn row_ok(r: &DecayRow) {
        let tol = 1.0 + 1e-6;
        assert!(r.s <= r.bound_s * tol + 1e-12, "{r:?}");
        assert!(r.i <= r.min_bound_i() * tol + 1e-12, "{r:?}");
        assert!(r.h <= r.bound_h_hsi1 * tol + 1e-12 && r.h <= r.bound_h_hsi2 * tol + 1e-12, "{r:?}");
        assert!(r.h <= r.bound_h_exp * tol + 1e-12, "{r:?}");
    }

    #[test]
    fn gaussian_closed_forms() {
        let nu = TargetDensity::gaussian_scale(2.0).unwrap();
        let k = stein_kernel_1d(&nu).unwrap();
        let rows = decay_curves(&nu, &k, &[0.0, 0.25, 0.5, 1.0, 2.0]).unwrap();
        for r in &rows {
            let v = 1.0 + (-2.0 * r.t).exp();
            let h = 0.5 * (v - 1.0 - v.ln());
            assert!((r.h - h).abs() < 1e-9 * h.max(1e-3), "{r:?}");
            assert!((r.s - (-2.0 * r.t).exp()).abs() < 1e-12);
            // the improved decay is an equality along the Gaussian flow
            assert!((r.i - r.bound_i_improved).abs() < 1e-7 * r.i, "{r:?}");
            row_ok(r);
        }
        let csv = decay_csv(&rows);
        assert!(csv.starts_with(DECAY_CSV_HEADER));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn reference_rows_vanish() {
        let g = TargetDensity::standard_gaussian();
        let rows = decay_curves(&g, &stein_kernel_1d(&g).unwrap(), &[0.0, 1.0]).unwrap();
        for r in rows {
            assert_eq!((r.h, r.i, r.s), (0.0, 0.0, 0.0));
            assert_eq!((r.bound_i_stein, r.bound_h_hsi1), (0.0, 0.0));
        }
    }

    #[test]
    fn gamma_decay_and_monotone_entropy() {
        let nu = TargetDensity::centered_gamma(3.0).unwrap();
        let k = stein_kernel_1d(&nu).unwrap();
        let rows = decay_curves(&nu, &k, &[0.0, 0.25, 0.75, 1.5, 3.0]).unwrap();
        rows.iter().for_each(row_ok);
        assert!(rows.windows(2).all(|w| w[1].h <= w[0].h));
    }

    #[test]
    fn de_bruijn_gaussian() {
        let nu = TargetDensity::gaussian_scale(2.0).unwrap();
        let d = de_bruijn_check(&nu, &stein_kernel_1d(&nu).unwrap(), 8.0, 64).unwrap();
        assert!((d.entropy - 0.5 * (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(d.residual.abs() < 1e-4, "{d:?}");
    }
}
