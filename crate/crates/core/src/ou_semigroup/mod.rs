//! The Ornstein–Uhlenbeck semigroup P_t f(x) = E f(e^{-t}x + √(1-e^{-2t}) Z)
//! acting on 1D targets relative to the standard Gaussian.
//!
//! The evolved density is the law of F_t = e^{-t}F + √(1-e^{-2t}) Z,
//! ρ_t(x) = ∫ ρ(y) φ_s(x - e^{-t}y) dy with s² = 1 - e^{-2t}, so that
//! P_t h = ρ_t/φ. Each ρ_t(x) is an adaptive integral over the base support,
//! which keeps spiky and boundary-singular bases accurate where a fixed
//! Gauss–Hermite rule in Mehler's form would not be.

mod decay;
mod score;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub use decay::{de_bruijn_check, decay_curves, decay_csv, DeBruijn, DecayRow, DECAY_CSV_HEADER};
pub use score::{score_mc, ScoreEstimate, SCORE_MIN_HITS};

use crate::error::{Error, Result};
use crate::functionals::{KernelProvenance, SteinKernel, DENSITY_FLOOR};
use crate::measures::special::LN_SQRT_2PI;
use crate::measures::{Family, Reference1D, TargetDensity};
use crate::quadrature::{default_hermite, integrate_vec, AdaptiveOptions};

/// P_t f(x) by Mehler's formula with the 128-node Gauss–Hermite rule.
pub fn mehler_apply<F: Fn(f64) -> f64>(f: F, t: f64, x: f64) -> f64 {
    if t == 0.0 {
        return f(x);
    }
    let (a, s) = ((-t).exp(), (-(-2.0 * t).exp_m1()).sqrt());
    default_hermite().apply(|z| f(a * x + s * z))
}

/// What the second component of the convolution carries.
#[derive(Clone)]
enum Weight {
    /// x - e^{-t}y, giving ρ_t'.
    Slope,
    /// τ_ν(y), giving P_t(hτ).
    Kernel(SteinKernel),
}

/// ∫ ρ(y) k_t(x, y) [1, w(x, y)] dy, memoized per x. Values are returned
/// as (L, m0, m1) with the true integrals e^L·m0 and e^L·m1.
struct Convolution {
    base: TargetDensity,
    weight: Weight,
    decay: f64,
    s2: f64,
    memo: Mutex<HashMap<u64, (f64, f64, f64)>>,
}

impl Convolution {
    fn new(base: TargetDensity, weight: Weight, t: f64) -> Self {
        Convolution { base, weight, decay: (-t).exp(), s2: -(-2.0 * t).exp_m1(), memo: Mutex::new(HashMap::new()) }
    }

    fn exponent(&self, x: f64, y: f64) -> f64 {
        let r = x - self.decay * y;
        self.base.log_density(y) - 0.5 * r * r / self.s2
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        if let Some(v) = self.memo.lock().expect("memo lock").get(&x.to_bits()) {
            return *v;
        }
        let v = self.compute(x);
        self.memo.lock().expect("memo lock").insert(x.to_bits(), v);
        v
    }

    /// Location, value and width of the maximum of y ↦ log ρ(y) - (x - e^{-t}y)²/2s²:
    /// a scan over the mapped base domain, golden-section refinement, then
    /// the curvature at the peak.
    fn peak(&self, x: f64) -> Option<(f64, f64, f64)> {
        let (lo, hi) = self.base.support();
        let w = self.s2.sqrt() / self.decay;
        let iv = self.base.interval();
        let (t0, t1) = iv.t_bounds();
        const SCAN: usize = 128;
        let mut ys: Vec<f64> = (1..SCAN).map(|k| iv.x_of_t(t0 + (t1 - t0) * k as f64 / SCAN as f64)).collect();
        ys.extend(self.base.breakpoints().iter().copied().filter(|&y| y > lo && y < hi));
        let c = x / self.decay;
        if c > lo && c < hi {
            ys.push(c);
        }
        ys.sort_by(f64::total_cmp);
        let es: Vec<f64> = ys.iter().map(|&y| self.exponent(x, y)).collect();
        let k = (0..ys.len()).filter(|&k| es[k].is_finite()).max_by(|&i, &j| es[i].total_cmp(&es[j]))?;
        let mut a = if k == 0 { if lo.is_finite() { lo } else { ys[0] - 10.0 * w } } else { ys[k - 1] };
        let mut b = if k + 1 == ys.len() { if hi.is_finite() { hi } else { ys[k] + 10.0 * w } } else { ys[k + 1] };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |y: f64| {
            let v = self.exponent(x, y);
            if v.is_nan() { f64::NEG_INFINITY } else { v }
        };
        let (mut p, mut q) = (b - g * (b - a), a + g * (b - a));
        let (mut fp, mut fq) = (f(p), f(q));
        for _ in 0..80 {
            if fp >= fq {
                b = q;
                (q, fq) = (p, fp);
                p = b - g * (b - a);
                fp = f(p);
            } else {
                a = p;
                (p, fp) = (q, fq);
                q = a + g * (b - a);
                fq = f(q);
            }
            if (b - a) <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
        }
        let (mut y, mut e) = if fp >= fq { (p, fp) } else { (q, fq) };
        if es[k] > e {
            (y, e) = (ys[k], es[k]);
        }
        let h = 1e-4 * w.min(1.0 + y.abs());
        let curv = (f(y + h) - 2.0 * e + f(y - h)) / (h * h);
        let width = if curv < 0.0 && curv.is_finite() { w.min(1.0 / (-curv).sqrt()) } else { w };
        Some((y, e, width))
    }

    fn compute(&self, x: f64) -> (f64, f64, f64) {
        let (lo, hi) = self.base.support();
        let Some((y0, l, width)) = self.peak(x) else {
            return (f64::NEG_INFINITY, 0.0, 0.0);
        };
        let c = x / self.decay;
        let w = self.s2.sqrt() / self.decay;
        let inside = |y: f64| y > lo && y < hi;
        let mut cuts: Vec<f64> = [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0].iter().map(|k| y0 + k * width).filter(|&y| inside(y)).collect();
        cuts.extend([-3.0, 3.0].iter().map(|k| c + k * w).filter(|&y| inside(y)));
        cuts.extend_from_slice(self.base.breakpoints());
        let iv = self.base.interval().with_breakpoints(&cuts);
        let opts = AdaptiveOptions { abs_tol: 1e-16, rel_tol: 1e-12, max_segments: 2000, initial_pieces: 1 };
        let r = integrate_vec(
            |y| {
                let e = self.exponent(x, y) - l;
                if !e.is_finite() {
                    return [0.0; 2];
                }
                let k = e.exp();
                let w = match &self.weight {
                    Weight::Slope => x - self.decay * y,
                    Weight::Kernel(tau) => {
                        let v = tau.normalized(y);
                        if v.is_finite() && self.base.density(y) >= DENSITY_FLOOR { v } else { 0.0 }
                    }
                };
                [k, k * w]
            },
            &iv,
            &opts,
        );
        match r {
            Ok(r) => (l, r.value[0], r.value[1]),
            Err(_) => (l, f64::NAN, f64::NAN),
        }
    }

    /// log ρ_t(x).
    fn log_density(&self, x: f64) -> f64 {
        let (l, m0, _) = self.eval(x);
        if m0 > 0.0 { l + m0.ln() - 0.5 * self.s2.ln() - LN_SQRT_2PI } else if m0 == 0.0 { f64::NEG_INFINITY } else { f64::NAN }
    }

    /// ρ_t'/ρ_t.
    fn dlog_density(&self, x: f64) -> f64 {
        let (_, m0, m1) = self.eval(x);
        -m1 / (m0 * self.s2)
    }

    /// ∫ρτ k / ∫ρ k = P_t(hτ)/P_t h.
    fn ratio(&self, x: f64) -> f64 {
        let (_, m0, m1) = self.eval(x);
        m1 / m0
    }
}

/// A target pushed forward along the OU flow for time t.
#[derive(Clone)]
pub struct EvolvedTarget {
    base: TargetDensity,
    t: f64,
    evolved: TargetDensity,
}

impl std::fmt::Debug for EvolvedTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvolvedTarget").field("base", &self.base.tag()).field("t", &self.t).finish()
    }
}

fn check_reference(target: &TargetDensity) -> Result<()> {
    if target.reference().is_standard_gaussian() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "the OU flow is defined relative to the standard Gaussian, not {}",
            target.reference().name()
        )))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be finite and ≥ 0, got {t}")))
    }
}

/// ν^t, the law of e^{-t}F + √(1-e^{-2t}) Z with F ~ ν.
pub fn mehler_evolve(target: &TargetDensity, t: f64) -> Result<EvolvedTarget> {
    check_reference(target)?;
    check_time(t)?;
    let fixed = t == 0.0 || matches!(target.family(), Family::Normal { var } if *var == 1.0) || matches!(target.family(), Family::Reference);
    if fixed {
        return Ok(EvolvedTarget { base: target.clone(), t, evolved: target.clone() });
    }
    let conv = Arc::new(Convolution::new(target.clone(), Weight::Slope, t));
    let a = (-t).exp();
    let (lo, hi) = target.support();
    let mut cuts: Vec<f64> = target.breakpoints().iter().map(|y| a * y).collect();
    cuts.extend([lo, hi].iter().filter(|v| v.is_finite()).map(|y| a * y));
    let scale = a * target.interval().scale + conv.s2.sqrt();
    let (c1, c2) = (conv.clone(), conv.clone());
    let evolved = TargetDensity::from_normalized(
        format!("{}@t={t}", target.tag()),
        (f64::NEG_INFINITY, f64::INFINITY),
        Arc::new(move |x| c1.log_density(x)),
        Some(Arc::new(move |x| c2.dlog_density(x))),
        cuts,
        scale,
    )?;
    Ok(EvolvedTarget { base: target.clone(), t, evolved })
}

impl EvolvedTarget {
    pub fn base(&self) -> &TargetDensity {
        &self.base
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// ν^t as a target density, usable by every functional.
    pub fn target(&self) -> &TargetDensity {
        &self.evolved
    }

    /// P_t h(x) = ρ_t(x)/φ(x).
    pub fn p_t_h(&self, x: f64) -> f64 {
        self.evolved.log_relative(x).exp()
    }

    /// v_t'(x) = (log P_t h)'(x).
    pub fn score(&self, x: f64) -> f64 {
        self.evolved.dlog_relative(x)
    }

    /// τ_{ν^t} = e^{-2t} P_t(hτ)/P_t h + 1 - e^{-2t}.
    pub fn stein_kernel(&self, kernel: &SteinKernel) -> Result<SteinKernel> {
        if !matches!(kernel.reference(), Reference1D::Gaussian { var } if *var == 1.0) {
            return Err(Error::Precondition("the base kernel must be relative to the standard Gaussian".into()));
        }
        let t = self.t;
        if t == 0.0 {
            return Ok(kernel.clone());
        }
        let e2 = (-2.0 * t).exp();
        let reference = Reference1D::standard_gaussian();
        if let Some(c) = kernel.as_constant() {
            return Ok(SteinKernel::quadratic(0.0, 0.0, e2 * c + (1.0 - e2), KernelProvenance::Evolved, reference));
        }
        let conv = Convolution::new(self.base.clone(), Weight::Kernel(kernel.clone()), t);
        let probe = conv.ratio(0.0);
        if !probe.is_finite() {
            return Err(Error::OutsideSupport { x: 0.0 });
        }
        Ok(SteinKernel::from_fn(move |x| e2 * conv.ratio(x) + (1.0 - e2), KernelProvenance::Evolved, reference))
    }
}

/// Stein kernel of ν^t from a kernel of ν.
pub fn evolved_stein_kernel(target: &TargetDensity, kernel: &SteinKernel, t: f64) -> Result<SteinKernel> {
    mehler_evolve(target, t)?.stein_kernel(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{stein_identity_residual, stein_kernel_1d};

    #[test]
    fn mehler_on_simple_functions() {
        for &t in &[0.0, 0.3, 1.0, 4.0] {
            for &x in &[-2.0, 0.0, 1.5] {
                assert!((mehler_apply(|y| y, t, x) - (-t).exp() * x).abs() < 1e-13);
                assert!((mehler_apply(|_| 1.0, t, x) - 1.0).abs() < 1e-13);
                // He_2 is an eigenfunction with eigenvalue 2
                let he2 = mehler_apply(|y| y * y - 1.0, t, x);
                assert!((he2 - (-2.0 * t).exp() * (x * x - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_flow() {
        let nu = TargetDensity::gaussian_scale(2.0).unwrap();
        let t = 0.5 * 2f64.ln();
        let ev = mehler_evolve(&nu, t).unwrap();
        let exact = TargetDensity::gaussian_scale(1.5).unwrap();
        for &x in &[-4.0, -1.0, 0.0, 0.7, 3.0] {
            let (a, b) = (ev.target().log_density(x), exact.log_density(x));
            assert!((a - b).abs() < 1e-10, "x={x}: {a} vs {b}");
            assert!((ev.target().dlog_density(x) + x / 1.5).abs() < 1e-9);
            // Mehler quadrature of h agrees with the convolution
            let m = mehler_apply(|y| nu.log_relative(y).exp(), t, x);
            assert!((ev.p_t_h(x) - m).abs() < 1e-9 * m);
        }
        assert!((ev.target().variance().unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn reference_is_fixed() {
        let g = TargetDensity::standard_gaussian();
        let ev = mehler_evolve(&g, 0.7).unwrap();
        assert_eq!(ev.p_t_h(1.3), 1.0);
        let k = ev.stein_kernel(&stein_kernel_1d(&g).unwrap()).unwrap();
        assert_eq!(k.eval(2.0), 1.0);
    }

    #[test]
    fn constant_kernel_passes_through() {
        let nu = TargetDensity::gaussian_scale(2.0).unwrap();
        let k = evolved_stein_kernel(&nu, &stein_kernel_1d(&nu).unwrap(), 0.4).unwrap();
        assert_eq!(k.provenance(), KernelProvenance::Evolved);
        assert!((k.eval(0.3) - (1.0 + (-0.8f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn evolved_kernel_satisfies_stein_identity() {
        for nu in [TargetDensity::centered_gamma(3.0).unwrap(), TargetDensity::mixture(10.0, 0.1).unwrap()] {
            let ev = mehler_evolve(&nu, 0.5).unwrap();
            let k = ev.stein_kernel(&stein_kernel_1d(&nu).unwrap()).unwrap();
            let r = stein_identity_residual(ev.target(), &k, &[1, 2, 3, 4]).unwrap();
            assert!(r < 1e-7, "{}: {r}", nu.tag());
        }
    }

    #[test]
    fn semigroup_property() {
        let nu = TargetDensity::centered_gamma(3.0).unwrap();
        let once = mehler_evolve(&nu, 1.0).unwrap();
        let twice = mehler_evolve(mehler_evolve(&nu, 0.3).unwrap().target(), 0.7).unwrap();
        for k in 0..=8 {
            let x = -4.0 + k as f64;
            let (a, b) = (once.p_t_h(x), twice.p_t_h(x));
            assert!((a - b).abs() < 1e-6, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn relaxes_to_one() {
        let nu = TargetDensity::centered_gamma(1.0).unwrap();
        let gaps: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&t| (mehler_evolve(&nu, t).unwrap().p_t_h(0.0) - 1.0).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mehler_evolve(&TargetDensity::standard_gaussian(), -1.0).is_err());
        let g = TargetDensity::of_reference(Reference1D::gamma(3.0).unwrap());
        assert!(matches!(mehler_evolve(&g, 1.0), Err(Error::Precondition(_))));
    }
}
