use serde::{Deserialize, Serialize};

use super::Lazy;
use crate::error::{Error, Result};
use crate::measures::TargetDensity;

/// H, I, S and W₂ of a target, the inputs of the interpolating family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwsiInputs {
    pub h: f64,
    pub i: f64,
    pub s: f64,
    pub w2: f64,
}

impl HwsiInputs {
    pub fn of(target: &TargetDensity) -> Result<Self> {
        if !target.reference().is_standard_gaussian() {
            return Err(Error::Precondition("the HWSI family is stated against the standard Gaussian".into()));
        }
        let f = Lazy::new(target);
        let v = HwsiInputs { h: f.h()?, i: f.i()?, s: f.s()?, w2: f.w2()? };
        if [v.h, v.i, v.s, v.w2].iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition(format!("HWSI needs finite H, I, S, W2, got {v:?}")));
        }
        Ok(v)
    }
}

/// Φ(α, β) = αI + (α - log α)S² + ((1 - β)/β)W₂² + (log β - β)S².
///
/// The entropy bound is H ≤ ½ inf Φ over 0 < α ≤ β ≤ 1.
pub fn hwsi_phi(v: &HwsiInputs, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= beta && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < α ≤ β ≤ 1, got α = {alpha}, β = {beta}")));
    }
    let s2 = v.s * v.s;
    Ok(alpha * v.i + (alpha - alpha.ln()) * s2 + (1.0 - beta) / beta * v.w2 * v.w2 + (beta.ln() - beta) * s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizerLocation {
    /// α = β: the HWI end.
    Diagonal,
    /// β = 1: the HSI end.
    BetaOne,
    /// α = β = 1.
    Corner,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwsiMinimum {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    /// ½Φ at the minimizer.
    pub bound: f64,
    pub location: MinimizerLocation,
    pub inputs: HwsiInputs,
}

const BETA_GRID: usize = 2000;
const BETA_MIN: f64 = 1e-9;
const LOCATION_TOL: f64 = 1e-6;

/// Minimizes Φ over the triangle. For fixed β, Φ is convex in α with
/// unconstrained minimizer S²/(I + S²), so only β is searched: a log grid
/// followed by golden-section refinement around the best node.
pub fn hwsi_phi_min(target: &TargetDensity) -> Result<HwsiMinimum> {
    let v = HwsiInputs::of(target)?;
    minimize(v)
}

pub(crate) fn minimize(v: HwsiInputs) -> Result<HwsiMinimum> {
    let s2 = v.s * v.s;
    if s2 == 0.0 && v.i == 0.0 && v.w2 == 0.0 {
        return Ok(HwsiMinimum { alpha: 1.0, beta: 1.0, phi: 0.0, bound: 0.0, location: MinimizerLocation::Corner, inputs: v });
    }
    let a0 = if s2 > 0.0 { s2 / (v.i + s2) } else { 0.0 };
    let alpha_of = |beta: f64| a0.min(beta).max(f64::MIN_POSITIVE);
    let g = |ln_b: f64| {
        let b = ln_b.exp().min(1.0);
        hwsi_phi(&v, alpha_of(b), b).unwrap_or(f64::INFINITY)
    };
    let (l0, l1) = (BETA_MIN.ln(), 0.0);
    let step = (l1 - l0) / BETA_GRID as f64;
    let (mut best_k, mut best) = (BETA_GRID, g(l1));
    for k in 0..BETA_GRID {
        let y = g(l0 + step * k as f64);
        if y < best {
            (best_k, best) = (k, y);
        }
    }
    let c = l0 + step * best_k as f64;
    let (mut lo, mut hi) = ((c - step).max(l0), (c + step).min(l1));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut p, mut q) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut fp, mut fq) = (g(p), g(q));
    for _ in 0..100 {
        if fp <= fq {
            (hi, q, fq) = (q, p, fp);
            p = hi - r * (hi - lo);
            fp = g(p);
        } else {
            (lo, p, fp) = (p, q, fq);
            q = lo + r * (hi - lo);
            fq = g(q);
        }
    }
    let (mut ln_b, mut phi) = if fp <= fq { (p, fp) } else { (q, fq) };
    if best <= phi {
        (ln_b, phi) = (c, best);
    }
    let beta = ln_b.exp().min(1.0);
    let alpha = alpha_of(beta);
    let diag = (alpha - beta).abs() <= LOCATION_TOL * beta;
    let one = (1.0 - beta).abs() <= LOCATION_TOL;
    let location = match (diag, one) {
        (true, true) => MinimizerLocation::Corner,
        (true, false) => MinimizerLocation::Diagonal,
        (false, true) => MinimizerLocation::BetaOne,
        (false, false) => MinimizerLocation::Interior,
    };
    Ok(HwsiMinimum { alpha, beta, phi, bound: 0.5 * phi, location, inputs: v })
}
